//! Conical targets: k-spiders and books of k half-planes.
//!
//! Both families are nonpositively curved (CAT(0)) complexes with a single
//! cone point `0_X`, and both are small enough to admit closed-form
//! geodesics, cone scalings and weighted barycenters:
//!
//! * a **spider** is k rays `[0, ∞)` glued at a common vertex; any two rays
//!   form an isometric copy of the real line (a flat);
//! * a **book** is k half-planes `{(s, t) : t ≥ 0}` glued along the spine
//!   `t = 0`; any two pages unfold into an isometric copy of the plane.
//!
//! Points on the shared strata are canonicalized (face 0) so that equality
//! of [`TargetPoint`]s is meaningful.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ComplexKind {
    Spider,
    Book,
}

/// A conical target complex: `Spider(k)` or `Book(k)` with `k ≥ 3`.
///
/// `k ≤ 2` is rejected: a 2-spider is a line and a 2-book is a plane, so no
/// singular behavior is possible there.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TargetComplex {
    kind: ComplexKind,
    faces: u32,
}

/// A point on a [`TargetComplex`]: a face index plus local coordinates.
///
/// Spider: `a` is the ray coordinate `ρ ≥ 0` (`b` is unused and kept at 0).
/// Book: `(a, b) = (s, t)` with the spine coordinate `s` and page height
/// `t ≥ 0`.
///
/// Canonical forms: the spider vertex is `(face 0, ρ = 0)`; book spine
/// points are `(face 0, (s, 0))`. Constructors enforce this, so derived
/// equality is exact equality of points of the complex.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TargetPoint {
    face: u32,
    a: f64,
    b: f64,
}

impl TargetPoint {
    pub(crate) fn raw_spider(face: u32, rho: f64) -> Self {
        if rho == 0.0 {
            TargetPoint { face: 0, a: 0.0, b: 0.0 }
        } else {
            TargetPoint { face, a: rho, b: 0.0 }
        }
    }

    pub(crate) fn raw_book(face: u32, s: f64, t: f64) -> Self {
        if t == 0.0 {
            TargetPoint { face: 0, a: s, b: 0.0 }
        } else {
            TargetPoint { face, a: s, b: t }
        }
    }

    pub fn face(&self) -> u32 {
        self.face
    }

    /// Local coordinates `(ρ, 0)` for spiders, `(s, t)` for books.
    pub fn coords(&self) -> (f64, f64) {
        (self.a, self.b)
    }
}

impl TargetComplex {
    pub fn spider(k: u32) -> Result<Self> {
        if k < 3 {
            return Err(Error::TooFewFaces(k));
        }
        Ok(TargetComplex { kind: ComplexKind::Spider, faces: k })
    }

    pub fn book(k: u32) -> Result<Self> {
        if k < 3 {
            return Err(Error::TooFewFaces(k));
        }
        Ok(TargetComplex { kind: ComplexKind::Book, faces: k })
    }

    pub fn kind(&self) -> ComplexKind {
        self.kind
    }

    pub fn face_count(&self) -> u32 {
        self.faces
    }

    /// Dimension of a Euclidean space the complex embeds into isometrically
    /// on simplices. Diagnostics only; no computation uses an embedding.
    pub fn embedding_dim(&self) -> u32 {
        match self.kind {
            ComplexKind::Spider => self.faces,
            ComplexKind::Book => self.faces + 1,
        }
    }

    /// The cone point `0_X`.
    pub fn origin(&self) -> TargetPoint {
        TargetPoint { face: 0, a: 0.0, b: 0.0 }
    }

    /// Build a point, validating the face index and coordinate signs.
    pub fn point(&self, face: u32, a: f64, b: f64) -> Result<TargetPoint> {
        if face >= self.faces {
            return Err(Error::FaceOutOfRange { face, count: self.faces });
        }
        match self.kind {
            ComplexKind::Spider => {
                if !(a >= 0.0) || b != 0.0 {
                    return Err(Error::InvalidCoordinate(format!(
                        "spider point needs rho >= 0 and no second coordinate, got ({a}, {b})"
                    )));
                }
                Ok(TargetPoint::raw_spider(face, a))
            }
            ComplexKind::Book => {
                if !(b >= 0.0) || !a.is_finite() {
                    return Err(Error::InvalidCoordinate(format!(
                        "book point needs t >= 0, got ({a}, {b})"
                    )));
                }
                Ok(TargetPoint::raw_book(face, a, b))
            }
        }
    }

    pub fn validate_point(&self, p: &TargetPoint) -> Result<()> {
        self.point(p.face, p.a, p.b).map(|_| ())
    }

    /// Geodesic distance `d_X(p, q)`.
    ///
    /// Spider: `|ρ_p − ρ_q|` on a shared ray and `ρ_p + ρ_q` through the
    /// vertex otherwise. Book: Euclidean on a shared page; across pages the
    /// geodesic crosses the spine and the distance is the unfolded
    /// `√((s_p − s_q)² + (t_p + t_q)²)`.
    pub fn distance(&self, p: &TargetPoint, q: &TargetPoint) -> f64 {
        match self.kind {
            ComplexKind::Spider => {
                if p.face == q.face {
                    (p.a - q.a).abs()
                } else {
                    p.a + q.a
                }
            }
            ComplexKind::Book => {
                let ds = p.a - q.a;
                let dt = if p.face == q.face { p.b - q.b } else { p.b + q.b };
                ds.hypot(dt)
            }
        }
    }

    /// Distance to the cone point.
    pub fn dist_to_origin(&self, p: &TargetPoint) -> f64 {
        match self.kind {
            ComplexKind::Spider => p.a,
            ComplexKind::Book => p.a.hypot(p.b),
        }
    }

    /// The point at parameter `lambda` along the geodesic from `p` to `q`.
    pub fn geodesic_point(&self, p: &TargetPoint, q: &TargetPoint, lambda: f64) -> Result<TargetPoint> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidFraction(lambda));
        }
        if lambda == 0.0 {
            return Ok(*p);
        }
        if lambda == 1.0 {
            return Ok(*q);
        }
        Ok(match self.kind {
            ComplexKind::Spider => {
                if p.face == q.face {
                    TargetPoint::raw_spider(p.face, p.a + lambda * (q.a - p.a))
                } else {
                    // through the vertex; arc length from p is lambda * (rho_p + rho_q)
                    let s = lambda * (p.a + q.a);
                    if s <= p.a {
                        TargetPoint::raw_spider(p.face, p.a - s)
                    } else {
                        TargetPoint::raw_spider(q.face, s - p.a)
                    }
                }
            }
            ComplexKind::Book => {
                let (qs, qt) = if p.face == q.face { (q.a, q.b) } else { (q.a, -q.b) };
                let s = p.a + lambda * (qs - p.a);
                let t = p.b + lambda * (qt - p.b);
                if t >= 0.0 {
                    TargetPoint::raw_book(p.face, s, t)
                } else {
                    TargetPoint::raw_book(q.face, s, -t)
                }
            }
        })
    }

    /// Rescaling of `p` about the cone point by `lambda ≥ 0`.
    ///
    /// `d(λp, 0_X) = λ d(p, 0_X)` exactly, and the face is preserved.
    pub fn cone_scale(&self, p: &TargetPoint, lambda: f64) -> Result<TargetPoint> {
        if !(lambda >= 0.0) {
            return Err(Error::NegativeScale(lambda));
        }
        Ok(match self.kind {
            ComplexKind::Spider => TargetPoint::raw_spider(p.face, lambda * p.a),
            ComplexKind::Book => TargetPoint::raw_book(p.face, lambda * p.a, lambda * p.b),
        })
    }

    /// The unique minimizer of `F(q) = Σ wᵢ d²(q, pᵢ)`.
    ///
    /// Per face the restricted problem is Euclidean after unfolding every
    /// other face across the vertex (spider) or spine (book), so the
    /// candidate on each face is a clamped weighted average; the candidate of
    /// least `F` wins, ties broken toward the lowest face index. When every
    /// candidate clamps onto the shared stratum the result is the vertex or
    /// the spine mean, which is the exact minimizer of the restricted 1-D
    /// problem there.
    pub fn weighted_barycenter(&self, points: &[(TargetPoint, f64)]) -> Result<TargetPoint> {
        if points.is_empty() {
            return Err(Error::EmptyBarycenter);
        }
        let mut total_w = 0.0;
        for &(_, w) in points {
            if !(w > 0.0) {
                return Err(Error::NonPositiveWeight(w));
            }
            total_w += w;
        }

        // Candidate faces: every face used by an input point, plus face 0 so
        // the shared stratum is always probed.
        let mut faces: Vec<u32> = Vec::with_capacity(points.len() + 1);
        faces.push(0);
        for &(p, _) in points {
            if !faces.contains(&p.face) {
                faces.push(p.face);
            }
        }
        faces.sort_unstable();

        match self.kind {
            ComplexKind::Spider => {
                let mut best: Option<(f64, TargetPoint)> = None;
                for &f in &faces {
                    let mut signed = 0.0;
                    for &(p, w) in points {
                        let sgn = if p.face == f { 1.0 } else { -1.0 };
                        signed += w * sgn * p.a;
                    }
                    let x = (signed / total_w).max(0.0);
                    let cand = TargetPoint::raw_spider(f, x);
                    let cost: f64 = points
                        .iter()
                        .map(|(p, w)| {
                            let d = self.distance(&cand, p);
                            w * d * d
                        })
                        .sum();
                    if best.map_or(true, |(c, _)| cost < c) {
                        best = Some((cost, cand));
                    }
                }
                Ok(best.unwrap().1)
            }
            ComplexKind::Book => {
                // The spine coordinate decouples: its optimum is the plain
                // weighted mean for every candidate page.
                let mean_s: f64 = points.iter().map(|(p, w)| w * p.a).sum::<f64>() / total_w;
                let mut best: Option<(f64, TargetPoint)> = None;
                for &f in &faces {
                    let mut signed_t = 0.0;
                    for &(p, w) in points {
                        let sgn = if p.face == f { 1.0 } else { -1.0 };
                        signed_t += w * sgn * p.b;
                    }
                    let t = (signed_t / total_w).max(0.0);
                    let cand = TargetPoint::raw_book(f, mean_s, t);
                    let cost: f64 = points
                        .iter()
                        .map(|(p, w)| {
                            let d = self.distance(&cand, p);
                            w * d * d
                        })
                        .sum();
                    if best.map_or(true, |(c, _)| cost < c) {
                        best = Some((cost, cand));
                    }
                }
                Ok(best.unwrap().1)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tripod() -> TargetComplex {
        TargetComplex::spider(3).unwrap()
    }

    fn book3() -> TargetComplex {
        TargetComplex::book(3).unwrap()
    }

    fn random_point(x: &TargetComplex, rng: &mut ChaCha8Rng) -> TargetPoint {
        let f = rng.gen_range(0..x.face_count());
        match x.kind() {
            ComplexKind::Spider => x.point(f, rng.gen_range(0.0..2.0), 0.0).unwrap(),
            ComplexKind::Book => x
                .point(f, rng.gen_range(-2.0..2.0), rng.gen_range(0.0..2.0))
                .unwrap(),
        }
    }

    #[test]
    fn constructor_rejects_degenerate_complexes() {
        assert!(TargetComplex::spider(2).is_err());
        assert!(TargetComplex::book(1).is_err());
        assert!(TargetComplex::spider(3).is_ok());
    }

    #[test]
    fn face_range_is_checked() {
        let x = tripod();
        assert!(matches!(
            x.point(3, 1.0, 0.0),
            Err(Error::FaceOutOfRange { face: 3, count: 3 })
        ));
    }

    #[test]
    fn spider_distances() {
        let x = tripod();
        let p = x.point(1, 2.0, 0.0).unwrap();
        let q = x.point(2, 3.0, 0.0).unwrap();
        assert_eq!(x.distance(&p, &q), 5.0);
        let q2 = x.point(1, 3.0, 0.0).unwrap();
        assert_eq!(x.distance(&p, &q2), 1.0);
    }

    #[test]
    fn book_distance_unfolds_across_the_spine() {
        let x = book3();
        let p = x.point(0, 0.0, 1.0).unwrap();
        let q = x.point(1, 0.0, 1.0).unwrap();
        assert_eq!(x.distance(&p, &q), 2.0);
    }

    #[test]
    fn canonical_forms_make_equality_work() {
        let x = tripod();
        assert_eq!(x.point(2, 0.0, 0.0).unwrap(), x.origin());
        let b = book3();
        assert_eq!(
            b.point(2, 0.7, 0.0).unwrap(),
            b.point(1, 0.7, 0.0).unwrap()
        );
        assert_eq!(b.point(0, 0.0, 0.0).unwrap(), b.origin());
    }

    #[test]
    fn spider_midpoint_of_symmetric_pair_is_the_vertex() {
        let x = tripod();
        let p = x.point(1, 2.0, 0.0).unwrap();
        let q = x.point(2, 2.0, 0.0).unwrap();
        let mid = x.geodesic_point(&p, &q, 0.5).unwrap();
        assert_eq!(mid, x.origin());
    }

    #[test]
    fn geodesic_endpoints_and_rejection() {
        let x = book3();
        let p = x.point(0, 0.3, 1.0).unwrap();
        let q = x.point(2, -0.4, 0.5).unwrap();
        assert_eq!(x.geodesic_point(&p, &q, 0.0).unwrap(), p);
        assert_eq!(x.geodesic_point(&p, &q, 1.0).unwrap(), q);
        assert!(x.geodesic_point(&p, &q, 1.5).is_err());
        assert!(x.geodesic_point(&p, &q, -0.1).is_err());
    }

    #[test]
    fn book_geodesic_crosses_spine_at_the_unfolded_zero() {
        let x = book3();
        let p = x.point(0, 0.0, 1.0).unwrap();
        let q = x.point(1, 0.0, 3.0).unwrap();
        // unfolded segment from (0,1) to (0,-3) hits t = 0 at lambda = 1/4
        let c = x.geodesic_point(&p, &q, 0.25).unwrap();
        assert_eq!(c, x.point(0, 0.0, 0.0).unwrap());
    }

    #[test]
    fn geodesic_point_splits_distance_proportionally() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for x in [tripod(), TargetComplex::spider(5).unwrap(), book3(), TargetComplex::book(4).unwrap()] {
            for _ in 0..2000 {
                let p = random_point(&x, &mut rng);
                let q = random_point(&x, &mut rng);
                let lam: f64 = rng.gen_range(0.0..1.0);
                let g = x.geodesic_point(&p, &q, lam).unwrap();
                let d = x.distance(&p, &q);
                assert!((x.distance(&p, &g) - lam * d).abs() < 1e-12 * (1.0 + d));
                assert!((x.distance(&g, &q) - (1.0 - lam) * d).abs() < 1e-12 * (1.0 + d));
            }
        }
    }

    #[test]
    fn cone_scale_examples() {
        let x = tripod();
        let p = x.point(1, 2.0, 0.0).unwrap();
        assert_eq!(x.cone_scale(&p, 3.0).unwrap(), x.point(1, 6.0, 0.0).unwrap());
        assert_eq!(x.cone_scale(&p, 0.0).unwrap(), x.origin());
        assert!(x.cone_scale(&p, -1.0).is_err());

        let b = book3();
        let q = b.point(2, 1.0, 2.0).unwrap();
        assert_eq!(b.cone_scale(&q, 0.5).unwrap(), b.point(2, 0.5, 1.0).unwrap());
    }

    #[test]
    fn cone_scaling_is_a_homothety() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for x in [tripod(), book3()] {
            for _ in 0..5000 {
                let p = random_point(&x, &mut rng);
                let q = random_point(&x, &mut rng);
                let lam: f64 = rng.gen_range(0.0..1.0);
                let sp = x.cone_scale(&p, lam).unwrap();
                let sq = x.cone_scale(&q, lam).unwrap();
                let lhs = x.distance(&sp, &sq);
                let rhs = lam * x.distance(&p, &q);
                assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
            }
        }
    }

    #[test]
    fn triangle_inequality_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for x in [tripod(), book3()] {
            for _ in 0..10_000 {
                let p = random_point(&x, &mut rng);
                let q = random_point(&x, &mut rng);
                let r = random_point(&x, &mut rng);
                assert!(x.distance(&p, &r) <= x.distance(&p, &q) + x.distance(&q, &r) + 1e-12);
            }
        }
    }

    #[test]
    fn npc_comparison_inequality() {
        // CAT(0) four-point comparison along geodesics.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for x in [tripod(), TargetComplex::spider(4).unwrap(), book3()] {
            for _ in 0..10_000 {
                let p = random_point(&x, &mut rng);
                let q = random_point(&x, &mut rng);
                let r = random_point(&x, &mut rng);
                for lam in [0.25, 0.5, 0.75] {
                    let g = x.geodesic_point(&p, &q, lam).unwrap();
                    let lhs = x.distance(&g, &r).powi(2);
                    let rhs = (1.0 - lam) * x.distance(&p, &r).powi(2)
                        + lam * x.distance(&q, &r).powi(2)
                        - lam * (1.0 - lam) * x.distance(&p, &q).powi(2);
                    assert!(lhs <= rhs + 1e-10, "CAT(0) violated: {lhs} > {rhs}");
                }
            }
        }
    }

    #[test]
    fn barycenter_examples() {
        let x = tripod();
        let unit = |f: u32| (x.point(f, 1.0, 0.0).unwrap(), 1.0);
        let b = x.weighted_barycenter(&[unit(0), unit(1), unit(2)]).unwrap();
        assert_eq!(b, x.origin());

        let p = x.point(2, 0.8, 0.0).unwrap();
        assert_eq!(x.weighted_barycenter(&[(p, 2.0)]).unwrap(), p);

        // min over the line through rays 1 and 2 of (x-3)^2 + (x+1)^2 is x = 1
        let b = x
            .weighted_barycenter(&[
                (x.point(1, 3.0, 0.0).unwrap(), 1.0),
                (x.point(2, 1.0, 0.0).unwrap(), 1.0),
            ])
            .unwrap();
        assert_eq!(b, x.point(1, 1.0, 0.0).unwrap());

        assert!(x.weighted_barycenter(&[]).is_err());
        assert!(x
            .weighted_barycenter(&[(p, 0.0)])
            .is_err());
    }

    #[test]
    fn book_barycenter_hand_case() {
        let b = book3();
        let p = b.point(0, 1.0, 1.0).unwrap();
        let q = b.point(1, -1.0, 2.0).unwrap();
        let c = b.weighted_barycenter(&[(p, 1.0), (q, 1.0)]).unwrap();
        // page-1 unfolded mean (0, 0.5) beats the clamped page-0 candidate
        assert_eq!(c, b.point(1, 0.0, 0.5).unwrap());
    }

    #[test]
    fn barycenter_beats_random_probes() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for x in [tripod(), book3()] {
            for _ in 0..50 {
                let k = rng.gen_range(1..6);
                let pts: Vec<(TargetPoint, f64)> = (0..k)
                    .map(|_| (random_point(&x, &mut rng), rng.gen_range(0.1..2.0)))
                    .collect();
                let b = x.weighted_barycenter(&pts).unwrap();
                let cost = |q: &TargetPoint| -> f64 {
                    pts.iter().map(|(p, w)| w * x.distance(q, p).powi(2)).sum()
                };
                let fb = cost(&b);
                for _ in 0..100 {
                    let probe = random_point(&x, &mut rng);
                    assert!(fb <= cost(&probe) + 1e-9);
                }
            }
        }
    }
}
