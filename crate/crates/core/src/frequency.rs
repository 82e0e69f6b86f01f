//! Smoothed energy, height, frequency and pinching, plus the variational
//! identity checks.
//!
//! The cutoff is fixed to the piecewise-linear profile
//!
//! ```text
//! phi(t) = 1          on [0, 1/2]
//! phi(t) = 2 (1 - t)  on [1/2, 1]
//! phi(t) = 0          on [1, inf)
//! ```
//!
//! so `phi' = -2` exactly on `(1/2, 1)` and the height/xi integrals are
//! plain annulus integrals. Smoothed quantities on the ball `B_r(x)`:
//!
//! * `E(x,r) = ∫ |∇u|² phi(|y-x|/r) dy`
//! * `H(x,r) = ∫_{r/2<|y-x|<r} 2 d²(u,0_X) / |y-x| dy`
//! * `I(x,r) = r E / H` (the frequency; equals the degree for conically
//!   homogeneous maps and is nondecreasing in `r` for minimizers)
//! * `xi(x,r) = ∫_{r/2<|y-x|<r} 2 |∂_ν u|² |y-x| dy`
//!
//! Quadrature is a node sum. The sharp annulus indicator is optionally
//! weighted by the fraction of each node cell inside the annulus
//! ([`Quadrature::CellCoverage`]), which keeps the integrals continuous in
//! `r`; the raw indicator is available as [`Quadrature::NodeSum`].

use crate::complex::TargetPoint;
use crate::error::{Error, Result};
use crate::grid::DiscreteMap;

use rayon::prelude::*;
use std::f64::consts::PI;

/// The fixed smoothing cutoff.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SmoothingProfile;

impl SmoothingProfile {
    pub fn phi(t: f64) -> f64 {
        if t <= 0.5 {
            1.0
        } else if t < 1.0 {
            2.0 * (1.0 - t)
        } else {
            0.0
        }
    }

    /// `phi'` on its support `(1/2, 1)`.
    pub const DPHI: f64 = -2.0;

    pub const NAME: &'static str = "linear-ramp-half";
}

/// Minimum admissible radius in grid spacings: below `4h` the annulus
/// `r/2 < |y-x| < r` holds too few nodes for stable quadrature.
pub const MIN_RADIUS_FACTOR: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Quadrature {
    /// Raw node sums with the sharp indicator.
    NodeSum,
    /// Node sums weighted by sub-sampled cell coverage of the annulus
    /// (`subdiv^m` probes per straddling cell).
    CellCoverage { subdiv: u8 },
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature::CellCoverage { subdiv: 5 }
    }
}

impl Quadrature {
    pub fn tag(&self) -> String {
        match self {
            Quadrature::NodeSum => "node_sum".to_string(),
            Quadrature::CellCoverage { subdiv } => format!("coverage:{subdiv}"),
        }
    }
}

/// Radii, sample points and the frequency normalization bound used for a
/// frequency sweep.
#[derive(Clone, Debug)]
pub struct AnalysisConfig {
    /// Recorded normalization bound for reports.
    pub lambda: f64,
    pub radii: Vec<f64>,
    pub samples: Vec<[f64; 3]>,
    pub quadrature: Quadrature,
}

impl AnalysisConfig {
    pub fn validate(&self, map: &DiscreteMap) -> Result<()> {
        let g = map.grid();
        let h = g.spacing();
        let rmin = MIN_RADIUS_FACTOR * h;
        let rmax_allowed = 0.5 * g.extent();
        if self.radii.is_empty() || self.samples.is_empty() {
            return Err(Error::InvalidParameter("analysis needs radii and sample points".into()));
        }
        let mut prev = 0.0;
        for &r in &self.radii {
            if r < rmin * (1.0 - 1e-12) {
                return Err(Error::RadiusBelowResolution { radius: r, min: rmin });
            }
            if r > rmax_allowed + 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "radius {r} exceeds half the domain extent {rmax_allowed}"
                )));
            }
            if r <= prev {
                return Err(Error::InvalidParameter("radii must be strictly increasing".into()));
            }
            prev = r;
        }
        let rmax = *self.radii.last().unwrap();
        for x in &self.samples {
            if !g.ball_fits(&x[..g.dim()], rmax) {
                return Err(Error::BallOutsideDomain {
                    center: x[..g.dim()].to_vec(),
                    radius: rmax,
                });
            }
        }
        Ok(())
    }

    /// Geometric radius ladder between `r_lo` and `r_hi`.
    pub fn geometric_radii(r_lo: f64, r_hi: f64, count: usize) -> Vec<f64> {
        assert!(count >= 2 && r_hi > r_lo && r_lo > 0.0);
        let q = (r_hi / r_lo).powf(1.0 / (count - 1) as f64);
        (0..count).map(|j| r_lo * q.powi(j as i32)).collect()
    }
}

/// One row of a frequency sweep.
#[derive(Clone, Copy, Debug)]
pub struct ProfileRow {
    pub x: [f64; 3],
    pub r: f64,
    pub energy: f64,
    pub height: f64,
    pub frequency: f64,
    pub xi: f64,
    /// Pinching against the smallest radius of the sweep at the same point.
    pub w_ref: f64,
}

#[derive(Clone, Debug)]
pub struct FrequencyProfile {
    pub rows: Vec<ProfileRow>,
    pub map_id: String,
    pub profile_name: &'static str,
    pub quadrature: String,
    pub lambda: f64,
}

/// Residual of one identity check.
#[derive(Clone, Debug)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct IdentityReport {
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&IdentityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// PASS thresholds for the identity report.
pub mod thresholds {
    /// `E = -(1/r) ∫ phi' <u, ∂_nu u>` vs direct quadrature.
    pub const CALC1: f64 = 0.01;
    /// `∂_r E = (m-2)/r E + 2/r² xi`, central differences.
    pub const CALC2: f64 = 0.02;
    /// `∂_r H = (m-1)/r H + 2E`, central differences.
    pub const CALC4: f64 = 0.01;
    /// Monotonicity slack for `I(x, .)`.
    pub const CALC6: f64 = 1e-3;
    /// Doubling ratio `s^{1-m} H(s) exp(2 ∫ I dt/t) / (r^{1-m} H(r))`.
    pub const CALC7: f64 = 0.01;
    /// Weak Laplacian identity residual against bump test functions.
    pub const LEMMA31: f64 = 0.05;
    /// Inner-variation identity residual against bump vector fields.
    pub const LEMMA32: f64 = 0.05;
}

struct CellGeometry {
    h: f64,
    m: usize,
    half_diag: f64,
}

/// Area of `disk(0, r) ∩ [0,w] x [0,h]` for `w, h >= 0`.
fn quadrant_disk_area(w: f64, h: f64, r: f64) -> f64 {
    if r <= 0.0 || w <= 0.0 || h <= 0.0 {
        return 0.0;
    }
    if w * w + h * h <= r * r {
        return w * h;
    }
    let w = w.min(r);
    let h = h.min(r);
    let tc = if h >= r { 0.0 } else { (r * r - h * h).sqrt() };
    if w <= tc {
        return w * h;
    }
    let seg = |t: f64| 0.5 * (t * (r * r - t * t).max(0.0).sqrt() + r * r * (t / r).asin());
    tc * h + seg(w) - seg(tc)
}

/// Area of `disk(0, r) ∩ [a,b] x [c,d]` by signed quadrant decomposition.
fn disk_box_area(a: f64, b: f64, c: f64, d: f64, r: f64) -> f64 {
    let s = |x: f64, y: f64| -> f64 {
        x.signum() * y.signum() * quadrant_disk_area(x.abs(), y.abs(), r)
    };
    s(b, d) - s(a, d) - s(b, c) + s(a, c)
}

impl CellGeometry {
    fn coverage(&self, quad: Quadrature, x: &[f64; 3], y: &[f64; 3], rin: f64, rout: f64) -> f64 {
        let d = dist(self.m, x, y);
        match quad {
            Quadrature::NodeSum => {
                if d > rin && d <= rout {
                    1.0
                } else {
                    0.0
                }
            }
            Quadrature::CellCoverage { subdiv } => {
                if d - self.half_diag >= rin && d + self.half_diag <= rout {
                    return 1.0;
                }
                if d + self.half_diag <= rin || d - self.half_diag >= rout {
                    return 0.0;
                }
                if self.m == 2 {
                    // exact disk-box overlap; smooth in the radii
                    let (a, b) = (y[0] - x[0] - 0.5 * self.h, y[0] - x[0] + 0.5 * self.h);
                    let (c, dd) = (y[1] - x[1] - 0.5 * self.h, y[1] - x[1] + 0.5 * self.h);
                    let outer = disk_box_area(a, b, c, dd, rout);
                    let inner = if rin > 0.0 { disk_box_area(a, b, c, dd, rin) } else { 0.0 };
                    return ((outer - inner) / (self.h * self.h)).clamp(0.0, 1.0);
                }
                let s = subdiv.max(1) as usize;
                let mut inside = 0usize;
                let mut total = 0usize;
                let step = self.h / s as f64;
                let base = -0.5 * self.h + 0.5 * step;
                let mut sub = [0.0; 3];
                for k2 in 0..s {
                    for k1 in 0..s {
                        for k0 in 0..s {
                            sub[0] = y[0] + base + k0 as f64 * step;
                            sub[1] = y[1] + base + k1 as f64 * step;
                            sub[2] = y[2] + base + k2 as f64 * step;
                            let ds = dist(self.m, x, &sub);
                            if ds > rin && ds <= rout {
                                inside += 1;
                            }
                            total += 1;
                        }
                    }
                }
                inside as f64 / total as f64
            }
        }
    }
}

fn dist(m: usize, a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let mut s = 0.0;
    for i in 0..m {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    s.sqrt()
}

/// Frequency machinery over one immutable map snapshot.
///
/// Precomputes the node fields `|∇u|²` (forward differences) and
/// `d²(u, 0_X)` once; every functional is then a weighted node sum.
pub struct Analyzer<'a> {
    map: &'a DiscreteMap,
    pub quadrature: Quadrature,
    grad_sq: Vec<f64>,
    dist_sq: Vec<f64>,
}

impl<'a> Analyzer<'a> {
    pub fn new(map: &'a DiscreteMap, quadrature: Quadrature) -> Self {
        let g = map.grid();
        let target = map.target();
        let h = g.spacing();
        let n = g.resolution();
        // average of the two one-sided quotients per axis; centering the
        // sample kills the O(h) half-cell bias of a pure forward difference
        let grad_sq: Vec<f64> = (0..g.node_count())
            .into_par_iter()
            .map(|idx| {
                let mi = g.multi_index(idx);
                let mut s = 0.0;
                for axis in 0..g.dim() {
                    let mut acc = 0.0;
                    let mut cnt = 0.0;
                    if mi[axis] < n {
                        let nb = g.neighbor(idx, axis, 1).unwrap();
                        let d = target.distance(map.value(idx), map.value(nb)) / h;
                        acc += d * d;
                        cnt += 1.0;
                    }
                    if mi[axis] > 0 {
                        let nb = g.neighbor(idx, axis, -1).unwrap();
                        let d = target.distance(map.value(idx), map.value(nb)) / h;
                        acc += d * d;
                        cnt += 1.0;
                    }
                    s += acc / cnt;
                }
                s
            })
            .collect();
        let dist_sq: Vec<f64> = (0..g.node_count())
            .into_par_iter()
            .map(|idx| {
                let d = target.dist_to_origin(map.value(idx));
                d * d
            })
            .collect();
        Analyzer { map, quadrature, grad_sq, dist_sq }
    }

    pub fn map(&self) -> &DiscreteMap {
        self.map
    }

    pub fn grad_sq_field(&self) -> &[f64] {
        &self.grad_sq
    }

    pub fn dist_sq_field(&self) -> &[f64] {
        &self.dist_sq
    }

    fn geometry(&self) -> CellGeometry {
        let g = self.map.grid();
        let h = g.spacing();
        CellGeometry { h, m: g.dim(), half_diag: 0.5 * h * (g.dim() as f64).sqrt() }
    }

    fn check_ball(&self, x: &[f64], r: f64) -> Result<()> {
        let g = self.map.grid();
        let rmin = MIN_RADIUS_FACTOR * g.spacing();
        if r < rmin * (1.0 - 1e-12) {
            return Err(Error::RadiusBelowResolution { radius: r, min: rmin });
        }
        if !g.ball_fits(x, r) {
            return Err(Error::BallOutsideDomain { center: x[..g.dim()].to_vec(), radius: r });
        }
        Ok(())
    }

    fn pad(&self, x: &[f64]) -> [f64; 3] {
        let mut p = [0.0; 3];
        for (i, v) in x.iter().take(3).enumerate() {
            p[i] = *v;
        }
        p
    }

    /// Walk all nodes with `|y - x|_inf <= reach`.
    fn for_nodes_near<F: FnMut(usize, [f64; 3])>(&self, x: &[f64; 3], reach: f64, mut f: F) {
        let g = self.map.grid();
        let h = g.spacing();
        let l = g.extent();
        let n = g.resolution() as i64;
        let mut lo = [0i64; 3];
        let mut hi = [0i64; 3];
        for a in 0..g.dim() {
            lo[a] = (((x[a] - reach + l) / h).floor() as i64).clamp(0, n);
            hi[a] = (((x[a] + reach + l) / h).ceil() as i64).clamp(0, n);
        }
        let k_range = if g.dim() == 3 { lo[2]..=hi[2] } else { 0..=0 };
        for k in k_range {
            for j in lo[1]..=hi[1] {
                for i in lo[0]..=hi[0] {
                    let idx = g.index([i as usize, j as usize, k as usize]);
                    f(idx, g.position(idx));
                }
            }
        }
    }

    /// Node-sum of `f(node, pos, |pos-x|) * coverage(cell in annulus) * h^m`.
    fn annulus_sum<F: Fn(usize, &[f64; 3], f64) -> f64>(
        &self,
        x: &[f64; 3],
        rin: f64,
        rout: f64,
        f: F,
    ) -> f64 {
        let g = self.map.grid();
        let cell = self.geometry();
        let vol = cell.h.powi(g.dim() as i32);
        let mut sum = 0.0;
        self.for_nodes_near(x, rout + cell.h, |idx, y| {
            let cov = cell.coverage(self.quadrature, x, &y, rin, rout);
            if cov > 0.0 {
                let d = dist(g.dim(), x, &y);
                sum += cov * f(idx, &y, d);
            }
        });
        sum * vol
    }

    /// `E(x, r)`: smooth cutoff, plain node sum.
    pub fn smoothed_energy(&self, x: &[f64], r: f64) -> Result<f64> {
        self.check_ball(x, r)?;
        let xp = self.pad(x);
        let g = self.map.grid();
        let h = g.spacing();
        let vol = h.powi(g.dim() as i32);
        let mut sum = 0.0;
        self.for_nodes_near(&xp, r + h, |idx, y| {
            let d = dist(g.dim(), &xp, &y);
            let w = SmoothingProfile::phi(d / r);
            if w > 0.0 {
                sum += w * self.grad_sq[idx];
            }
        });
        Ok(sum * vol)
    }

    /// `H(x, r)`: annulus integral of `2 d²(u, 0_X) / |y - x|`.
    pub fn smoothed_height(&self, x: &[f64], r: f64) -> Result<f64> {
        self.check_ball(x, r)?;
        let xp = self.pad(x);
        Ok(self.annulus_sum(&xp, 0.5 * r, r, |idx, _, d| 2.0 * self.dist_sq[idx] / d.max(1e-300)))
    }

    /// `xi(x, r)`: annulus integral of `2 |∂_nu u|² |y - x|`, with the radial
    /// derivative taken as a metric difference quotient along the ray.
    pub fn xi(&self, x: &[f64], r: f64) -> Result<f64> {
        self.check_ball(x, r)?;
        let xp = self.pad(x);
        Ok(self.annulus_sum(&xp, 0.5 * r, r, |_, y, d| 2.0 * d * self.radial_speed_sq(&xp, y, d)))
    }

    /// `I(x, r) = r E / H`.
    pub fn smoothed_frequency(&self, x: &[f64], r: f64) -> Result<f64> {
        let e = self.smoothed_energy(x, r)?;
        let h = self.smoothed_height(x, r)?;
        if h <= 1e-250 {
            return Err(Error::DegenerateHeight {
                center: x[..self.map.grid().dim()].to_vec(),
                radius: r,
            });
        }
        Ok(r * e / h)
    }

    /// `W_s^r(x) = I(x, r) - I(x, s)`.
    pub fn pinching(&self, x: &[f64], s: f64, r: f64) -> Result<f64> {
        if s > r {
            return Err(Error::InvalidParameter(format!("pinching needs s <= r, got {s} > {r}")));
        }
        Ok(self.smoothed_frequency(x, r)? - self.smoothed_frequency(x, s)?)
    }

    /// Classical (unsmoothed) frequency `r E_u(x,r) / H_u(x,r,Q)` with the
    /// sphere height from the shell of nodes at distance `r ± h/2`.
    pub fn classical_order(&self, x: &[f64], r: f64, q: &TargetPoint) -> Result<f64> {
        self.check_ball(x, r)?;
        let xp = self.pad(x);
        let g = self.map.grid();
        let target = self.map.target();
        let h = g.spacing();
        let energy = self.annulus_sum(&xp, -1.0, r, |idx, _, _| self.grad_sq[idx]);
        let mut shell_sum = 0.0;
        let mut shell_count = 0usize;
        self.for_nodes_near(&xp, r + h, |idx, y| {
            let d = dist(g.dim(), &xp, &y);
            if (d - r).abs() < 0.5 * h {
                let dd = target.distance(self.map.value(idx), q);
                shell_sum += dd * dd;
                shell_count += 1;
            }
        });
        if shell_count == 0 {
            return Err(Error::EmptyShell { center: x[..g.dim()].to_vec(), radius: r });
        }
        let surface = match g.dim() {
            2 => 2.0 * PI * r,
            _ => 4.0 * PI * r * r,
        };
        let height = surface * shell_sum / shell_count as f64;
        if height <= 1e-250 {
            return Err(Error::DegenerateHeight { center: x[..g.dim()].to_vec(), radius: r });
        }
        Ok(r * energy / height)
    }

    /// Multilinear interpolation of a node scalar field.
    fn interp_scalar(&self, field: &[f64], pos: &[f64; 3]) -> f64 {
        let g = self.map.grid();
        let h = g.spacing();
        let l = g.extent();
        let n = g.resolution();
        let mut base = [0usize; 3];
        let mut w = [0.0f64; 3];
        for a in 0..g.dim() {
            let c = (pos[a] + l) / h;
            let i = (c.floor() as i64).clamp(0, n as i64 - 1) as usize;
            base[a] = i;
            w[a] = (c - i as f64).clamp(0.0, 1.0);
        }
        let corners = 1usize << g.dim();
        let mut acc = 0.0;
        for mask in 0..corners {
            let mut mi = base;
            let mut weight = 1.0;
            for a in 0..g.dim() {
                if mask & (1 << a) != 0 {
                    mi[a] += 1;
                    weight *= w[a];
                } else {
                    weight *= 1.0 - w[a];
                }
            }
            if weight > 0.0 {
                acc += weight * field[g.index(mi)];
            }
        }
        acc
    }

    /// Fréchet-mean interpolation of the map at an off-node position.
    fn interp_point(&self, pos: &[f64; 3]) -> TargetPoint {
        let g = self.map.grid();
        let target = self.map.target();
        let h = g.spacing();
        let l = g.extent();
        let n = g.resolution();
        let mut base = [0usize; 3];
        let mut w = [0.0f64; 3];
        for a in 0..g.dim() {
            let c = (pos[a] + l) / h;
            let i = (c.floor() as i64).clamp(0, n as i64 - 1) as usize;
            base[a] = i;
            w[a] = (c - i as f64).clamp(0.0, 1.0);
        }
        let corners = 1usize << g.dim();
        let mut pts: Vec<(TargetPoint, f64)> = Vec::with_capacity(corners);
        for mask in 0..corners {
            let mut mi = base;
            let mut weight = 1.0;
            for a in 0..g.dim() {
                if mask & (1 << a) != 0 {
                    mi[a] += 1;
                    weight *= w[a];
                } else {
                    weight *= 1.0 - w[a];
                }
            }
            if weight > 1e-14 {
                pts.push((*self.map.value(g.index(mi)), weight));
            }
        }
        target.weighted_barycenter(&pts).expect("nonempty corner list")
    }

    /// `|∂_nu u|²` at `y` via the metric difference quotient between
    /// interpolated samples at `y ± (h/2) nu`.
    fn radial_speed_sq(&self, x: &[f64; 3], y: &[f64; 3], d: f64) -> f64 {
        let g = self.map.grid();
        let h = g.spacing();
        let target = self.map.target();
        if d < 1e-300 {
            return 0.0;
        }
        let mut fwd = *y;
        let mut bwd = *y;
        for a in 0..g.dim() {
            let nu = (y[a] - x[a]) / d;
            fwd[a] += 0.5 * h * nu;
            bwd[a] -= 0.5 * h * nu;
        }
        let p = self.interp_point(&fwd);
        let q = self.interp_point(&bwd);
        let dd = target.distance(&p, &q) / h;
        dd * dd
    }

    /// `<u, ∂_nu u> = (1/2) ∂_nu d²(u, 0_X)` via a central difference of the
    /// interpolated squared-distance field.
    fn radial_u_du(&self, x: &[f64; 3], y: &[f64; 3], d: f64) -> f64 {
        let g = self.map.grid();
        let h = g.spacing();
        if d < 1e-300 {
            return 0.0;
        }
        let mut fwd = *y;
        let mut bwd = *y;
        for a in 0..g.dim() {
            let nu = (y[a] - x[a]) / d;
            fwd[a] += 0.5 * h * nu;
            bwd[a] -= 0.5 * h * nu;
        }
        let df = self.interp_scalar(&self.dist_sq, &fwd);
        let db = self.interp_scalar(&self.dist_sq, &bwd);
        0.5 * (df - db) / h
    }

    /// Frequency sweep over the configured radii and sample points.
    /// Rows are ordered by (sample, radius); evaluation is parallel with a
    /// deterministic, index-mapped reduction.
    pub fn frequency_profile(&self, cfg: &AnalysisConfig, map_id: &str) -> Result<FrequencyProfile> {
        cfg.validate(self.map)?;
        let tasks: Vec<(usize, usize)> = (0..cfg.samples.len())
            .flat_map(|i| (0..cfg.radii.len()).map(move |j| (i, j)))
            .collect();
        let rows: Vec<Result<ProfileRow>> = tasks
            .par_iter()
            .map(|&(i, j)| {
                let x = cfg.samples[i];
                let r = cfg.radii[j];
                let m = self.map.grid().dim();
                let e = self.smoothed_energy(&x[..m], r)?;
                let h = self.smoothed_height(&x[..m], r)?;
                let xi = self.xi(&x[..m], r)?;
                if h <= 1e-250 {
                    return Err(Error::DegenerateHeight { center: x[..m].to_vec(), radius: r });
                }
                Ok(ProfileRow { x, r, energy: e, height: h, frequency: r * e / h, xi, w_ref: 0.0 })
            })
            .collect();
        let mut rows: Vec<ProfileRow> = rows.into_iter().collect::<Result<_>>()?;
        let nr = cfg.radii.len();
        for i in 0..cfg.samples.len() {
            let base = rows[i * nr].frequency;
            for j in 0..nr {
                rows[i * nr + j].w_ref = rows[i * nr + j].frequency - base;
            }
        }
        Ok(FrequencyProfile {
            rows,
            map_id: map_id.to_string(),
            profile_name: SmoothingProfile::NAME,
            quadrature: self.quadrature.tag(),
            lambda: cfg.lambda,
        })
    }

    /// Residual report for the variational identities. Radii with `r ± h`
    /// inside the admissible band are used for the `r`-derivative checks.
    pub fn verify_identities(&self, cfg: &AnalysisConfig) -> Result<IdentityReport> {
        cfg.validate(self.map)?;
        let g = self.map.grid();
        let m = g.dim();
        let h = g.spacing();
        let rmin = MIN_RADIUS_FACTOR * h;
        let mut checks = Vec::new();

        let mut calc1 = 0.0f64;
        let mut calc2 = 0.0f64;
        let mut calc4 = 0.0f64;
        let mut calc6 = 0.0f64;

        for x in &cfg.samples {
            let xs = &x[..m];
            let xp = self.pad(xs);
            let mut prev_i: Option<f64> = None;
            for &r in &cfg.radii {
                let e = self.smoothed_energy(xs, r)?;
                let hh = self.smoothed_height(xs, r)?;
                if hh <= 1e-250 {
                    continue;
                }
                let i_now = r * e / hh;
                if let Some(p) = prev_i {
                    calc6 = calc6.max(p - i_now);
                }
                prev_i = Some(i_now);

                // calc1: E computed directly vs through <u, ∂_nu u>
                let rhs =
                    (2.0 / r) * self.annulus_sum(&xp, 0.5 * r, r, |_, y, d| self.radial_u_du(&xp, y, d));
                calc1 = calc1.max((e - rhs).abs() / e.abs().max(1e-12));

                // r-derivative identities: the step-h central difference
                // needs r well above the grid scale to resolve
                if r >= 10.0 * h && r - h >= rmin && g.ball_fits(xs, r + h) {
                    let ep = self.smoothed_energy(xs, r + h)?;
                    let em = self.smoothed_energy(xs, r - h)?;
                    let hp = self.smoothed_height(xs, r + h)?;
                    let hm = self.smoothed_height(xs, r - h)?;
                    let xi = self.xi(xs, r)?;
                    let de = (ep - em) / (2.0 * h);
                    let dh = (hp - hm) / (2.0 * h);
                    let rhs2 = (m as f64 - 2.0) / r * e + 2.0 / (r * r) * xi;
                    let rhs4 = (m as f64 - 1.0) / r * hh + 2.0 * e;
                    calc2 = calc2.max((de - rhs2).abs() / rhs2.abs().max(e / r).max(1e-12));
                    calc4 = calc4.max((dh - rhs4).abs() / rhs4.abs().max(1e-12));
                }
            }
        }

        checks.push(IdentityCheck {
            name: "calc1_energy_radial",
            residual: calc1,
            threshold: thresholds::CALC1,
            pass: calc1 < thresholds::CALC1,
        });
        checks.push(IdentityCheck {
            name: "calc2_energy_derivative",
            residual: calc2,
            threshold: thresholds::CALC2,
            pass: calc2 < thresholds::CALC2,
        });
        checks.push(IdentityCheck {
            name: "calc4_height_derivative",
            residual: calc4,
            threshold: thresholds::CALC4,
            pass: calc4 < thresholds::CALC4,
        });
        checks.push(IdentityCheck {
            name: "calc6_monotonicity",
            residual: calc6.max(0.0),
            threshold: thresholds::CALC6,
            pass: calc6 <= thresholds::CALC6,
        });

        // calc7 doubling between the extreme configured radii
        let s = cfg.radii[0];
        let r = *cfg.radii.last().unwrap();
        let mut calc7 = 0.0f64;
        for x in &cfg.samples {
            let ratio = self.doubling_ratio(&x[..m], s, r)?;
            calc7 = calc7.max((ratio - 1.0).abs());
        }
        checks.push(IdentityCheck {
            name: "calc7_doubling",
            residual: calc7,
            threshold: thresholds::CALC7,
            pass: calc7 < thresholds::CALC7,
        });

        let l31 = self.weak_laplacian_residual();
        checks.push(IdentityCheck {
            name: "lemma31_weak_laplacian",
            residual: l31,
            threshold: thresholds::LEMMA31,
            pass: l31 < thresholds::LEMMA31,
        });

        let l32 = self.inner_variation_residual();
        checks.push(IdentityCheck {
            name: "lemma32_inner_variation",
            residual: l32,
            threshold: thresholds::LEMMA32,
            pass: l32 < thresholds::LEMMA32,
        });

        // Lemma 3.4 bound: empirical constant, reported only.
        let l34 = self.lemma34_constant(cfg)?;
        checks.push(IdentityCheck {
            name: "lemma34_constant",
            residual: l34,
            threshold: f64::INFINITY,
            pass: l34.is_finite(),
        });

        Ok(IdentityReport { checks })
    }

    /// `s^{1-m} H(x,s) exp(2 ∫_s^r I dt/t) / (r^{1-m} H(x,r))`; equals 1 for
    /// exact minimizers. Trapezoid rule in log t.
    pub fn doubling_ratio(&self, x: &[f64], s: f64, r: f64) -> Result<f64> {
        let m = self.map.grid().dim() as f64;
        let steps = 24usize;
        let q = (r / s).powf(1.0 / steps as f64);
        let mut integral = 0.0;
        let mut prev = self.smoothed_frequency(x, s)?;
        for j in 1..=steps {
            let t = s * q.powi(j as i32);
            let cur = self.smoothed_frequency(x, t)?;
            integral += 0.5 * (prev + cur) * q.ln();
            prev = cur;
        }
        let hs = self.smoothed_height(x, s)?;
        let hr = self.smoothed_height(x, r)?;
        if hr <= 1e-250 || hs <= 1e-250 {
            return Err(Error::DegenerateHeight { center: x.to_vec(), radius: r });
        }
        Ok(s.powf(1.0 - m) * hs * (2.0 * integral).exp() / (r.powf(1.0 - m) * hr))
    }

    /// Weak form of `Δ d²(u,0_X) = 2 |∇u|²` against a radial bump function,
    /// relative to the energy term.
    pub fn weak_laplacian_residual(&self) -> f64 {
        let g = self.map.grid();
        let m = g.dim();
        let h = g.spacing();
        let l = g.extent();
        let vol = h.powi(m as i32);
        let rr = 0.8 * l;
        let mut term_energy = 0.0;
        let mut term_grad = 0.0;
        let n = g.resolution();
        for idx in g.node_indices() {
            let mi = g.multi_index(idx);
            if (0..m).any(|a| mi[a] == 0 || mi[a] == n) {
                continue;
            }
            let y = g.position(idx);
            let q: f64 = (0..m).map(|a| y[a] * y[a]).sum::<f64>() / (rr * rr);
            if q >= 1.0 {
                continue;
            }
            let phi = (1.0 - q).powi(4);
            term_energy += phi * self.grad_sq[idx];
            for a in 0..m {
                let gp = 4.0 * (1.0 - q).powi(3) * (-2.0 * y[a] / (rr * rr));
                let fwd = g.neighbor(idx, a, 1).unwrap();
                let bwd = g.neighbor(idx, a, -1).unwrap();
                let dd2 = (self.dist_sq[fwd] - self.dist_sq[bwd]) / (2.0 * h);
                term_grad += gp * dd2;
            }
        }
        term_energy *= 2.0 * vol;
        term_grad *= vol;
        (term_energy + term_grad).abs() / term_energy.abs().max(1e-300)
    }

    /// Inner-variation identity `2∫<∇u, ∇u ∘ ∇φ> = ∫ |∇u|² div φ` against
    /// bump vector fields; off-diagonal products come from the diagonal
    /// polarization of metric difference quotients.
    pub fn inner_variation_residual(&self) -> f64 {
        let g = self.map.grid();
        let target = self.map.target();
        let m = g.dim();
        let h = g.spacing();
        let l = g.extent();
        let n = g.resolution();
        let vol = h.powi(m as i32);
        let rr = 0.8 * l;
        let mut worst = 0.0f64;
        for dir in 0..m {
            let mut lhs = 0.0;
            let mut rhs = 0.0;
            for idx in g.node_indices() {
                let mi = g.multi_index(idx);
                if (0..m).any(|a| mi[a] == 0 || mi[a] >= n) {
                    continue;
                }
                let y = g.position(idx);
                let q: f64 = (0..m).map(|b| y[b] * y[b]).sum::<f64>() / (rr * rr);
                if q >= 1.0 {
                    continue;
                }
                let dphi = |a: usize| 4.0 * (1.0 - q).powi(3) * (-2.0 * y[a] / (rr * rr));
                let mut gten = [[0.0f64; 3]; 3];
                for a in 0..m {
                    let na = g.neighbor(idx, a, 1).unwrap();
                    let da = target.distance(self.map.value(idx), self.map.value(na)) / h;
                    gten[a][a] = da * da;
                }
                for a in 0..m {
                    for b in (a + 1)..m {
                        let mut diag = g.multi_index(idx);
                        diag[a] += 1;
                        diag[b] += 1;
                        let nd = g.index(diag);
                        let dd = target.distance(self.map.value(idx), self.map.value(nd)) / h;
                        let cross = 0.5 * (dd * dd - gten[a][a] - gten[b][b]);
                        gten[a][b] = cross;
                        gten[b][a] = cross;
                    }
                }
                let mut inner = 0.0;
                for a in 0..m {
                    inner += gten[a][dir] * dphi(a);
                }
                lhs += 2.0 * inner;
                rhs += self.grad_sq[idx] * dphi(dir);
            }
            lhs *= vol;
            rhs *= vol;
            let scale = lhs.abs().max(rhs.abs()).max(1e-300);
            worst = worst.max((lhs - rhs).abs() / scale);
        }
        worst
    }

    /// Empirical constant for `I(y, r) <= C (I(x, 16r) + 1)` with `x` the
    /// first sample point, `16r` capped at the admissible maximum.
    fn lemma34_constant(&self, cfg: &AnalysisConfig) -> Result<f64> {
        let g = self.map.grid();
        let m = g.dim();
        let x = cfg.samples[0];
        let rmax = 0.5 * g.extent();
        let mut c = 0.0f64;
        for &r in cfg.radii.iter().take(4) {
            let big = (16.0 * r).min(rmax);
            let base = self.smoothed_frequency(&x[..m], big)?;
            for shift in [[0.25 * r, 0.0, 0.0], [0.0, -0.25 * r, 0.0]] {
                let mut y = x;
                for a in 0..m {
                    y[a] += shift[a];
                }
                if !g.ball_fits(&y[..m], r) {
                    continue;
                }
                let iy = self.smoothed_frequency(&y[..m], r)?;
                c = c.max(iy / (base + 1.0));
            }
        }
        Ok(c)
    }

    /// Both sides of the homogeneity-defect bound: the annulus integral of
    /// `| |z-x| ∂_nu u - I(x,|z-x|) u |²` over `r1 < |z-x| <= r2`, and the
    /// pinching between `s_lo` and `s_hi`.
    pub fn homogeneity_defect(
        &self,
        x: &[f64],
        r1: f64,
        r2: f64,
        s_lo: f64,
        s_hi: f64,
    ) -> Result<(f64, f64)> {
        self.check_ball(x, r2)?;
        let xp = self.pad(x);
        let steps: i32 = 32;
        let q = (r2 / r1).powf(1.0 / steps as f64);
        let ladder: Vec<(f64, f64)> = (0..=steps)
            .map(|j| {
                let t = r1 * q.powi(j);
                Ok((t, self.smoothed_frequency(x, t)?))
            })
            .collect::<Result<_>>()?;
        let freq_at = |d: f64| -> f64 {
            if d <= ladder[0].0 {
                return ladder[0].1;
            }
            for w in ladder.windows(2) {
                if d <= w[1].0 {
                    let u = (d.ln() - w[0].0.ln()) / (w[1].0.ln() - w[0].0.ln());
                    return w[0].1 + u * (w[1].1 - w[0].1);
                }
            }
            ladder[steps as usize].1
        };
        let lhs = self.annulus_sum(&xp, r1, r2, |idx, y, d| {
            let i = freq_at(d);
            let speed2 = self.radial_speed_sq(&xp, y, d);
            let udu = self.radial_u_du(&xp, y, d);
            d * d * speed2 - 2.0 * d * i * udu + i * i * self.dist_sq[idx]
        });
        let pinch = self.pinching(x, s_lo, s_hi)?;
        Ok((lhs, pinch))
    }

    /// Empirical constant for the frequency variation along the segment
    /// between `x1` and `x2` at radius `r`, normalized by the pinching.
    pub fn segment_variation_constant(
        &self,
        x1: &[f64],
        x2: &[f64],
        r: f64,
        s_lo: f64,
        s_hi: f64,
    ) -> Result<f64> {
        let m = self.map.grid().dim();
        let w1 = self.pinching(x1, s_lo, s_hi)?.max(0.0);
        let w2 = self.pinching(x2, s_lo, s_hi)?.max(0.0);
        let wsum = (w1 + w2).max(1e-9);
        let sep: f64 = dist(m, &self.pad(x1), &self.pad(x2));
        let mut pts = Vec::new();
        for j in 0..=4 {
            let t = j as f64 / 4.0;
            let mut z = [0.0; 3];
            for a in 0..m {
                z[a] = x1[a] + t * (x2[a] - x1[a]);
            }
            pts.push((t, self.smoothed_frequency(&z[..m], r)?));
        }
        let mut c = 0.0f64;
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                let dz = (pts[j].0 - pts[i].0).abs() * sep;
                if dz > 1e-12 {
                    c = c.max((pts[j].1 - pts[i].1).abs() * sep / (dz * wsum.sqrt()));
                }
            }
        }
        Ok(c)
    }
}
