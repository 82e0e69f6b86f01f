//! Discretized box domains `[-L, L]^m`, maps on them, boundary data, the
//! discrete Dirichlet energy and map persistence.

use crate::complex::{ComplexKind, TargetComplex, TargetPoint};
use crate::error::{Error, Result};
use crate::fixtures::AnalyticMap;

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

pub const MIN_RESOLUTION: usize = 8;

/// Uniform grid over `[-L, L]^m` with `n + 1` nodes per axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    m: usize,
    n: usize,
    extent: f64,
}

impl Grid {
    pub fn new(m: usize, n: usize, extent: f64) -> Result<Self> {
        if m != 2 && m != 3 {
            return Err(Error::UnsupportedDimension(m));
        }
        if n < MIN_RESOLUTION {
            return Err(Error::GridTooCoarse { n, min: MIN_RESOLUTION });
        }
        if !(extent > 0.0) {
            return Err(Error::InvalidParameter(format!("extent must be positive, got {extent}")));
        }
        Ok(Grid { m, n, extent })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.extent / self.n as f64
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.n + 1
    }

    pub fn node_count(&self) -> usize {
        self.nodes_per_axis().pow(self.m as u32)
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.extent + i as f64 * self.spacing()
    }

    /// Flat index of a multi-index (axis 0 fastest).
    pub fn index(&self, mi: [usize; 3]) -> usize {
        let s = self.nodes_per_axis();
        match self.m {
            2 => mi[0] + s * mi[1],
            _ => mi[0] + s * (mi[1] + s * mi[2]),
        }
    }

    pub fn multi_index(&self, idx: usize) -> [usize; 3] {
        let s = self.nodes_per_axis();
        match self.m {
            2 => [idx % s, idx / s, 0],
            _ => [idx % s, (idx / s) % s, idx / (s * s)],
        }
    }

    /// Node position, padded with zeros beyond dimension `m`.
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let mi = self.multi_index(idx);
        let mut x = [0.0; 3];
        for a in 0..self.m {
            x[a] = self.coord(mi[a]);
        }
        x
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let mi = self.multi_index(idx);
        (0..self.m).any(|a| mi[a] == 0 || mi[a] == self.n)
    }

    /// Neighbor along `axis` in direction `dir` (+1/-1), if inside the grid.
    pub fn neighbor(&self, idx: usize, axis: usize, dir: i64) -> Option<usize> {
        let mi = self.multi_index(idx);
        let i = mi[axis] as i64 + dir;
        if i < 0 || i > self.n as i64 {
            return None;
        }
        let mut nb = mi;
        nb[axis] = i as usize;
        Some(self.index(nb))
    }

    pub fn node_indices(&self) -> impl Iterator<Item = usize> {
        0..self.node_count()
    }

    /// True if the Euclidean ball `B_r(x)` (plus half a cell of margin for
    /// quadrature) fits inside the box.
    pub fn ball_fits(&self, x: &[f64], r: f64) -> bool {
        let margin = 0.5 * self.spacing();
        (0..self.m).all(|a| x[a].abs() + r + margin <= self.extent + 1e-12)
    }
}

/// A grid map into a target complex: one [`TargetPoint`] per node.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMap {
    grid: Grid,
    target: TargetComplex,
    values: Vec<TargetPoint>,
}

impl DiscreteMap {
    pub fn from_values(grid: Grid, target: TargetComplex, values: Vec<TargetPoint>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::InvalidParameter(format!(
                "value count {} does not match node count {}",
                values.len(),
                grid.node_count()
            )));
        }
        for v in &values {
            target.validate_point(v)?;
        }
        Ok(DiscreteMap { grid, target, values })
    }

    /// Sample an analytic fixture on every node.
    pub fn sample(grid: Grid, fixture: &AnalyticMap) -> Result<Self> {
        fixture.validate_for(grid.dim())?;
        let target = fixture.target();
        let values = grid
            .node_indices()
            .map(|idx| fixture.eval(&grid.position(idx)))
            .collect();
        Ok(DiscreteMap { grid, target, values })
    }

    pub fn constant(grid: Grid, target: TargetComplex, point: TargetPoint) -> Result<Self> {
        target.validate_point(&point)?;
        Ok(DiscreteMap { grid, target, values: vec![point; grid.node_count()] })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn target(&self) -> &TargetComplex {
        &self.target
    }

    pub fn value(&self, idx: usize) -> &TargetPoint {
        &self.values[idx]
    }

    pub fn values(&self) -> &[TargetPoint] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [TargetPoint] {
        &mut self.values
    }

    /// Forward-difference Dirichlet energy
    /// `Σ_edges d²(u_a, u_b) / h² · h^m`, with trapezoidal weights in the
    /// directions transverse to each edge so the quadrature is exact for
    /// linear maps into a flat.
    pub fn energy(&self) -> f64 {
        let g = &self.grid;
        let n = g.resolution();
        let h = g.spacing();
        let scale = h.powi(g.dim() as i32 - 2);
        let mut total = 0.0;
        for idx in g.node_indices() {
            let mi = g.multi_index(idx);
            for axis in 0..g.dim() {
                if mi[axis] >= n {
                    continue;
                }
                let mut w = 1.0;
                for b in 0..g.dim() {
                    if b != axis && (mi[b] == 0 || mi[b] == n) {
                        w *= 0.5;
                    }
                }
                let nb = g.neighbor(idx, axis, 1).unwrap();
                let d = self.target.distance(&self.values[idx], &self.values[nb]);
                total += w * d * d;
            }
        }
        total * scale
    }

    /// Energy restricted to edges whose midpoint lies in `B_r(x)`.
    /// Plain edge weights; used against radially computed oracles.
    pub fn energy_in_ball(&self, x: &[f64], r: f64) -> f64 {
        let g = &self.grid;
        let n = g.resolution();
        let h = g.spacing();
        let scale = h.powi(g.dim() as i32 - 2);
        let mut total = 0.0;
        for idx in g.node_indices() {
            let mi = g.multi_index(idx);
            let p = g.position(idx);
            for axis in 0..g.dim() {
                if mi[axis] >= n {
                    continue;
                }
                let mut mid = p;
                mid[axis] += 0.5 * h;
                let dist2: f64 = (0..g.dim()).map(|a| (mid[a] - x[a]).powi(2)).sum();
                if dist2 > r * r {
                    continue;
                }
                let nb = g.neighbor(idx, axis, 1).unwrap();
                let d = self.target.distance(&self.values[idx], &self.values[nb]);
                total += d * d;
            }
        }
        total * scale
    }

    /// Versioned CSV persistence; round-trips bit-exactly.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "conelab-map,1")?;
        writeln!(w, "m,{}", self.grid.dim())?;
        writeln!(w, "n,{}", self.grid.resolution())?;
        writeln!(w, "extent,{}", self.grid.extent())?;
        let kind = match self.target.kind() {
            ComplexKind::Spider => "spider",
            ComplexKind::Book => "book",
        };
        writeln!(w, "target,{},{}", kind, self.target.face_count())?;
        writeln!(w, "face,c0,c1")?;
        for v in &self.values {
            let (a, b) = v.coords();
            writeln!(w, "{},{},{}", v.face(), a, b)?;
        }
        Ok(())
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(BufWriter::new(f))
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let mut next = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::Parse("unexpected end of map file".into()))?
                .map_err(Error::from)
        };
        let header = next()?;
        if header.trim() != "conelab-map,1" {
            return Err(Error::Parse(format!("bad map header: {header}")));
        }
        let field = |line: String, key: &str| -> Result<String> {
            let (k, v) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("bad line: {line}")))?;
            if k != key {
                return Err(Error::Parse(format!("expected key {key}, got {k}")));
            }
            Ok(v.to_string())
        };
        let m: usize = field(next()?, "m")?.parse().map_err(|e| Error::Parse(format!("m: {e}")))?;
        let n: usize = field(next()?, "n")?.parse().map_err(|e| Error::Parse(format!("n: {e}")))?;
        let extent: f64 =
            field(next()?, "extent")?.parse().map_err(|e| Error::Parse(format!("extent: {e}")))?;
        let target_line = next()?;
        let mut it = target_line.split(',');
        if it.next() != Some("target") {
            return Err(Error::Parse(format!("expected target line, got {target_line}")));
        }
        let kind = it.next().ok_or_else(|| Error::Parse("missing target kind".into()))?;
        let k: u32 = it
            .next()
            .ok_or_else(|| Error::Parse("missing face count".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("face count: {e}")))?;
        let target = match kind {
            "spider" => TargetComplex::spider(k)?,
            "book" => TargetComplex::book(k)?,
            other => return Err(Error::Parse(format!("unknown target kind {other}"))),
        };
        let cols = next()?;
        if cols.trim() != "face,c0,c1" {
            return Err(Error::Parse(format!("bad column header: {cols}")));
        }
        let grid = Grid::new(m, n, extent)?;
        let mut values = Vec::with_capacity(grid.node_count());
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let face: u32 = parts
                .next()
                .ok_or_else(|| Error::Parse("missing face".into()))?
                .parse()
                .map_err(|e| Error::Parse(format!("face: {e}")))?;
            let a: f64 = parts
                .next()
                .ok_or_else(|| Error::Parse("missing c0".into()))?
                .parse()
                .map_err(|e| Error::Parse(format!("c0: {e}")))?;
            let b: f64 = parts
                .next()
                .ok_or_else(|| Error::Parse("missing c1".into()))?
                .parse()
                .map_err(|e| Error::Parse(format!("c1: {e}")))?;
            values.push(target.point(face, a, b)?);
        }
        DiscreteMap::from_values(grid, target, values)
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_csv(BufReader::new(f))
    }
}

/// Boundary prescription: an analytic fixture restricted to the boundary, or
/// an explicit table covering every boundary node.
#[derive(Clone, Debug)]
pub enum BoundaryValues {
    Analytic(AnalyticMap),
    Table(Vec<(usize, TargetPoint)>),
}

#[derive(Clone, Debug)]
pub struct BoundaryData {
    target: TargetComplex,
    values: BoundaryValues,
}

impl BoundaryData {
    pub fn analytic(fixture: AnalyticMap) -> Self {
        BoundaryData { target: fixture.target(), values: BoundaryValues::Analytic(fixture) }
    }

    /// Tabulated data; `entries` must cover every boundary node of the grid
    /// it is later used with (checked in [`BoundaryData::value_at`]).
    pub fn table(target: TargetComplex, mut entries: Vec<(usize, TargetPoint)>) -> Self {
        entries.sort_unstable_by_key(|e| e.0);
        BoundaryData { target, values: BoundaryValues::Table(entries) }
    }

    pub fn target(&self) -> &TargetComplex {
        &self.target
    }

    pub fn fixture(&self) -> Option<&AnalyticMap> {
        match &self.values {
            BoundaryValues::Analytic(f) => Some(f),
            BoundaryValues::Table(_) => None,
        }
    }

    /// Exponent for the radial initial guess.
    pub fn homogeneity_exponent(&self) -> f64 {
        match &self.values {
            BoundaryValues::Analytic(f) => f.homogeneity_exponent(),
            BoundaryValues::Table(_) => 1.0,
        }
    }

    pub fn value_at(&self, grid: &Grid, idx: usize) -> Result<TargetPoint> {
        debug_assert!(grid.is_boundary(idx));
        match &self.values {
            BoundaryValues::Analytic(f) => Ok(f.eval(&grid.position(idx))),
            BoundaryValues::Table(entries) => entries
                .binary_search_by_key(&idx, |e| e.0)
                .map(|i| entries[i].1)
                .map_err(|_| Error::BoundaryIncomplete(idx)),
        }
    }

    /// Boundary value at an arbitrary point of the box boundary. Analytic
    /// data evaluates exactly; tabulated data snaps to the nearest boundary
    /// node.
    pub fn value_at_position(&self, grid: &Grid, pos: &[f64; 3]) -> Result<TargetPoint> {
        match &self.values {
            BoundaryValues::Analytic(f) => Ok(f.eval(pos)),
            BoundaryValues::Table(_) => {
                let n = grid.resolution();
                let h = grid.spacing();
                let l = grid.extent();
                let mut mi = [0usize; 3];
                for a in 0..grid.dim() {
                    let c = ((pos[a] + l) / h).round() as i64;
                    mi[a] = c.clamp(0, n as i64) as usize;
                }
                if !(0..grid.dim()).any(|a| mi[a] == 0 || mi[a] == n) {
                    let amax = (0..grid.dim())
                        .max_by(|&i, &j| pos[i].abs().total_cmp(&pos[j].abs()))
                        .unwrap();
                    mi[amax] = if pos[amax] >= 0.0 { n } else { 0 };
                }
                self.value_at(grid, grid.index(mi))
            }
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if let BoundaryValues::Analytic(f) = &self.values {
            f.validate_for(grid.dim())?;
        }
        for idx in grid.node_indices().filter(|&i| grid.is_boundary(i)) {
            let v = self.value_at(grid, idx)?;
            self.target.validate_point(&v)?;
        }
        Ok(())
    }
}

/// Boundary trace of the degree-`k/2` homogeneous spider competitor.
pub fn make_boundary_spider_homogeneous(k: u32, grid: &Grid) -> Result<BoundaryData> {
    if k < 3 {
        return Err(Error::TooFewFaces(k));
    }
    if grid.dim() != 2 {
        return Err(Error::UnsupportedDimension(grid.dim()));
    }
    Ok(BoundaryData::analytic(AnalyticMap::SpiderHomogeneous { k }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_basics() {
        assert!(Grid::new(4, 16, 1.0).is_err());
        assert!(Grid::new(2, 4, 1.0).is_err());
        let g = Grid::new(2, 16, 1.0).unwrap();
        assert_eq!(g.spacing(), 0.125);
        assert_eq!(g.node_count(), 17 * 17);
        assert_eq!(g.coord(0), -1.0);
        assert_eq!(g.coord(16), 1.0);
        let idx = g.index([3, 5, 0]);
        assert_eq!(g.multi_index(idx), [3, 5, 0]);
        assert!(g.is_boundary(g.index([0, 7, 0])));
        assert!(!g.is_boundary(g.index([3, 5, 0])));
    }

    #[test]
    fn constant_map_has_zero_energy() {
        let g = Grid::new(2, 16, 1.0).unwrap();
        let x = TargetComplex::spider(3).unwrap();
        let p = x.point(1, 0.7, 0.0).unwrap();
        let u = DiscreteMap::constant(g, x, p).unwrap();
        assert_eq!(u.energy(), 0.0);
    }

    #[test]
    fn linear_map_energy_is_exact() {
        // unit-gradient map into a flat on [-1,1]^2: energy = |Omega| = 4
        let g = Grid::new(2, 32, 1.0).unwrap();
        let u = DiscreteMap::sample(g, &AnalyticMap::LinearFlat).unwrap();
        assert!((u.energy() - 4.0).abs() < 1e-12);

        let g3 = Grid::new(3, 8, 1.0).unwrap();
        let u3 = DiscreteMap::sample(g3, &AnalyticMap::LinearFlat).unwrap();
        assert!((u3.energy() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn energy_invariant_under_face_relabeling() {
        let g = Grid::new(2, 24, 1.0).unwrap();
        let u = DiscreteMap::sample(g, &AnalyticMap::SpiderHomogeneous { k: 3 }).unwrap();
        let target = *u.target();
        let perm = [2u32, 0, 1];
        let relabeled: Vec<TargetPoint> = u
            .values()
            .iter()
            .map(|p| {
                let (a, _) = p.coords();
                target.point(perm[p.face() as usize], a, 0.0).unwrap()
            })
            .collect();
        let v = DiscreteMap::from_values(g, target, relabeled).unwrap();
        assert!((u.energy() - v.energy()).abs() < 1e-12);
    }

    #[test]
    fn tripod_ball_energy_matches_radial_oracle() {
        // For the degree-3/2 tripod map, E(B_1) = (3/2) * H(0,1) where
        // H(0,1) = \int_{S^1} profile^2 = pi; computed here by quadrature.
        let mut h01 = 0.0;
        let nq = 20_000;
        for i in 0..nq {
            let theta = 2.0 * PI * (i as f64 + 0.5) / nq as f64;
            let u = AnalyticMap::SpiderHomogeneous { k: 3 };
            let p = u.eval(&[theta.cos(), theta.sin()]);
            h01 += p.coords().0.powi(2);
        }
        h01 *= 2.0 * PI / nq as f64;
        assert!((h01 - PI).abs() < 1e-6);
        let exact = 1.5 * h01;

        let mut errs = Vec::new();
        for n in [64usize, 128] {
            let g = Grid::new(2, n, 1.0).unwrap();
            let u = DiscreteMap::sample(g, &AnalyticMap::SpiderHomogeneous { k: 3 }).unwrap();
            let e = u.energy_in_ball(&[0.0, 0.0], 1.0);
            errs.push((e - exact).abs() / exact);
        }
        assert!(errs[1] < 0.03, "relative error {} too large", errs[1]);
        assert!(errs[1] < errs[0], "no refinement improvement: {errs:?}");
    }

    #[test]
    fn boundary_fixture_examples() {
        let g = Grid::new(2, 16, 1.0).unwrap();
        let b = make_boundary_spider_homogeneous(3, &g).unwrap();
        // node (1, 0) sits at the sector-0 center with r = 1
        let idx = g.index([16, 8, 0]);
        let p = b.value_at(&g, idx).unwrap();
        assert_eq!(p.face(), 0);
        assert!((p.coords().0 - 1.0).abs() < 1e-14);
        assert!(make_boundary_spider_homogeneous(2, &g).is_err());

        b.validate(&g).unwrap();
    }

    #[test]
    fn map_roundtrip_is_bit_exact() {
        let g = Grid::new(2, 16, 1.0).unwrap();
        let u = DiscreteMap::sample(g, &AnalyticMap::SpiderHomogeneous { k: 3 }).unwrap();
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        let v = DiscreteMap::read_csv(std::io::BufReader::new(buf.as_slice())).unwrap();
        assert_eq!(u, v);

        let g3 = Grid::new(3, 8, 1.0).unwrap();
        let w = DiscreteMap::sample(g3, &AnalyticMap::BookProduct).unwrap();
        let mut buf = Vec::new();
        w.write_csv(&mut buf).unwrap();
        let w2 = DiscreteMap::read_csv(std::io::BufReader::new(buf.as_slice())).unwrap();
        assert_eq!(w, w2);
    }

    #[test]
    fn incomplete_table_is_rejected() {
        let g = Grid::new(2, 16, 1.0).unwrap();
        let x = TargetComplex::spider(3).unwrap();
        let b = BoundaryData::table(x, vec![(0, x.origin())]);
        assert!(matches!(b.validate(&g), Err(Error::BoundaryIncomplete(_))));
    }
}
