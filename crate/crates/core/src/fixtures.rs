//! Analytic reference maps.
//!
//! Each fixture can be evaluated at any domain point, which makes it usable
//! three ways: as boundary data (restricted to the box boundary), as an
//! initial guess (through radial cone scaling), and as an exact oracle for
//! solver and frequency tests.

use crate::complex::{TargetComplex, TargetPoint};
use crate::error::{Error, Result};

use std::f64::consts::PI;

/// Named analytic map into a spider or book.
#[derive(Clone, Debug, PartialEq)]
pub enum AnalyticMap {
    /// m = 2 into `Spider(k)`: the degree-`k/2` homogeneous map whose sector
    /// profile is the first Dirichlet mode, `ρ = r^{k/2} cos((k/2)(θ−θ_j))`
    /// on the sector of face `j`.
    SpiderHomogeneous { k: u32 },
    /// m = 2 into `Spider(3)`: the tripod trace with the face-2 amplitude
    /// scaled by `1 + eps`. Not homogeneous; used through its boundary trace
    /// and solved numerically.
    SpiderPerturbed { eps: f64 },
    /// `u(x) = x_1` into the flat spanned by faces 0 and 1 of `Spider(3)`.
    /// Works in any domain dimension.
    LinearFlat,
    /// m = 2 into `Book(3)`: spine coordinate `s = spine_coef · x_1`, page
    /// part the tripod map of `x`. Mixed homogeneities 1 and 3/2.
    BookMixed { spine_coef: f64 },
    /// m = 3 into `Book(3)`: constant along `x_1`, tripod map of `(x_2, x_3)`
    /// in the page coordinate, `s ≡ 0`. Singular set is the line
    /// `{x_2 = x_3 = 0}`.
    BookProduct,
    /// Constant map.
    Constant { target: TargetComplex, point: TargetPoint },
}

/// Sector decomposition used by the spider fixtures: face `j` owns the
/// sector of width `2π/k` centered at `θ_j = 2πj/k`. Returns the face and
/// the angle relative to the sector center, in `[−π/k, π/k]`.
pub fn spider_sector(k: u32, x: f64, y: f64) -> (u32, f64) {
    let theta = y.atan2(x);
    let width = 2.0 * PI / k as f64;
    let j = (theta / width).round();
    let mut phi = theta - j * width;
    // guard against rounding at the wrap-around
    if phi > width / 2.0 {
        phi = width / 2.0;
    } else if phi < -width / 2.0 {
        phi = -width / 2.0;
    }
    let face = ((j as i64).rem_euclid(k as i64)) as u32;
    (face, phi)
}

fn tripod_value(x: f64, y: f64, amplitudes: Option<&[f64; 3]>) -> (u32, f64) {
    let r = x.hypot(y);
    if r == 0.0 {
        return (0, 0.0);
    }
    let (face, phi) = spider_sector(3, x, y);
    let amp = amplitudes.map_or(1.0, |a| a[face as usize]);
    let rho = amp * r.powf(1.5) * (1.5 * phi).cos();
    (face, rho.max(0.0))
}

impl AnalyticMap {
    pub fn target(&self) -> TargetComplex {
        match self {
            AnalyticMap::SpiderHomogeneous { k } => TargetComplex::spider(*k).unwrap(),
            AnalyticMap::SpiderPerturbed { .. } => TargetComplex::spider(3).unwrap(),
            AnalyticMap::LinearFlat => TargetComplex::spider(3).unwrap(),
            AnalyticMap::BookMixed { .. } | AnalyticMap::BookProduct => {
                TargetComplex::book(3).unwrap()
            }
            AnalyticMap::Constant { target, .. } => *target,
        }
    }

    /// Domain dimension the fixture is defined for; `None` means any.
    pub fn domain_dim(&self) -> Option<usize> {
        match self {
            AnalyticMap::SpiderHomogeneous { .. }
            | AnalyticMap::SpiderPerturbed { .. }
            | AnalyticMap::BookMixed { .. } => Some(2),
            AnalyticMap::BookProduct => Some(3),
            AnalyticMap::LinearFlat | AnalyticMap::Constant { .. } => None,
        }
    }

    /// Homogeneity degree used by the radial initial guess. For the
    /// non-homogeneous fixtures this is the degree of the dominant mode.
    pub fn homogeneity_exponent(&self) -> f64 {
        match self {
            AnalyticMap::SpiderHomogeneous { k } => *k as f64 / 2.0,
            AnalyticMap::SpiderPerturbed { .. } => 1.5,
            AnalyticMap::LinearFlat => 1.0,
            AnalyticMap::BookMixed { .. } => 1.0,
            AnalyticMap::BookProduct => 1.5,
            AnalyticMap::Constant { .. } => 0.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AnalyticMap::SpiderHomogeneous { .. } => "spider_homogeneous",
            AnalyticMap::SpiderPerturbed { .. } => "spider_perturbed",
            AnalyticMap::LinearFlat => "linear_flat",
            AnalyticMap::BookMixed { .. } => "book_mixed",
            AnalyticMap::BookProduct => "book_product",
            AnalyticMap::Constant { .. } => "constant",
        }
    }

    /// Evaluate the map at a domain point (trailing coordinates ignored for
    /// 2-D fixtures).
    pub fn eval(&self, x: &[f64]) -> TargetPoint {
        match self {
            AnalyticMap::SpiderHomogeneous { k } => {
                let r = x[0].hypot(x[1]);
                if r == 0.0 {
                    return TargetPoint::raw_spider(0, 0.0);
                }
                let alpha = *k as f64 / 2.0;
                let (face, phi) = spider_sector(*k, x[0], x[1]);
                let rho = r.powf(alpha) * (alpha * phi).cos();
                TargetPoint::raw_spider(face, rho.max(0.0))
            }
            AnalyticMap::SpiderPerturbed { eps } => {
                let amps = [1.0, 1.0, 1.0 + eps];
                let (face, rho) = tripod_value(x[0], x[1], Some(&amps));
                TargetPoint::raw_spider(face, rho)
            }
            AnalyticMap::LinearFlat => {
                if x[0] >= 0.0 {
                    TargetPoint::raw_spider(0, x[0])
                } else {
                    TargetPoint::raw_spider(1, -x[0])
                }
            }
            AnalyticMap::BookMixed { spine_coef } => {
                let (face, rho) = tripod_value(x[0], x[1], None);
                TargetPoint::raw_book(face, spine_coef * x[0], rho)
            }
            AnalyticMap::BookProduct => {
                let (face, rho) = tripod_value(x[1], x[2], None);
                TargetPoint::raw_book(face, 0.0, rho)
            }
            AnalyticMap::Constant { point, .. } => *point,
        }
    }

    pub fn validate_for(&self, m: usize) -> Result<()> {
        match self.domain_dim() {
            Some(d) if d != m => Err(Error::InvalidParameter(format!(
                "fixture {} needs an m = {d} domain, grid has m = {m}",
                self.name()
            ))),
            _ => Ok(()),
        }
    }
}
