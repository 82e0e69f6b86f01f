//! Numerical laboratory for energy-minimizing maps from Euclidean boxes into
//! conical complexes (spiders and books of half-planes).
//!
//! The crate is organized around a pipeline:
//!
//! 1. [`complex`] — the target spaces, their metric, geodesics and barycenters;
//! 2. [`grid`] / [`fixtures`] — discretized domains, boundary data and the
//!    analytic reference maps used as oracles;
//! 3. [`solver`] — geodesic barycenter relaxation (nonlinear Gauss–Seidel);
//! 4. [`frequency`] — smoothed energy/height/frequency functionals, pinching
//!    and the monotonicity/variational identity checks;
//! 5. [`singular`] — singular-set detection and rigid-case oracles;
//! 6. [`flatness`] — weighted point clouds, mean flatness, the discrete
//!    Reifenberg test and the rectifiability statistic;
//! 7. [`covering`] — frequency-drop coverings and Minkowski content estimates.

pub mod complex;
pub mod covering;
pub mod error;
pub mod fixtures;
pub mod flatness;
pub mod frequency;
pub mod grid;
pub mod singular;
pub mod solver;

pub use complex::{ComplexKind, TargetComplex, TargetPoint};
pub use error::{Error, Result};
pub use grid::{BoundaryData, DiscreteMap, Grid};
pub use solver::{SolveConfig, SolveOutcome, SweepOrder};
