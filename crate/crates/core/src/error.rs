use crate::solver::SolveFailure;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("face index {face} out of range for a complex with {count} faces")]
    FaceOutOfRange { face: u32, count: u32 },

    #[error("a spider or book needs at least 3 faces, got {0}")]
    TooFewFaces(u32),

    #[error("invalid coordinate: {0}")]
    InvalidCoordinate(String),

    #[error("interpolation parameter {0} lies outside [0, 1]")]
    InvalidFraction(f64),

    #[error("cone scaling factor {0} is negative")]
    NegativeScale(f64),

    #[error("weighted barycenter of an empty point list")]
    EmptyBarycenter,

    #[error("barycenter weights must be positive, got {0}")]
    NonPositiveWeight(f64),

    #[error("unsupported domain dimension {0} (only m = 2 and m = 3)")]
    UnsupportedDimension(usize),

    #[error("grid resolution n = {n} is below the minimum {min}")]
    GridTooCoarse { n: usize, min: usize },

    #[error("point dimension {got} does not match grid dimension {want}")]
    DimensionMismatch { got: usize, want: usize },

    #[error("target mismatch: {0}")]
    TargetMismatch(String),

    #[error("boundary data does not cover node {0}")]
    BoundaryIncomplete(usize),

    #[error("ball B_{radius}({center:?}) leaves the domain box")]
    BallOutsideDomain { center: Vec<f64>, radius: f64 },

    #[error("radius {radius} is below the quadrature resolution {min}")]
    RadiusBelowResolution { radius: f64, min: f64 },

    #[error("degenerate height at x = {center:?}, r = {radius}: map is ~constant at the cone point")]
    DegenerateHeight { center: Vec<f64>, radius: f64 },

    #[error("no grid nodes on the sphere shell |y - x| = {radius} around {center:?}")]
    EmptyShell { center: Vec<f64>, radius: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cloud atoms {i} and {j} carry overlapping balls")]
    OverlappingBalls { i: usize, j: usize },

    #[error("cloud atom {0} lies outside the declared ambient box")]
    AtomOutsideAmbient(usize),

    #[error("frequency oracle failed at x = {center:?}, r = {radius}: {source}")]
    FrequencyOracle {
        center: Vec<f64>,
        radius: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("covering lost input points (internal defect): {0} uncovered")]
    CoverageIncomplete(usize),

    #[error("solver did not converge: {0}")]
    NotConverged(Box<SolveFailure>),

    #[error("malformed file: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
