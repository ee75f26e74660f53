use thiserror::Error;

/// Failures raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid map coefficients: {0}")]
    InvalidMap(String),
    #[error("invalid region parameters: {0}")]
    InvalidRegion(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("orbit escaped")]
    Escaped,
    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("point of norm {norm} lies outside the invertibility radius {radius}")]
    OutsideInvertibleRegion { norm: f64, radius: f64 },
    #[error("first quadratic form vanishes identically")]
    DegenerateInput,
    #[error("every direction is characteristic")]
    Dicritical,
    #[error("characteristic direction is degenerate")]
    DegenerateDirection,
    #[error("parameter outside the admissible sector")]
    EpsOutsideSector,
    #[error("parameter must be nonzero")]
    ZeroEpsilon,
    #[error("point sits on a split fixed point")]
    PoleAtGate,
    #[error("value outside the strip of the chart")]
    OutsideStrip,
    #[error("orbit does not settle in the attracting cone")]
    NotInBasin,
    #[error("backward orbit does not settle in the repelling cone")]
    NotInRepellingBasin,
    #[error("orbit left the admissible domain at step {0}")]
    OrbitLeftDomain(usize),
    #[error("neither entry nor exit within {budget} steps")]
    BudgetExceeded { budget: usize },
    #[error("factor 1 - a/{0} leaves (0, 1)")]
    DomainViolation(usize),
    #[error("sector condition fails at indices {0:?}")]
    SectorViolation(Vec<usize>),
    #[error("orbit escaped along tail index {0}")]
    OrbitEscaped(usize),
    #[error("transfer image is not in the repelling cone")]
    ImageNotInRepellingBasin,
    #[error("map is not regular")]
    NotRegular,
    #[error("rasters have different geometry")]
    GridMismatch,
    #[error("inconclusive scene: {0}")]
    InconclusiveScene(String),
}

pub type Result<T> = std::result::Result<T, Error>;
