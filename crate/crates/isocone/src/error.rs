use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid cone: {0}")]
    InvalidCone(String),
    #[error("weight is not homogeneous: {0}")]
    Inhomogeneous(String),
    #[error("inadmissible weight: {0}")]
    InadmissibleWeight(String),
    #[error("point ({0}, {1}) lies outside the closed cone")]
    OutsideCone(f64, f64),
    #[error("weight vanishes at the base point")]
    DegeneratePoint,
    #[error("inner cone is not compactly contained in the outer cone")]
    NotCompactlyContained,
    #[error("angular grid too coarse: {0} samples, need at least {1}")]
    GridTooCoarse(usize, usize),
    #[error("invalid set: {0}")]
    InvalidSet(String),
    #[error("set has zero weighted volume")]
    ZeroVolume,
    #[error("unsupported translation: |x0| = {0} is not below r = {1}")]
    UnsupportedTranslation(f64, f64),
    #[error("empty sample set")]
    EmptySamples,
    #[error("hypothesis failure: {0}")]
    HypothesisFailure(String),
    #[error("mesh resolution infeasible: {0}")]
    MeshInfeasible(String),
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("compatibility violated: residual sum {0:e}")]
    Compatibility(f64),
    #[error("solver did not converge: relative residual {0:e}")]
    NoConvergence(f64),
    #[error("minimizer-degenerate input: deficit {0:e} is below the ratio threshold")]
    MinimizerDegenerate(f64),
    #[error("inadmissible input: {0}")]
    Inadmissible(String),
    #[error("search space too large: {0}")]
    SearchTooLarge(String),
    #[error("fit rejected: {0}")]
    FitRejected(String),
    #[error("inequality chain violated: {0}")]
    ChainViolation(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
