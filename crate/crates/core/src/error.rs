use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("solver did not converge after {iterations} iterations (bracket [{lower}, {upper}])")]
    NotConverged {
        lower: f64,
        upper: f64,
        iterations: usize,
    },
    #[error("quadrature error estimate {estimate:e} exceeds requested tolerance {requested:e}")]
    Quadrature { estimate: f64, requested: f64 },
    #[error("semigroup is not bounded: {0}")]
    Unbounded(String),
    #[error("tail bound unavailable: {0}")]
    TailUnavailable(String),
    #[error("root finding failed: {0}")]
    RootFinding(String),
    #[error("reconstruction residual {residual:e} exceeds tolerance {tolerance:e}")]
    Reconstruction { residual: f64, tolerance: f64 },
    #[error("grid carries no quadrature weights")]
    MissingWeights,
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
