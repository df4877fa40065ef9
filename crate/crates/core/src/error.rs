use thiserror::Error;

/// Errors raised by every fallible operation in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum WfbsError {
    /// A sheet or particle parameter violates its admissible range.
    #[error("parameter out of range (axis {index}): {constraint}")]
    OutOfRange { index: usize, constraint: String },

    /// An argument lies outside the mathematical domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature could not reach the requested tolerance.
    #[error("quadrature failed for {what}: estimate {estimate:e} with error {abs_err:e} (tolerance {tolerance:e})")]
    QuadratureFailure {
        what: String,
        estimate: f64,
        abs_err: f64,
        tolerance: f64,
    },

    /// Rectangle corners are not strictly ordered or the requested ordering does not hold.
    #[error("invalid rectangle: {0}")]
    InvalidRect(String),

    /// Cholesky factorization failed at every jitter level.
    #[error("matrix of size {size} is not positive semidefinite (failed with jitter {max_jitter:e})")]
    NotPsd { size: usize, max_jitter: f64 },

    #[error("need at least {need} replications, got {got}")]
    TooFewReplications { got: usize, need: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = WfbsError> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> WfbsError {
    WfbsError::Domain(msg.into())
}
