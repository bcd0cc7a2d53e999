use thiserror::Error;

/// Errors raised by the estimation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DoaError {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Matrix or vector dimensions do not agree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// The measurement kind is incompatible with the requested shape.
    #[error("measurement kind error: {0}")]
    Kind(String),

    /// More sources than the array can identify.
    #[error("identifiability: {0}")]
    Identifiability(String),

    /// The requested sparsity cannot be met by the measurement count.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// An exhaustive search would exceed its enumeration budget.
    #[error("refused: {0}")]
    Refused(String),

    /// A factorization failed or a matrix is too ill-conditioned to use.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A structural invariant was violated.
    #[error("invariant violation: {0}")]
    Invariant(String),

    /// A configuration value is invalid.
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, DoaError>;
