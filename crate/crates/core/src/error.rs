use thiserror::Error;

/// Errors raised by structures, checkers and solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite input: {0}")]
    NonFiniteInput(String),

    #[error("coefficient must be a positive finite real, got {0}")]
    NonPositiveScalar(f64),

    #[error("domain violation: {0}")]
    DomainViolation(String),

    #[error("chart violation: {0}")]
    ChartViolation(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("coefficient product is 1; the composition is not a contraction")]
    UnitCoefficient,

    #[error("operation requires a linear structure (group model), got {0}")]
    NotLinearModel(String),

    #[error("configuration error: {0}")]
    ConfigParse(String),

    #[error("unsupported output format: {0}")]
    UnsupportedFormat(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Process exit status for the batch driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NoConvergence(_) => 3,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
