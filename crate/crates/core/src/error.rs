use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum StapError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dictionary needs {required_bytes} bytes, budget is {budget_bytes} bytes")]
    ResourceExhausted { required_bytes: u64, budget_bytes: u64 },

    #[error("selected support is numerically rank-deficient at column {index} (condition estimate {condition:.3e})")]
    DegenerateSupport { index: usize, condition: f64 },

    /// No magnitude gap separates clutter from the rest of the map. The
    /// unmodified magnitude map is attached so callers can inspect it.
    #[error("no magnitude gap found in the sorted coefficient map")]
    NoGap { unzeroed_map: Vec<f64> },

    #[error("covariance matrix is singular or ill-conditioned (condition estimate {condition:.3e})")]
    SingularCovariance { condition: f64 },

    #[error("undefined reference: {0}")]
    UndefinedReference(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("insufficient training cells: need {required}, have {available}")]
    InsufficientTraining { required: usize, available: usize },

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, StapError>;

pub(crate) fn invalid(msg: impl Into<String>) -> StapError {
    StapError::InvalidArgument(msg.into())
}
