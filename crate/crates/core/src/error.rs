use alloc::string::String;

/// Errors raised by the segmentation algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("dimension mismatch: expected {expected} columns, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("class {class} has {count} samples, at least {required} required")]
    InsufficientSamples {
        class: usize,
        count: usize,
        required: usize,
    },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("solver did not converge after {iterations} iterations (gradient norm {gradient_norm:e})")]
    NotConverged {
        iterations: usize,
        gradient_norm: f64,
    },
    #[error("undefined j-statistic: ground truth lacks {0}")]
    UndefinedJ(&'static str),
    #[error("missing feature field `{0}` for the requested variant")]
    MissingField(&'static str),
    #[error("expansion dimension {dim} exceeds cap {cap}")]
    ExpansionTooLarge { dim: usize, cap: usize },
    #[error("too many ensemble candidates: {0} (max 10)")]
    TooManyCandidates(usize),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
