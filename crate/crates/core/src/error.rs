use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the library. Domain violations name the condition that
/// failed so callers can report it verbatim.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is singular")]
    Singular,

    #[error("matrix is not symmetric")]
    NotSymmetric,

    #[error("matrix is not orthogonal")]
    NotOrthogonal,

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("zero scale factor")]
    ZeroScale,

    #[error("hinge condition {condition} violated: {detail}")]
    HingeCondition { condition: String, detail: String },

    #[error("relation is not {property}: {detail}")]
    Relation { property: String, detail: String },

    #[error("not representable in the exact backend: {0}")]
    NotExact(String),

    #[error("ambiguous clustering: {0}")]
    AmbiguousClustering(String),

    #[error("rank deficient: {0}")]
    RankDeficient(String),

    #[error("sequence is not eventually nonincreasing: {0}")]
    NotMonotone(String),

    #[error("divergence at step {step}: {detail}")]
    Divergence { step: u8, detail: String },

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn hinge(condition: &str, detail: impl Into<String>) -> Self {
        Error::HingeCondition {
            condition: condition.to_string(),
            detail: detail.into(),
        }
    }

    pub(crate) fn dims(detail: impl Into<String>) -> Self {
        Error::DimensionMismatch(detail.into())
    }

    pub(crate) fn invalid(detail: impl Into<String>) -> Self {
        Error::InvalidInput(detail.into())
    }
}
