use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the learner, the oracle and the model file codec.
#[derive(Debug, Error)]
pub enum FisvddError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite feature value at position {index}")]
    NonFinite { index: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// The Schur complement of an expansion fell to or below the conditioning floor.
    #[error("ill-conditioned expansion (beta = {beta:e})")]
    IllConditionedExpansion { beta: f64 },

    #[error("cannot shrink a 1x1 inverse")]
    CannotShrink,

    #[error("index {index} out of range for order {order}")]
    IndexOutOfRange { index: usize, order: usize },

    /// Corner entry of the inverse is too small to divide by; the state is corrupted.
    #[error("ill-conditioned shrink (lambda = {lambda:e})")]
    IllConditionedShrink { lambda: f64 },

    /// A direct factorization of the similarity matrix failed.
    #[error("similarity matrix is not numerically positive definite")]
    NotPositiveDefinite,

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("too many points for exhaustive search: {n} (limit {limit})")]
    TooManyPoints { n: usize, limit: usize },

    #[error("oracle failure: {0}")]
    OracleFailure(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),

    #[error("corrupt model: {0}")]
    CorruptModel(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = FisvddError> = std::result::Result<T, E>;
