use thiserror::Error;

/// Errors produced by construction, validation, and experiment entry points.
#[derive(Error, Debug)]
pub enum Error {
    /// A caller-supplied argument violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Array or table shapes do not agree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A request exceeds a guard limit (for example exhaustive policy
    /// enumeration on an MDP with too many deterministic policies).
    #[error("problem too large: {0}")]
    TooLarge(String),

    /// Malformed serialized data (MDP text files, dataset CSV).
    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}
