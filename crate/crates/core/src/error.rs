use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The requested exhaustive computation is larger than its cap.
    #[error("resource limit exceeded: {what} needs {size}, cap is {cap}")]
    ResourceLimit { what: String, size: String, cap: String },

    /// An internal invariant was violated. Seeing this is a bug.
    #[error("internal invariant violated: {0}")]
    InvariantViolation(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn limit(what: impl Into<String>, size: impl ToString, cap: impl ToString) -> Self {
        Error::ResourceLimit {
            what: what.into(),
            size: size.to_string(),
            cap: cap.to_string(),
        }
    }

    pub(crate) fn invariant(msg: impl Into<String>) -> Self {
        Error::InvariantViolation(msg.into())
    }
}
