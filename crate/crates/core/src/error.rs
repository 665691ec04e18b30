//! Error taxonomy shared by every module in the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an operation's arguments was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A randomized constructor exhausted its retry budget.
    #[error("construction failed after {retries} retries: {reason}")]
    ConstructionFailure { retries: usize, reason: String },

    /// An input file could not be parsed.
    #[error("input format error at {path}:{line}: {reason}")]
    InputFormat {
        path: String,
        line: usize,
        reason: String,
    },

    /// The round model was violated (duplicate initiation, oversized payload,
    /// inconsistent forest handed to a tree protocol, ...).
    #[error("model violation: {0}")]
    ModelViolation(String),

    /// An API was driven out of order (nested rounds, send outside a round).
    #[error("usage error: {0}")]
    Usage(String),

    /// An aggregate was requested over an empty value set.
    #[error("empty input")]
    EmptyInput,

    /// A least-squares fit was requested against a degenerate regressor.
    #[error("degenerate regressor: {0}")]
    DegenerateRegressor(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
