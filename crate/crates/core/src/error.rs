use thiserror::Error;

/// Errors raised by the library.
///
/// Solver non-convergence is *not* an error: iterative routines return a
/// report with `converged == false` and keep the last iterate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter violates a documented precondition.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// The operation was called in a way its contract does not allow.
    #[error("usage error: {0}")]
    Usage(String),

    /// A transform or evaluation is undefined at some node.
    #[error("domain error at node {node}: {reason}")]
    Domain { node: usize, reason: String },

    /// A construction (sub/supersolution, eigenpair) could not be completed.
    #[error("construction failed: {0}")]
    Construction(String),

    /// Malformed file or configuration contents.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
