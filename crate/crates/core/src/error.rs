use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on the inputs does not hold.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An iterative solver stopped without meeting its tolerance.
    #[error("solver did not converge after {iterations} iterations: {message}")]
    Solver {
        message: String,
        iterations: usize,
        /// Residual (or drift) history, most recent last.
        history: Vec<f64>,
    },

    /// Something that should be impossible for well-formed input.
    #[error("internal error: {0}")]
    Internal(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed document: {0}")]
    Parse(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
