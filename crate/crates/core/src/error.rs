use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The operation is defined for the other side of the finite/infinite
    /// limit-constant dichotomy.
    #[error("dichotomy: {0}")]
    Dichotomy(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("unclassified: {0}")]
    Unclassified(String),

    /// Quadrature could not reach the requested tolerance within its budget.
    #[error("tolerance not met: best estimate {best} with error bound {achieved:e} (requested {requested:e})")]
    Tolerance {
        best: f64,
        achieved: f64,
        requested: f64,
    },

    #[error("budget exceeded: {0}")]
    Budget(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
