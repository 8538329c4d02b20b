use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error(
        "eigensolver did not converge after {iterations} iterations (residual {residual:.3e})"
    )]
    Convergence { iterations: usize, residual: f64 },

    #[error("search exhausted: {0}")]
    SearchExhausted(String),

    #[error("no finite number of repeats distinguishes states with d1 = {0}")]
    NoFiniteRepeats(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("ensemble failed: {0}")]
    Ensemble(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}

pub(crate) fn capacity<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Capacity(msg.into()))
}
