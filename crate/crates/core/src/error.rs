use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid N-function: {0}")]
    InvalidNFunction(String),
    #[error("quadrature did not reach tolerance: estimate {value:e}, achieved error {achieved:e}")]
    Accuracy { value: f64, achieved: f64 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("regime violation: {0}")]
    Regime(String),
    #[error("data error at row {row}: {msg}")]
    Data { row: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
