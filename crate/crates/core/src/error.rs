use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum GctError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("kernel value is not finite at entry ({row}, {col}), Y = {value}")]
    NonFinite { row: usize, col: usize, value: f64 },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("no sign change found for {0}")]
    NoBracket(String),

    #[error("spike is unidentifiable: lambda = 1 and tau = 0")]
    Unidentifiable,

    #[error("unsupported kernel: {0}")]
    UnsupportedKernel(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, GctError>;

pub(crate) fn invalid(msg: impl Into<String>) -> GctError {
    GctError::InvalidParameter(msg.into())
}
