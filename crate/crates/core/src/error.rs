use thiserror::Error;

/// Errors raised by chain construction and the exact/Monte Carlo operations.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input; the message names the offending field.
    #[error("invalid input: {0}")]
    Input(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    /// Zero (or numerically zero) variance of the sum.
    #[error("degenerate chain: {0}")]
    Degenerate(String),

    #[error("observables are not centered: |E f_{index}(X_{index})| = {mean:e}")]
    NotCentered { index: usize, mean: f64 },

    #[error("enumeration guard exceeded: {0}")]
    Guard(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
