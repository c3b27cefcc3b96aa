use std::fmt;

/// Errors raised by the laboratory.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid user input: grid sizes, motility parameters, initial data,
    /// scenario files.
    #[error("configuration error: {0}")]
    Config(String),

    /// An argument outside the domain of a function (γ at s ≤ 0, p < 1, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid mismatch: field lives on {found}, expected {expected}")]
    GridMismatch { expected: String, found: String },

    #[error("non-finite value {value} at cell {cell}")]
    NonFinite { cell: usize, value: f64 },

    #[error("linear solver failed: relative residual {residual:e} after {iterations} iterations")]
    Solver { residual: f64, iterations: usize },

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(msg: impl fmt::Display) -> Self {
        Error::Config(msg.to_string())
    }

    pub(crate) fn domain(msg: impl fmt::Display) -> Self {
        Error::Domain(msg.to_string())
    }
}
