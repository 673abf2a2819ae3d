use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter was outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// Input data failed a structural check (lengths, finiteness, ordering).
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// An index pair violated its required ordering or range.
    #[error("index error: {0}")]
    Index(String),
    /// A derived certificate has a non-positive constant at the requested lambda.
    #[error("certificate infeasible: {0}")]
    Infeasible(String),
    /// A computation produced non-finite values and could not continue.
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
    pub(crate) fn index(msg: impl Into<String>) -> Self {
        Error::Index(msg.into())
    }
}
