use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("polytope is not a summability polytope: {0}")]
    NotSummable(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("solver stopped at value {value} with gap {gap}: {detail}")]
    NotConverged { value: f64, gap: f64, detail: String },
    #[error("sampling failed: {0}")]
    Sampling(String),
    #[error("serialization failed: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
