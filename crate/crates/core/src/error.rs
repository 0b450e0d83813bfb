use thiserror::Error;

/// Errors produced anywhere in the forecasting pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("insufficient data: need {required}, got {actual}")]
    InsufficientData { required: usize, actual: usize },

    #[error("row {row}: {msg}")]
    Parse { row: usize, msg: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("rank-deficient design; dependent columns {0:?}")]
    RankDeficient(Vec<usize>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
