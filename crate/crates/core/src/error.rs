use chrono::NaiveDate;
use thiserror::Error;

/// Errors produced anywhere in the forecasting pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("timestamps are not monotone at {date} hour {hour}")]
    NonMonotone { date: NaiveDate, hour: u8 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-positive consumption {value} on {date}")]
    NonPositiveConsumption { date: NaiveDate, value: f64 },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("column {column} is constant on the training rows")]
    ConstantColumn { column: String },

    #[error("design matrix is rank deficient (column {column})")]
    RankDeficient { column: usize },

    #[error("non-finite value at step {step}")]
    NonFinite { step: usize },

    #[error("training diverged at epoch {epoch}, batch starting at step {step}")]
    Divergence { epoch: usize, step: usize },

    #[error("forward cache does not match parameters or inputs: {0}")]
    CacheMismatch(String),

    #[error("degenerate statistic: {0}")]
    Degenerate(String),

    #[error("insufficient history: {0}")]
    InsufficientHistory(String),

    #[error("missing data: {0}")]
    MissingData(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
