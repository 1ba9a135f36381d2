use thiserror::Error;

/// Error type shared across the library.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("data error at r = {at}: {what}")]
    Data { at: f64, what: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("bracket failure: {0}")]
    Bracket(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
