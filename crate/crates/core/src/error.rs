use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = BellError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum BellError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// The model document is not well-formed.
    #[error("parse error in {source_name} at line {line}, column {column}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        column: usize,
        message: String,
    },

    /// The model document parsed but one of its entries is invalid.
    #[error("validation error in {source_name}: {location}: {message}")]
    Validation {
        source_name: String,
        location: String,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl BellError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BellError::Io {
            path: path.into(),
            source,
        }
    }
}
