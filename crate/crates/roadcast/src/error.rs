use std::path::PathBuf;
use thiserror::Error;

/// Errors produced anywhere in the crate.
///
/// `Dimension` and `Internal` indicate a bug in calling code (exit code 3 in
/// the CLI); everything else is a problem with user-supplied data or
/// arguments (exit code 2).
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {details}")]
    Dimension { op: &'static str, details: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("schema error in {path}: {details}")]
    Schema { path: PathBuf, details: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("internal invariant violation: {0}")]
    Internal(String),
}

impl Error {
    pub fn dims(op: &'static str, details: impl Into<String>) -> Self {
        Error::Dimension {
            op,
            details: details.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
