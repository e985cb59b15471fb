use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Configuration file problems (unknown key, bad value, invalid combination).
    #[error("config error: {0}")]
    Config(String),

    /// Malformed data or model files (EDF, CSV, model text formats).
    #[error("format error: {0}")]
    Format(String),

    /// Precondition violations on in-memory data (dimension mismatch, empty input, ...).
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A pipeline stage requires an artifact that has not been produced yet.
    #[error("missing input file: {0} ({hint})", .path.display())]
    MissingInput { path: PathBuf, hint: String },

    /// Numerical failure during training or evaluation (NaN loss, divergence).
    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn missing(path: impl Into<PathBuf>, hint: impl Into<String>) -> Self {
        Error::MissingInput {
            path: path.into(),
            hint: hint.into(),
        }
    }
}
