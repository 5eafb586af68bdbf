use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("decode error: {0}")]
    Decode(String),

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("stale feature cache: {0}")]
    StaleCache(String),

    #[error("corrupt file: {0}")]
    Corrupt(String),

    #[error("leakage: {0}")]
    Leakage(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Decode(_) => "decode",
            Error::UnsupportedFormat(_) => "unsupported_format",
            Error::Io { .. } => "io",
            Error::NonFinite(_) => "non_finite",
            Error::StaleCache(_) => "stale_cache",
            Error::Corrupt(_) => "corrupt",
            Error::Leakage(_) => "leakage",
        }
    }
}
