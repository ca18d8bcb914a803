use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
///
/// Variants are grouped so that the CLI can map them onto stable exit codes
/// (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unreadable image {path}: {message}")]
    Unreadable { path: PathBuf, message: String },
    #[error("format error: {0}")]
    Format(String),
    #[error("parameter error: {0}")]
    Param(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("pattern bank error: {0}")]
    Bank(String),
    #[error("undefined: {0}")]
    Undefined(String),
    #[error("lookup error: {0}")]
    Lookup(String),
    #[error("backend error: {0}")]
    Backend(String),
    #[error("usage error: {0}")]
    Usage(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 usage, 3 I/O, 4 data/format, 5 backend.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Config(_) => 2,
            Error::Io { .. } | Error::Unreadable { .. } => 3,
            Error::Format(_)
            | Error::Param(_)
            | Error::Shape(_)
            | Error::Unsupported(_)
            | Error::Bank(_)
            | Error::Undefined(_)
            | Error::Lookup(_) => 4,
            Error::Backend(_) => 5,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
