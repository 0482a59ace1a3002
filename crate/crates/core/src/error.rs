use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid telemetry: {0}")]
    InvalidTelemetry(String),

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("incompatible q-table: {0}")]
    IncompatibleTable(String),

    #[error("malformed q-table file: {0}")]
    TableFormat(String),

    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("I/O error on {path}: {source}")]
    PathIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn path_io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::PathIo {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by I/O rather than by bad input or a broken run.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_) | Error::PathIo { .. })
            || matches!(self, Error::Csv(e) if e.is_io_error())
    }

    /// True for errors caused by a bad scenario or bad parameters.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config { .. } | Error::InvalidParameter { .. } | Error::IncompatibleTable(_)
        )
    }
}
