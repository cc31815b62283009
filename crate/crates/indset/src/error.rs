use std::io;
use std::path::PathBuf;

use indset_core::Error as CoreError;

/// Errors surfaced by the file formats, engine and command line.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Param(String),

    #[error("config: {0}")]
    Schema(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0}")]
    Data(String),

    #[error("{0}")]
    Degenerate(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    /// Process exit code: 2 parameter/schema, 3 data, 4 degenerate design.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Param(_) | Error::Schema(_) => 2,
            Error::Parse { .. } | Error::Data(_) | Error::Io { .. } => 3,
            Error::Degenerate(_) => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<CoreError> for Error {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidParameter(_) => Error::Param(e.to_string()),
            CoreError::Dimension { .. } | CoreError::Precondition(_) => Error::Data(e.to_string()),
            _ => Error::Degenerate(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
