use std::path::PathBuf;

use thiserror::Error;

use crate::infer::ArchiveError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    #[error("trace of {len} samples is shorter than one window of {window}")]
    TooShort { len: usize, window: usize },

    #[error("window of length {window} with hop {hop} violates constant overlap-add")]
    ColaViolation { window: usize, hop: usize },

    #[error("spectrogram carries no phase; run phase reconstruction instead of istft")]
    MagnitudeOnly,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("degenerate range: {0}")]
    Degenerate(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {msg}", path.display())]
    Format { path: PathBuf, msg: String },

    #[error("dataset: {0}")]
    Dataset(String),

    #[error(transparent)]
    Archive(#[from] ArchiveError),

    #[error("{}: {source}", path.display())]
    ArchiveFile {
        path: PathBuf,
        #[source]
        source: ArchiveError,
    },
}

impl Error {
    /// The archive-level cause, if this error came from loading or running a network.
    pub fn archive_error(&self) -> Option<&ArchiveError> {
        match self {
            Error::Archive(e) | Error::ArchiveFile { source: e, .. } => Some(e),
            _ => None,
        }
    }

    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }
}
