use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The document could not be parsed at all.
    #[error("malformed document: {0}")]
    Malformed(String),

    /// A parsed value violates an invariant; `path` names the offending field.
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },

    #[error("dimension mismatch: {0}")]
    Mismatch(String),

    #[error("degenerate bone at joint `{joint}` in frame {frame}")]
    DegenerateBone { joint: String, frame: usize },

    #[error("no foreground")]
    NoForeground,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("failed to read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image {path}: {message}")]
    Image { path: PathBuf, message: String },

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Prefixes the field path of an [`Error::Invalid`] (e.g. with a file name).
    pub fn within(self, prefix: &str) -> Self {
        match self {
            Error::Invalid { path, message } => Error::Invalid {
                path: format!("{prefix}: {path}"),
                message,
            },
            Error::Malformed(m) => Error::Malformed(format!("{prefix}: {m}")),
            other => other,
        }
    }

    /// True when the failure is caused by user-supplied input rather than the
    /// environment or a broken internal assertion.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Write { .. } | Error::Internal(_))
    }
}

pub(crate) fn read_to_string(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_string(path: &std::path::Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|source| Error::Write {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn create_dir_all(path: &std::path::Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|source| Error::Write {
        path: path.to_path_buf(),
        source,
    })
}
