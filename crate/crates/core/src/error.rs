use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the augmentation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An operation's precondition on its input did not hold, e.g. an
    /// intensity transform received a volume that is not normalized.
    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("failed to parse {what}: {message}")]
    Parse { what: String, message: String },

    #[error("NIfTI field `{field}`: {message}")]
    Nifti { field: &'static str, message: String },

    #[error("manifest validation failed:\n{}", .0.join("\n"))]
    Manifest(Vec<String>),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Wraps an I/O failure on `path`.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn nifti(field: &'static str, message: impl Into<String>) -> Self {
        Error::Nifti {
            field,
            message: message.into(),
        }
    }
}
