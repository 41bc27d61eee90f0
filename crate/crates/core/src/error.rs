use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed MIDI at byte {offset}: {message}")]
    Midi { offset: usize, message: String },

    #[error("alignment line {line}: {message}")]
    Alignment { line: usize, message: String },

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("dataset entry {entry}: {message}")]
    Dataset { entry: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid griff token {token:?}: {message}")]
    Token { token: String, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error(
        "SMO did not converge after {iterations} iterations \
         (max violation {violation:.3e}, dual objective {objective:.6})"
    )]
    NonConvergence {
        iterations: usize,
        violation: f64,
        objective: f64,
    },

    #[error("unknown {kind} {id:?}")]
    Unknown { kind: &'static str, id: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn arg(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }
}
