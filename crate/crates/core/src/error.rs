use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no harmonics")]
    NoHarmonics,

    #[error("degenerate normalization: input series is constant")]
    DegenerateNormalization,

    #[error("unstable process: {0}")]
    UnstableProcess(String),

    #[error("rank-deficient design: {0}")]
    RankDeficient(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("forecast coverage gap at step {step}: {reason}")]
    CoverageGap { step: usize, reason: String },

    #[error("window {issuance} failed: {source}")]
    Window {
        issuance: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("{file}: {field}: {reason}")]
    Schema {
        file: String,
        field: String,
        reason: String,
    },

    #[error("unknown {kind} id `{id}`")]
    UnknownId { kind: &'static str, id: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
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
}
