use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid tour: {0}")]
    InvalidTour(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("generation failed: {0}")]
    GenerationFailure(String),

    #[error("instance has {n} cities, exact solver supports at most {max}")]
    SizeLimit { n: usize, max: usize },

    #[error("monotonicity violation: new length {new} does not improve on {previous}")]
    MonotonicityViolation { previous: f64, new: f64 },

    #[error("no reference length for instance(s): {}", .0.join(", "))]
    MissingReference(Vec<String>),

    #[error("time {requested_ms} ms exceeds the observation window of {cutoff_ms} ms")]
    OutOfRange { requested_ms: u64, cutoff_ms: u64 },

    #[error("parse error in {path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
