use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("input is not valid UTF-8 at byte offset {offset}")]
    Encoding { offset: usize },

    #[error("corpus contains no tokens")]
    EmptyCorpus,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("malformed file {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("training diverged at epoch {epoch} (cost = {cost})")]
    Diverged { epoch: usize, cost: f64 },

    #[error("index out of bounds: {0}")]
    Bounds(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("no category could be scored (every category is empty or smaller than n_min)")]
    EmptyDataset,

    #[error("stale or missing input for stage `{stage}`: {message}")]
    StaleInput { stage: String, message: String },

    #[error("stage `{stage}` failed: {source}")]
    StageFailed {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}
