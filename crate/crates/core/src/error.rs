use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("layout line {line}: {msg}")]
    Layout { line: usize, msg: String },

    #[error("unknown maze `{0}`")]
    UnknownMaze(String),

    #[error("history context is empty")]
    EmptyContext,

    #[error("contexts are not one step apart")]
    NotAdjacent,

    #[error("buffer length {buffer_len} is smaller than context horizon {horizon}")]
    BufferTooSmall { horizon: usize, buffer_len: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("batch is empty")]
    EmptyBatch,

    #[error("no skill assigns positive probability to the observed action")]
    ImpossibleAction,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
