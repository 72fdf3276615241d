use std::time::Duration;

use thiserror::Error;

use crate::comm::CommError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error(transparent)]
    Comm(#[from] CommError),
    #[error("rank {rank}: {source}")]
    Rank { rank: usize, source: Box<Error> },
    #[error("{path}: checksum mismatch (expected {expected}, found {actual})")]
    Checksum { path: String, expected: String, actual: String },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Model(#[from] bdabench_perfmodel::ModelError),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn on_rank(self, rank: usize) -> Self {
        match self {
            e @ Error::Rank { .. } => e,
            e => Error::Rank { rank, source: Box::new(e) },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub const DEFAULT_COLLECTIVE_TIMEOUT: Duration = Duration::from_secs(60);
