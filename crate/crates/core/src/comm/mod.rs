//! Collective communication between ranks.
//!
//! Every distributed kernel is written against [`Communicator`]. Two
//! backends are provided: [`SingleRank`] for one participant and
//! [`InProcessWorld`], which runs each rank on its own thread and exchanges
//! data through a shared rendezvous. A binding to an external
//! message-passing runtime would be a third implementation of the trait.
//!
//! Reductions always fold contributions in ascending rank order starting
//! from rank 0, so results are bit-identical on every rank and across runs.

mod single;
mod threaded;

pub use single::SingleRank;
pub use threaded::{InProcessComm, InProcessWorld};

use std::time::Duration;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CommError {
    #[error("rank {rank}: collective `{op}` timed out after {after:?} waiting for peers")]
    Timeout { rank: usize, op: &'static str, after: Duration },
    #[error("collective protocol violation: {0}")]
    Protocol(String),
    #[error("root {root} out of range for communicator of size {size}")]
    InvalidRoot { root: usize, size: usize },
    #[error("communicator unusable after earlier failure: {0}")]
    Broken(String),
}

pub trait Communicator: Send {
    fn rank(&self) -> usize;

    fn size(&self) -> usize;

    /// Element-wise sum across ranks; every rank receives the same vector.
    fn allreduce_sum(&self, local: &[f64]) -> Result<Vec<f64>, CommError>;

    /// Returns the root's bytes on every rank. Non-root input is ignored.
    fn broadcast(&self, value: &[u8], root: usize) -> Result<Vec<u8>, CommError>;

    /// Root receives one value per rank in rank order; other ranks get `None`.
    fn gather(&self, value: f64, root: usize) -> Result<Option<Vec<f64>>, CommError>;

    fn barrier(&self) -> Result<(), CommError>;

    fn allreduce_scalar(&self, local: f64) -> Result<f64, CommError> {
        Ok(self.allreduce_sum(&[local])?[0])
    }

    fn is_root(&self) -> bool {
        self.rank() == 0
    }
}

pub(crate) fn check_root(root: usize, size: usize) -> Result<(), CommError> {
    if root < size {
        Ok(())
    } else {
        Err(CommError::InvalidRoot { root, size })
    }
}
