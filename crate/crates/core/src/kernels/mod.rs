//! The benchmark compute kernels. Each runs once per rank over that rank's
//! row block and returns identical results on every rank.

mod kmeans;
mod pca;
mod svm;

pub use kmeans::{init_centroids, kmeans_lloyd, KmeansResult};
pub use pca::{pca_sdev, PcaResult, NEGATIVE_EIGEN_TOL};
pub use svm::{hinge_loss, svm_accuracy, svm_fit, svm_fit_with, SvmModel};

use crate::comm::Communicator;
use crate::error::{Error, Result};

/// Turns a rank-local validation failure into an error on every rank so
/// that no rank is left waiting in a collective.
pub(crate) fn agree_ok(local: Result<()>, comm: &dyn Communicator) -> Result<()> {
    let bad = comm.allreduce_scalar(if local.is_err() { 1.0 } else { 0.0 })?;
    match local {
        Err(e) => Err(e),
        Ok(()) if bad > 0.0 => Err(Error::arg("input rejected on another rank")),
        Ok(()) => Ok(()),
    }
}
