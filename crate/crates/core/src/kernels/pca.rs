use crate::comm::Communicator;
use crate::dmat::{covariance, RowBlockMatrix};
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigenvalues;

/// Covariance eigenvalues down to `-NEGATIVE_EIGEN_TOL * max(1, λ₁)` are
/// treated as roundoff and clamped to zero.
pub const NEGATIVE_EIGEN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaResult {
    pub sdev_first: f64,
    pub sdev_last: f64,
    /// All covariance eigenvalues, descending, after clamping.
    pub eigenvalues: Option<Vec<f64>>,
}

/// First and last principal-component standard deviations, from the exact
/// eigenvalues of the sample covariance matrix.
pub fn pca_sdev(x: &RowBlockMatrix, comm: &dyn Communicator) -> Result<PcaResult> {
    let cov = covariance(x, comm)?;
    let mut lambda = symmetric_eigenvalues(&cov)?;
    let floor = -NEGATIVE_EIGEN_TOL * lambda[0].max(1.0);
    for l in lambda.iter_mut() {
        if *l < floor {
            return Err(Error::Numeric(format!("covariance has eigenvalue {l:.3e} below {floor:.3e}")));
        }
        *l = l.max(0.0);
    }
    Ok(PcaResult {
        sdev_first: lambda[0].sqrt(),
        sdev_last: lambda[lambda.len() - 1].sqrt(),
        eigenvalues: Some(lambda),
    })
}
