//! Correctness checks for the three kernels on the iris data, each with a
//! fixed pass threshold. They run on two or more ranks.

mod iris;
mod rand_index;

pub use iris::{bundled_iris, load_iris, IrisTable, IRIS_CSV, IRIS_HEADER, IRIS_ROWS, IRIS_SHA256};
pub use rand_index::{rand_from_contingency, rand_measure, rand_measure_distributed};

use serde::{Deserialize, Serialize};

use crate::comm::Communicator;
use crate::dmat::{LabelRole, LabeledBlock, RowBlockMatrix, Workload};
use crate::error::{Error, Result};
use crate::kernels::{init_centroids, kmeans_lloyd, svm_accuracy, svm_fit};
use crate::linalg::{svd_rowblock, DistributedSvd, Matrix};

/// √ε for IEEE 754 binary64, ε = 2⁻⁵².
pub const PCA_MAE_THRESHOLD: f64 = 1.490_116_119_384_765_6e-8;
pub const KMEANS_RAND_THRESHOLD: f64 = 0.75;
pub const SVM_ACCURACY_THRESHOLD: f64 = 0.80;
pub const KMEANS_SEEDS: std::ops::RangeInclusive<u64> = 1..=100;
pub const KMEANS_VALIDATION_MAX_ITER: usize = 1000;
pub const SVM_VALIDATION_ITERS: usize = 500;
pub const MIN_VALIDATION_RANKS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Comparison {
    /// Pass when `metric < threshold`.
    Below,
    /// Pass when `metric > threshold`.
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub test: Workload,
    pub passed: bool,
    pub metric: f64,
    pub threshold: f64,
    pub comparison: Comparison,
    pub ranks: usize,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl ValidationReport {
    pub fn new(test: Workload, metric: f64, ranks: usize) -> Self {
        let (threshold, comparison) = match test {
            Workload::Pca => (PCA_MAE_THRESHOLD, Comparison::Below),
            Workload::Kmeans => (KMEANS_RAND_THRESHOLD, Comparison::Above),
            Workload::Svm => (SVM_ACCURACY_THRESHOLD, Comparison::Above),
        };
        let passed = match comparison {
            Comparison::Below => metric < threshold,
            Comparison::Above => metric > threshold,
        };
        Self { test, passed, metric, threshold, comparison, ranks, detail: String::new() }
    }

    fn with_detail(mut self, detail: String) -> Self {
        self.detail = detail;
        self
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (name, op) = match (self.test, self.comparison) {
            (Workload::Pca, _) => ("svd reconstruction MAE", "<"),
            (Workload::Kmeans, _) => ("best rand measure", ">"),
            (Workload::Svm, _) => ("accuracy", ">"),
        };
        write!(
            f,
            "{:<6} {}  {name} = {:.6e} (need {op} {:.6e}) on {} ranks",
            self.test.name(),
            if self.passed { "PASS" } else { "FAIL" },
            self.metric,
            self.threshold,
            self.ranks
        )?;
        if !self.detail.is_empty() {
            write!(f, "; {}", self.detail)?;
        }
        Ok(())
    }
}

fn require_ranks(comm: &dyn Communicator) -> Result<()> {
    if comm.size() < MIN_VALIDATION_RANKS {
        return Err(Error::arg(format!(
            "validation runs on at least {MIN_VALIDATION_RANKS} ranks, got {}",
            comm.size()
        )));
    }
    Ok(())
}

/// `U diag(s) Vᵀ`, in the row layout of `U`.
pub fn reconstruct(svd: &DistributedSvd) -> Result<RowBlockMatrix> {
    let n = svd.s.len();
    let mut us = svd.u.data().to_vec();
    for row in us.chunks_exact_mut(n.max(1)) {
        row.iter_mut().zip(&svd.s).for_each(|(u, s)| *u *= s);
    }
    let rows = svd.u.local_nrows();
    let us = Matrix::from_row_major(rows, n, us)?;
    let back = us.matmul(&svd.v.transpose())?;
    RowBlockMatrix::new(back.into_vec(), rows, svd.v.nrows(), svd.u.global_nrows(), svd.u.row_offset())
}

/// Mean absolute entry-wise difference between two matrices with the same
/// distribution.
pub fn mean_absolute_error(a: &RowBlockMatrix, b: &RowBlockMatrix, comm: &dyn Communicator) -> Result<f64> {
    if a.ncols() != b.ncols() || a.local_nrows() != b.local_nrows() {
        return Err(Error::arg("matrices differ in shape"));
    }
    let local: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()).sum();
    let total = comm.allreduce_scalar(local)?;
    Ok(total / (a.global_nrows() * a.ncols()) as f64)
}

fn iris_features(comm: &dyn Communicator) -> Result<(IrisTable, RowBlockMatrix)> {
    let iris = bundled_iris()?;
    let x = RowBlockMatrix::from_global(&iris.features, comm)?;
    Ok((iris, x))
}

/// SVD of the iris measurements, multiplied back together; passes when the
/// mean absolute reconstruction error is below √ε.
pub fn validate_pca(comm: &dyn Communicator) -> Result<ValidationReport> {
    require_ranks(comm)?;
    let (_, x) = iris_features(comm)?;
    let svd = svd_rowblock(&x, comm)?;
    let back = reconstruct(&svd)?;
    let mae = mean_absolute_error(&x, &back, comm)?;
    let s: Vec<String> = svd.s.iter().map(|v| format!("{v:.6}")).collect();
    Ok(ValidationReport::new(Workload::Pca, mae, comm.size())
        .with_detail(format!("singular values [{}]", s.join(", "))))
}

/// Three-cluster k-means on the iris measurements from 100 seeded starts;
/// passes when the best rand measure against species exceeds 0.75.
pub fn validate_kmeans(comm: &dyn Communicator) -> Result<ValidationReport> {
    require_ranks(comm)?;
    let (iris, x) = iris_features(comm)?;
    let off = x.row_offset();
    let truth: Vec<usize> = iris.species[off..off + x.local_nrows()].iter().map(|&s| usize::from(s - 1)).collect();
    let mut best = (f64::NEG_INFINITY, 0u64);
    for seed in KMEANS_SEEDS {
        let init = init_centroids(&x, 3, seed, comm)?;
        let fit = kmeans_lloyd(&x, 3, &init, KMEANS_VALIDATION_MAX_ITER, comm)?;
        let r = rand_measure_distributed(&fit.labels, 3, &truth, 3, comm)?;
        if r > best.0 {
            best = (r, seed);
        }
    }
    Ok(ValidationReport::new(Workload::Kmeans, best.0, comm.size()).with_detail(format!("best seed {}", best.1)))
}

/// Intercept plus iris measurements; +1 for setosa and -1 otherwise.
pub fn iris_svm_block(iris: &IrisTable, comm: &dyn Communicator) -> Result<LabeledBlock> {
    let n = iris.features.nrows();
    let mut design = Vec::with_capacity(n * 5);
    for i in 0..n {
        design.push(1.0);
        design.extend_from_slice(iris.features.row(i));
    }
    let design = Matrix::from_row_major(n, 5, design)?;
    let x = RowBlockMatrix::from_global(&design, comm)?;
    let off = x.row_offset();
    let labels = iris.species[off..off + x.local_nrows()].iter().map(|&s| if s == 1 { 1 } else { -1 }).collect();
    Ok(LabeledBlock { x, labels, role: LabelRole::SvmResponse })
}

/// Nelder–Mead hinge-loss SVM on setosa vs the rest with at most 500
/// iterations; passes when training accuracy exceeds 0.80.
pub fn validate_svm(comm: &dyn Communicator) -> Result<ValidationReport> {
    require_ranks(comm)?;
    let iris = bundled_iris()?;
    let data = iris_svm_block(&iris, comm)?;
    let model = svm_fit(&data, SVM_VALIDATION_ITERS, comm)?;
    let acc = svm_accuracy(&model, &data, comm)?;
    Ok(ValidationReport::new(Workload::Svm, acc, comm.size())
        .with_detail(format!("final hinge loss {:.6}", model.final_loss)))
}

pub fn validate(test: Workload, comm: &dyn Communicator) -> Result<ValidationReport> {
    match test {
        Workload::Pca => validate_pca(comm),
        Workload::Kmeans => validate_kmeans(comm),
        Workload::Svm => validate_svm(comm),
    }
}
