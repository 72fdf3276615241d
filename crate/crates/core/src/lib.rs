//! Distributed big-data analytics benchmarks: PCA, k-means and a linear SVM
//! over row-distributed dense matrices, with iris-based validation, a timing
//! and figure-of-merit harness, and scaling campaigns.

pub mod comm;
pub mod dmat;
pub mod error;
pub mod harness;
pub mod kernels;
pub mod linalg;
pub mod optim;
pub mod rng;
pub mod validate;

pub use error::{Error, Result};
