//! Figure of merit: input bytes processed per second by an ensemble of jobs
//! sized to fill the whole machine.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::record::RunRecord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FomInput {
    /// Mean over ensemble jobs of each job's slowest-rank wall time, seconds.
    pub t_a: f64,
    /// Input size of one job in TB.
    pub job_size_tb: f64,
    pub total_nodes: u64,
    pub job_nodes: u64,
}

/// `job_size_tb / t_a * (total_nodes / job_nodes)`, in TB/s.
pub fn fom_tbs(input: &FomInput) -> Result<f64> {
    let FomInput { t_a, job_size_tb, total_nodes, job_nodes } = *input;
    if !(t_a.is_finite() && t_a > 0.0) {
        return Err(Error::arg(format!("t_a must be positive, got {t_a}")));
    }
    if !(job_size_tb.is_finite() && job_size_tb > 0.0) {
        return Err(Error::arg(format!("job size must be positive, got {job_size_tb}")));
    }
    if job_nodes == 0 || total_nodes == 0 {
        return Err(Error::arg("node counts must be positive"));
    }
    if job_nodes > total_nodes {
        return Err(Error::arg(format!("job uses {job_nodes} nodes but the machine has {total_nodes}")));
    }
    Ok(job_size_tb / t_a * (total_nodes as f64 / job_nodes as f64))
}

/// `t_a` of an ensemble run as sequential repeats: the mean of the
/// per-repeat slowest-rank times.
pub fn ensemble_t_a(records: &[RunRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::arg("no records in ensemble"));
    }
    Ok(records.iter().map(|r| r.timing.t_max).sum::<f64>() / records.len() as f64)
}
