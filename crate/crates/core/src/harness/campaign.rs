use std::fmt::Write as _;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::comm::InProcessWorld;
use crate::dmat::{GenMode, Workload};
use crate::error::{Error, Result, DEFAULT_COLLECTIVE_TIMEOUT};
use crate::harness::config::{BenchmarkConfig, FactorTags, ProblemSize};
use crate::harness::record::RunRecord;
use crate::harness::run::run_benchmark;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ScalingMode {
    /// `size_bytes` per rank; total grows with the rank count.
    Weak,
    /// `size_bytes` in total, split across ranks.
    Strong,
}

#[derive(Debug, Clone)]
pub struct CampaignPlan {
    pub mode: ScalingMode,
    pub ranks: Vec<usize>,
    pub size_bytes: u64,
    pub workloads: Vec<Workload>,
    pub ncols: usize,
    pub seed: u64,
    pub gen_mode: GenMode,
    pub kmeans_k: Vec<usize>,
    pub kmeans_max_iter: usize,
    pub svm_iters: usize,
    pub tags: FactorTags,
    pub timeout: Duration,
}

impl CampaignPlan {
    pub fn new(mode: ScalingMode, ranks: Vec<usize>, size_bytes: u64, workloads: Vec<Workload>) -> Self {
        let d = BenchmarkConfig::new(Workload::Pca, 1, ProblemSize::RowsPerRank(1));
        Self {
            mode,
            ranks,
            size_bytes,
            workloads,
            ncols: d.ncols,
            seed: d.seed,
            gen_mode: d.gen_mode,
            kmeans_k: d.kmeans_k,
            kmeans_max_iter: d.kmeans_max_iter,
            svm_iters: d.svm_iters,
            tags: d.tags,
            timeout: DEFAULT_COLLECTIVE_TIMEOUT,
        }
    }

    /// One configuration per (workload, rank count), workload-major.
    pub fn configs(&self) -> Result<Vec<BenchmarkConfig>> {
        if self.ranks.is_empty() {
            return Err(Error::arg("campaign needs at least one rank count"));
        }
        if self.workloads.is_empty() {
            return Err(Error::arg("campaign needs at least one workload"));
        }
        let size = match self.mode {
            ScalingMode::Weak => ProblemSize::BytesPerRank(self.size_bytes),
            ScalingMode::Strong => ProblemSize::GlobalBytes(self.size_bytes),
        };
        let mut out = Vec::new();
        for &w in &self.workloads {
            for &r in &self.ranks {
                let mut c = BenchmarkConfig::new(w, r, size);
                c.ncols = self.ncols;
                c.seed = self.seed;
                c.gen_mode = self.gen_mode;
                c.kmeans_k = self.kmeans_k.clone();
                c.kmeans_max_iter = self.kmeans_max_iter;
                c.svm_iters = self.svm_iters;
                c.tags = self.tags.clone();
                c.validate()?;
                out.push(c);
            }
        }
        Ok(out)
    }
}

/// Runs every configuration of the plan in turn, each on a fresh in-process
/// world, and returns one record per run.
pub fn run_campaign(plan: &CampaignPlan) -> Result<Vec<RunRecord>> {
    let configs = plan.configs()?;
    let mut records = Vec::with_capacity(configs.len());
    for config in &configs {
        let world = InProcessWorld::new(config.ranks).with_timeout(plan.timeout);
        let mut results = world.run(|comm| run_benchmark(config, &comm));
        let first_err = results.iter().position(|r| r.is_err());
        match first_err {
            Some(i) => return Err(results.swap_remove(i).unwrap_err()),
            None => records.push(results.swap_remove(0)?),
        }
    }
    Ok(records)
}

/// Plain-text table of slowest-rank time against rank count.
pub fn summary_table(records: &[RunRecord]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<8} {:>6} {:>14} {:>12} {:>12}", "workload", "ranks", "bytes", "t_max_s", "GiB/s");
    for r in records {
        let _ = writeln!(
            s,
            "{:<8} {:>6} {:>14} {:>12.6} {:>12.4}",
            r.config.workload.name(),
            r.config.ranks,
            r.problem_bytes,
            r.timing.t_max,
            r.throughput_gbs
        );
    }
    s
}
