use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::dmat::{row_partition, GenMode, GenSpec, Workload};
use crate::error::{Error, Result};

/// Minimum problem size enforced by `full_scale` runs: 1024 GiB.
pub const FULL_SCALE_MIN_BYTES: u64 = 1024 << 30;
pub const DEFAULT_NCOLS: usize = 250;
pub const DEFAULT_KMEANS_K: [usize; 3] = [2, 3, 4];
pub const DEFAULT_KMEANS_MAX_ITER: usize = 30;
pub const DEFAULT_SVM_ITERS: usize = 500;
pub const BYTES_PER_VALUE: u64 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum ProblemSize {
    RowsPerRank(usize),
    /// Rounded down to whole rows.
    BytesPerRank(u64),
    GlobalRows(usize),
    /// Rounded down to whole rows.
    GlobalBytes(u64),
}

/// Free-form labels describing the environment a run was made in. They are
/// carried into records so runs can be modelled against them later.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorTags {
    pub architecture: String,
    pub library: String,
    pub threads: String,
    pub version: String,
}

impl Default for FactorTags {
    fn default() -> Self {
        Self {
            architecture: std::env::consts::ARCH.to_owned(),
            library: "native".to_owned(),
            threads: "1".to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub workload: Workload,
    pub ranks: usize,
    pub size: ProblemSize,
    pub ncols: usize,
    pub seed: u64,
    pub kmeans_k: Vec<usize>,
    pub kmeans_max_iter: usize,
    pub svm_iters: usize,
    pub gen_mode: GenMode,
    pub full_scale: bool,
    pub tags: FactorTags,
    /// Test hook: sleep this long during data generation on every rank.
    #[serde(skip)]
    pub gen_delay: Option<Duration>,
}

impl BenchmarkConfig {
    pub fn new(workload: Workload, ranks: usize, size: ProblemSize) -> Self {
        Self {
            workload,
            ranks,
            size,
            ncols: DEFAULT_NCOLS,
            seed: 1,
            kmeans_k: DEFAULT_KMEANS_K.to_vec(),
            kmeans_max_iter: DEFAULT_KMEANS_MAX_ITER,
            svm_iters: DEFAULT_SVM_ITERS,
            gen_mode: GenMode::default(),
            full_scale: false,
            tags: FactorTags::default(),
            gen_delay: None,
        }
    }

    pub fn row_bytes(&self) -> u64 {
        self.ncols as u64 * BYTES_PER_VALUE
    }

    pub fn global_nrows(&self) -> usize {
        let row_bytes = self.row_bytes().max(1);
        match self.size {
            ProblemSize::RowsPerRank(r) => r * self.ranks,
            ProblemSize::BytesPerRank(b) => (b / row_bytes) as usize * self.ranks,
            ProblemSize::GlobalRows(r) => r,
            ProblemSize::GlobalBytes(b) => (b / row_bytes) as usize,
        }
    }

    /// Rows held by `rank`.
    pub fn local_nrows(&self, rank: usize) -> usize {
        row_partition(self.global_nrows(), self.ranks, rank).1
    }

    pub fn problem_bytes(&self) -> u64 {
        self.global_nrows() as u64 * self.row_bytes()
    }

    pub fn gen_spec(&self) -> GenSpec {
        let mut spec = GenSpec::new(self.workload, self.global_nrows(), self.ncols, self.seed).with_mode(self.gen_mode);
        spec.delay = self.gen_delay;
        spec
    }

    /// Checks everything that can be checked before any data exists.
    pub fn validate(&self) -> Result<()> {
        if self.ranks == 0 {
            return Err(Error::arg("need at least one rank"));
        }
        if self.ncols == 0 {
            return Err(Error::arg("need at least one column"));
        }
        if self.workload == Workload::Svm && self.ncols < 2 {
            return Err(Error::arg("SVM needs an intercept plus at least one feature column"));
        }
        let n = self.global_nrows();
        if n < self.ranks {
            return Err(Error::arg(format!("problem size gives {n} rows, fewer than the {} ranks", self.ranks)));
        }
        if self.workload == Workload::Kmeans {
            if self.kmeans_k.is_empty() {
                return Err(Error::arg("no k-means cluster counts requested"));
            }
            for (i, &k) in self.kmeans_k.iter().enumerate() {
                if !DEFAULT_KMEANS_K.contains(&k) {
                    return Err(Error::arg(format!("k-means cluster count {k} not in {{2, 3, 4}}")));
                }
                if self.kmeans_k[..i].contains(&k) {
                    return Err(Error::arg(format!("k-means cluster count {k} repeated")));
                }
                if k > n {
                    return Err(Error::arg(format!("k = {k} exceeds the {n} rows")));
                }
            }
            if self.kmeans_max_iter == 0 {
                return Err(Error::arg("k-means iteration cap must be at least 1"));
            }
        }
        if self.workload == Workload::Svm && self.svm_iters == 0 {
            return Err(Error::arg("SVM iteration count must be at least 1"));
        }
        if self.full_scale && self.problem_bytes() < FULL_SCALE_MIN_BYTES {
            return Err(Error::arg(format!(
                "full-scale runs need at least {FULL_SCALE_MIN_BYTES} bytes, configured {}",
                self.problem_bytes()
            )));
        }
        Ok(())
    }
}

/// Parses byte counts such as `8MB` (10⁶), `8MiB` (2²⁰) or `4096`.
pub fn parse_bytes(s: &str) -> Result<u64> {
    let t = s.trim();
    let split = t.find(|c: char| !(c.is_ascii_digit() || c == '.')).unwrap_or(t.len());
    let (num, unit) = t.split_at(split);
    let mult: u64 = match unit.trim().to_ascii_lowercase().as_str() {
        "" | "b" => 1,
        "kb" | "k" => 1_000,
        "mb" | "m" => 1_000_000,
        "gb" | "g" => 1_000_000_000,
        "tb" | "t" => 1_000_000_000_000,
        "kib" => 1 << 10,
        "mib" => 1 << 20,
        "gib" => 1 << 30,
        "tib" => 1 << 40,
        other => return Err(Error::arg(format!("unknown size unit {other:?} in {s:?}"))),
    };
    let value: f64 = num.parse().map_err(|_| Error::arg(format!("cannot parse size {s:?}")))?;
    if value.is_nan() || value < 0.0 {
        return Err(Error::arg(format!("cannot parse size {s:?}")));
    }
    Ok((value * mult as f64).round() as u64)
}
