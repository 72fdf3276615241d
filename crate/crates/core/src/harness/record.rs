use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::config::BenchmarkConfig;

const GIB: f64 = (1u64 << 30) as f64;

/// Kernel wall times in seconds across ranks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub t_min: f64,
    pub t_mean: f64,
    /// Slowest rank; the time that counts.
    pub t_max: f64,
    pub per_rank: Vec<f64>,
}

impl TimingSummary {
    pub fn from_per_rank(per_rank: Vec<f64>) -> Result<Self> {
        if per_rank.is_empty() {
            return Err(Error::arg("no rank timings"));
        }
        if let Some(bad) = per_rank.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(Error::Numeric(format!("invalid rank timing {bad}")));
        }
        let t_min = per_rank.iter().copied().fold(f64::INFINITY, f64::min);
        let t_max = per_rank.iter().copied().fold(0.0, f64::max);
        let t_mean = per_rank.iter().sum::<f64>() / per_rank.len() as f64;
        Ok(Self { t_min, t_mean, t_max, per_rank })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmeansDigest {
    pub k: usize,
    /// Sum of every centroid coordinate.
    pub centroid_checksum: f64,
    pub iterations_run: usize,
    pub converged: bool,
    pub wcss: f64,
}

/// A small result fingerprint used to check that runs computed the same thing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "workload", rename_all = "lowercase")]
pub enum WorkloadDigest {
    Pca { sdev_first: f64, sdev_last: f64 },
    Kmeans { runs: Vec<KmeansDigest> },
    Svm { final_loss: f64, weights_checksum: f64 },
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

impl WorkloadDigest {
    /// Compares every floating field to relative tolerance `rel`; counts
    /// and flags must match exactly.
    pub fn approx_eq(&self, other: &Self, rel: f64) -> bool {
        match (self, other) {
            (Self::Pca { sdev_first: a1, sdev_last: a2 }, Self::Pca { sdev_first: b1, sdev_last: b2 }) => {
                close(*a1, *b1, rel) && close(*a2, *b2, rel)
            }
            (Self::Kmeans { runs: a }, Self::Kmeans { runs: b }) => {
                a.len() == b.len()
                    && a.iter().zip(b).all(|(x, y)| {
                        x.k == y.k
                            && x.iterations_run == y.iterations_run
                            && x.converged == y.converged
                            && close(x.centroid_checksum, y.centroid_checksum, rel)
                            && close(x.wcss, y.wcss, rel)
                    })
            }
            (
                Self::Svm { final_loss: a1, weights_checksum: a2 },
                Self::Svm { final_loss: b1, weights_checksum: b2 },
            ) => close(*a1, *b1, rel) && close(*a2, *b2, rel),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: BenchmarkConfig,
    pub global_nrows: usize,
    pub problem_bytes: u64,
    pub timing: TimingSummary,
    /// `problem_bytes / t_max`, in GiB/s.
    pub throughput_gbs: f64,
    pub digest: WorkloadDigest,
    pub timestamp: DateTime<Utc>,
    pub host: String,
}

impl RunRecord {
    pub fn throughput(problem_bytes: u64, t_max: f64) -> Result<f64> {
        if t_max.is_nan() || t_max <= 0.0 {
            return Err(Error::Numeric(format!("cannot compute throughput from t_max = {t_max}")));
        }
        Ok(problem_bytes as f64 / t_max / GIB)
    }
}

pub fn host_label() -> String {
    std::env::var("HOSTNAME")
        .ok()
        .or_else(|| std::fs::read_to_string("/proc/sys/kernel/hostname").ok())
        .map(|h| h.trim().to_owned())
        .filter(|h| !h.is_empty())
        .unwrap_or_else(|| "localhost".to_owned())
}

fn write_lines<W: Write>(records: &[RunRecord], mut w: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| Error::Io(e.into()))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Writes one JSON object per line, replacing `path`.
pub fn write_records(records: &[RunRecord], path: impl AsRef<Path>) -> Result<()> {
    write_lines(records, BufWriter::new(File::create(path)?))
}

/// Appends one JSON object per line to `path`, creating it if needed.
pub fn append_records(records: &[RunRecord], path: impl AsRef<Path>) -> Result<()> {
    let f = OpenOptions::new().create(true).append(true).open(path)?;
    write_lines(records, BufWriter::new(f))
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<RunRecord>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
        out.push(rec);
    }
    Ok(out)
}

pub const CSV_HEADER: [&str; 13] = [
    "workload",
    "ranks",
    "problem_size",
    "architecture",
    "library",
    "version",
    "threads",
    "host",
    "gen_mode",
    "t_min",
    "t_mean",
    "t_max",
    "throughput",
];

/// Flattens records into a CSV table with one row per record, suitable as
/// input to the performance model.
pub fn write_records_csv<W: Write>(records: &[RunRecord], mut w: W) -> Result<()> {
    writeln!(w, "{}", CSV_HEADER.join(","))?;
    for r in records {
        let c = &r.config;
        let gen_mode = serde_json::to_value(c.gen_mode).map_err(|e| Error::Io(e.into()))?;
        let fields = [
            c.workload.name().to_owned(),
            c.ranks.to_string(),
            r.problem_bytes.to_string(),
            csv_field(&c.tags.architecture),
            csv_field(&c.tags.library),
            csv_field(&c.tags.version),
            csv_field(&c.tags.threads),
            csv_field(&r.host),
            gen_mode.as_str().unwrap_or_default().to_owned(),
            r.timing.t_min.to_string(),
            r.timing.t_mean.to_string(),
            r.timing.t_max.to_string(),
            r.throughput_gbs.to_string(),
        ];
        writeln!(w, "{}", fields.join(","))?;
    }
    w.flush()?;
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}
