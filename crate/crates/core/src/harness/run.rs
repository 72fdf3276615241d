use std::time::Instant;

use chrono::Utc;

use crate::comm::Communicator;
use crate::dmat::{generate, Workload};
use crate::error::{Error, Result};
use crate::harness::config::BenchmarkConfig;
use crate::harness::record::{host_label, KmeansDigest, RunRecord, TimingSummary, WorkloadDigest};
use crate::kernels::{init_centroids, kmeans_lloyd, pca_sdev, svm_fit};

const ROOT: usize = 0;

/// Generates the configured dataset, times the kernel on every rank and
/// returns the same record on every rank.
///
/// Only the kernel is inside the timed window: generation and k-means
/// initialisation happen before a barrier that opens it.
pub fn run_benchmark(config: &BenchmarkConfig, comm: &dyn Communicator) -> Result<RunRecord> {
    let rank = comm.rank();
    config.validate()?;
    if comm.size() != config.ranks {
        return Err(Error::arg(format!("configured for {} ranks but running on {}", config.ranks, comm.size())));
    }
    let data = generate(&config.gen_spec(), comm).map_err(|e| e.on_rank(rank))?;

    let (elapsed, digest) = match config.workload {
        Workload::Pca => {
            comm.barrier()?;
            let start = Instant::now();
            let res = pca_sdev(&data.x, comm).map_err(|e| e.on_rank(rank))?;
            let t = start.elapsed().as_secs_f64();
            (t, WorkloadDigest::Pca { sdev_first: res.sdev_first, sdev_last: res.sdev_last })
        }
        Workload::Kmeans => {
            let mut total = 0.0;
            let mut runs = Vec::with_capacity(config.kmeans_k.len());
            for &k in &config.kmeans_k {
                let init = init_centroids(&data.x, k, config.seed, comm).map_err(|e| e.on_rank(rank))?;
                comm.barrier()?;
                let start = Instant::now();
                let res = kmeans_lloyd(&data.x, k, &init, config.kmeans_max_iter, comm).map_err(|e| e.on_rank(rank))?;
                total += start.elapsed().as_secs_f64();
                runs.push(KmeansDigest {
                    k,
                    centroid_checksum: res.centroids.as_slice().iter().sum(),
                    iterations_run: res.iterations_run,
                    converged: res.converged,
                    wcss: res.wcss_history.last().copied().unwrap_or(f64::NAN),
                });
            }
            (total, WorkloadDigest::Kmeans { runs })
        }
        Workload::Svm => {
            comm.barrier()?;
            let start = Instant::now();
            let model = svm_fit(&data, config.svm_iters, comm).map_err(|e| e.on_rank(rank))?;
            let t = start.elapsed().as_secs_f64();
            (t, WorkloadDigest::Svm { final_loss: model.final_loss, weights_checksum: model.weights.iter().sum() })
        }
    };

    let times = comm.gather(elapsed, ROOT)?;
    let payload = match times {
        Some(per_rank) => {
            let timing = TimingSummary::from_per_rank(per_rank)?;
            let problem_bytes = config.problem_bytes();
            let record = RunRecord {
                config: config.clone(),
                global_nrows: config.global_nrows(),
                problem_bytes,
                throughput_gbs: RunRecord::throughput(problem_bytes, timing.t_max)?,
                timing,
                digest,
                timestamp: Utc::now(),
                host: host_label(),
            };
            serde_json::to_vec(&record).map_err(|e| Error::Io(e.into()))?
        }
        None => Vec::new(),
    };
    let bytes = comm.broadcast(&payload, ROOT)?;
    let mut record: RunRecord =
        serde_json::from_slice(&bytes).map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?;
    record.config.gen_delay = config.gen_delay;
    Ok(record)
}
