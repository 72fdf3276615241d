//! Benchmark configuration, timed runs, records and scaling campaigns.

pub mod campaign;
pub mod config;
pub mod fom;
pub mod record;
pub mod run;

pub use campaign::{run_campaign, summary_table, CampaignPlan, ScalingMode};
pub use config::{parse_bytes, BenchmarkConfig, FactorTags, ProblemSize, FULL_SCALE_MIN_BYTES};
pub use fom::{ensemble_t_a, fom_tbs, FomInput};
pub use record::{
    append_records, read_records, write_records, write_records_csv, KmeansDigest, RunRecord, TimingSummary,
    WorkloadDigest,
};
pub use run::run_benchmark;
