use std::io::Write;
use std::process::Command;
use std::time::Duration;

use bdabench::comm::{InProcessWorld, SingleRank};
use bdabench::dmat::{GenMode, Workload};
use bdabench::harness::{
    ensemble_t_a, fom_tbs, read_records, run_benchmark, run_campaign, write_records, BenchmarkConfig, CampaignPlan,
    FomInput, ProblemSize, RunRecord, ScalingMode, WorkloadDigest,
};
use bdabench::Error;
use proptest::prelude::*;

const BIN: &str = env!("CARGO_BIN_EXE_bdabench");

fn run(config: &BenchmarkConfig) -> RunRecord {
    let mut out = InProcessWorld::new(config.ranks).run(|c| run_benchmark(config, &c).unwrap());
    assert!(out.windows(2).all(|w| w[0] == w[1]), "ranks returned different records");
    out.swap_remove(0)
}

fn small(workload: Workload, ranks: usize, rows: usize) -> BenchmarkConfig {
    let mut c = BenchmarkConfig::new(workload, ranks, ProblemSize::RowsPerRank(rows));
    c.ncols = 20;
    c.svm_iters = 100;
    c
}

#[test]
fn pca_record_structure() {
    let c = BenchmarkConfig::new(Workload::Pca, 4, ProblemSize::RowsPerRank(1000));
    let r = run(&c);
    assert!(r.timing.t_min <= r.timing.t_mean && r.timing.t_mean <= r.timing.t_max);
    assert_eq!(r.timing.per_rank.len(), 4);
    assert_eq!(r.problem_bytes, 4 * 1000 * 250 * 8);
    assert!(r.throughput_gbs > 0.0);
    let expected = r.problem_bytes as f64 / r.timing.t_max / (1u64 << 30) as f64;
    assert_eq!(r.throughput_gbs, expected);
    match r.digest {
        WorkloadDigest::Pca { sdev_first, sdev_last } => assert!(sdev_first >= sdev_last && sdev_last > 0.0),
        other => panic!("unexpected digest {other:?}"),
    }
}

#[test]
fn digests_repeat_exactly() {
    for w in [Workload::Pca, Workload::Kmeans, Workload::Svm] {
        let c = small(w, 3, 300);
        assert_eq!(run(&c).digest, run(&c).digest, "{w}");
    }
}

#[test]
fn kmeans_reports_one_digest_per_k() {
    let r = run(&small(Workload::Kmeans, 2, 400));
    let WorkloadDigest::Kmeans { runs } = r.digest else { panic!("wrong digest") };
    assert_eq!(runs.iter().map(|d| d.k).collect::<Vec<_>>(), vec![2, 3, 4]);
    assert!(runs.iter().all(|d| d.iterations_run >= 1 && d.iterations_run <= 30));
}

#[test]
fn generation_time_is_not_measured() {
    let base = small(Workload::Pca, 2, 500);
    let mut slow = base.clone();
    slow.gen_delay = Some(Duration::from_millis(400));
    let (a, b) = (run(&base), run(&slow));
    assert!(b.timing.t_max < 0.2, "kernel time {} includes generation", b.timing.t_max);
    assert!((a.timing.t_max - b.timing.t_max).abs() < 0.2);
    assert_eq!(a.digest, b.digest);
}

#[test]
fn config_errors_precede_compute() {
    let mut c = small(Workload::Kmeans, 2, 50);
    c.kmeans_k = vec![7];
    let out = InProcessWorld::new(2).run(|comm| run_benchmark(&c, &comm));
    assert!(out.iter().all(|r| matches!(r, Err(Error::Argument(_)))));

    let c = small(Workload::Pca, 2, 50);
    assert!(matches!(run_benchmark(&c, &SingleRank), Err(Error::Argument(_))));
}

#[test]
fn weak_campaign_scales_total_size() {
    let mut plan = CampaignPlan::new(ScalingMode::Weak, vec![1, 2, 4], 8_000_000, vec![Workload::Pca]);
    plan.ncols = 20;
    let records = run_campaign(&plan).unwrap();
    let sizes: Vec<u64> = records.iter().map(|r| r.problem_bytes).collect();
    assert_eq!(sizes, vec![8_000_000, 16_000_000, 32_000_000]);
    assert!(records.iter().all(|r| r.timing.t_min <= r.timing.t_mean && r.timing.t_mean <= r.timing.t_max));
}

#[test]
fn strong_replicated_campaign_agrees_across_rank_counts() {
    let mut plan = CampaignPlan::new(
        ScalingMode::Strong,
        vec![1, 2, 4],
        800_000,
        vec![Workload::Pca, Workload::Kmeans, Workload::Svm],
    );
    plan.ncols = 20;
    plan.svm_iters = 100;
    plan.gen_mode = GenMode::ReplicatedByRowIndex;
    let records = run_campaign(&plan).unwrap();
    assert_eq!(records.len(), 9);
    assert!(records.iter().all(|r| r.problem_bytes == 800_000));
    for group in records.chunks(3) {
        for r in &group[1..] {
            assert!(r.digest.approx_eq(&group[0].digest, 1e-10), "{:?} vs {:?}", r.digest, group[0].digest);
        }
    }
}

#[test]
fn campaign_rejects_empty_rank_list() {
    let plan = CampaignPlan::new(ScalingMode::Weak, vec![], 1000, vec![Workload::Pca]);
    assert!(matches!(run_campaign(&plan), Err(Error::Argument(_))));
}

#[test]
fn records_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.jsonl");
    let recs = vec![run(&small(Workload::Svm, 2, 100)), run(&small(Workload::Kmeans, 1, 100))];
    write_records(&recs, &path).unwrap();
    assert_eq!(read_records(&path).unwrap(), recs);

    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.ends_with('\n'));
    std::fs::write(&path, text.trim_end()).unwrap();
    assert_eq!(read_records(&path).unwrap(), recs);

    std::fs::write(&path, "").unwrap();
    assert!(read_records(&path).unwrap().is_empty());

    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "{}", text.lines().next().unwrap()).unwrap();
    writeln!(f, "{{\"config\": 3}}").unwrap();
    drop(f);
    match read_records(&path) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn ensemble_time_is_mean_of_slowest_ranks() {
    let mut a = run(&small(Workload::Pca, 1, 50));
    let mut b = a.clone();
    a.timing.t_max = 2.0;
    b.timing.t_max = 4.0;
    assert_eq!(ensemble_t_a(&[a, b]).unwrap(), 3.0);
    assert!(ensemble_t_a(&[]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn fom_is_linear(t_a in 0.01f64..1e4, size in 0.01f64..100.0, job in 1u64..1000, mult in 1u64..50) {
        let base = FomInput { t_a, job_size_tb: size, total_nodes: job * 2, job_nodes: job };
        let f = fom_tbs(&base).unwrap();
        let doubled_t = fom_tbs(&FomInput { t_a: 2.0 * t_a, ..base }).unwrap();
        prop_assert_eq!(doubled_t, f / 2.0);
        let bigger = fom_tbs(&FomInput { total_nodes: base.total_nodes * mult, ..base }).unwrap();
        prop_assert!((bigger - f * mult as f64).abs() <= 1e-12 * bigger);
    }
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(BIN).args(args).output().unwrap()
}

#[test]
fn cli_bench_appends_records() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.jsonl");
    let out_s = out.to_str().unwrap();
    for _ in 0..2 {
        let o = cli(&[
            "bench",
            "--workload",
            "svm",
            "--ranks",
            "2",
            "--rows-per-rank",
            "50",
            "--cols",
            "5",
            "--svm-iters",
            "20",
            "--gen-mode",
            "replicated",
            "--out",
            out_s,
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let recs = read_records(&out).unwrap();
    assert_eq!(recs.len(), 2);
    assert_eq!(recs[0].digest, recs[1].digest);
    assert_eq!(recs[0].config.gen_mode, GenMode::ReplicatedByRowIndex);
}

#[test]
fn cli_rejects_bad_invocations() {
    let none = cli(&["bench", "--workload", "pca", "--ranks", "2"]);
    assert!(!none.status.success());
    let both = cli(&["bench", "--workload", "pca", "--ranks", "2", "--rows-per-rank", "5", "--bytes-per-rank", "8MB"]);
    assert!(!both.status.success());
    let small = cli(&["bench", "--workload", "pca", "--ranks", "2", "--bytes-per-rank", "8MB", "--full-scale"]);
    assert_eq!(small.status.code(), Some(2));
    let fom = cli(&["fom", "--ta", "0", "--total-nodes", "10", "--job-nodes", "1"]);
    assert_eq!(fom.status.code(), Some(2));
    let one_rank = cli(&["validate", "--test", "pca", "--ranks", "1"]);
    assert_eq!(one_rank.status.code(), Some(2));
}

#[test]
fn cli_campaign_then_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.jsonl");
    let o = cli(&[
        "campaign",
        "--mode",
        "strong",
        "--ranks",
        "1,2,3",
        "--size",
        "160KB",
        "--workloads",
        "pca,kmeans,svm",
        "--cols",
        "10",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = String::from_utf8_lossy(&o.stdout);
    assert_eq!(table.lines().count(), 10);
    assert_eq!(read_records(&out).unwrap().len(), 9);

    let csv = dir.path().join("c.csv");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("workload,ranks,problem_size,"));
    assert_eq!(text.lines().count(), 10);

    let m =
        cli(&["model", "--in", csv.to_str().unwrap(), "--response", "log-throughput", "--factors", "workload,ranks"]);
    assert!(m.status.success(), "{}", String::from_utf8_lossy(&m.stderr));
    let report = String::from_utf8_lossy(&m.stdout);
    assert!(report.starts_with("Selected model: log(throughput) ~"), "{report}");
}
