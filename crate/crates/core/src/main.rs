use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use bdabench::comm::InProcessWorld;
use bdabench::dmat::{GenMode, Workload};
use bdabench::harness::{
    append_records, fom_tbs, parse_bytes, run_benchmark, run_campaign, summary_table, write_records, write_records_csv,
    BenchmarkConfig, CampaignPlan, FactorTags, FomInput, ProblemSize, ScalingMode,
};
use bdabench::validate::validate;
use bdabench::{Error, Result};
use bdabench_perfmodel::{render_report, stepwise_aic, FactorTable, ResponseSpec};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bdabench", version, about = "Distributed PCA, k-means and SVM benchmark")]
struct Cli {
    /// Seconds a rank waits in a collective before giving up.
    #[arg(long, global = true, default_value_t = 60)]
    timeout: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time one workload on synthetic data.
    Bench(BenchArgs),
    /// Check the kernels against the bundled iris data.
    Validate(ValidateArgs),
    /// Compute the ensemble figure of merit in TB/s.
    Fom(FomArgs),
    /// Run a weak or strong scaling series.
    Campaign(CampaignArgs),
    /// Fit a linear performance model to exported run records.
    Model(ModelArgs),
}

#[derive(Args)]
struct TagArgs {
    #[arg(long)]
    architecture: Option<String>,
    #[arg(long)]
    library: Option<String>,
    #[arg(long)]
    threads: Option<String>,
    /// Software version label recorded with the run.
    #[arg(long = "build-version")]
    build_version: Option<String>,
}

impl TagArgs {
    fn tags(&self) -> FactorTags {
        let mut t = FactorTags::default();
        if let Some(v) = &self.architecture {
            t.architecture = v.clone();
        }
        if let Some(v) = &self.library {
            t.library = v.clone();
        }
        if let Some(v) = &self.threads {
            t.threads = v.clone();
        }
        if let Some(v) = &self.build_version {
            t.version = v.clone();
        }
        t
    }
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("size").required(true).args(["rows_per_rank", "bytes_per_rank"])))]
struct BenchArgs {
    #[arg(long, value_enum)]
    workload: Workload,
    #[arg(long)]
    ranks: usize,
    #[arg(long)]
    rows_per_rank: Option<usize>,
    /// Bytes of input per rank, e.g. 8MB or 64MiB.
    #[arg(long, value_parser = parse_size)]
    bytes_per_rank: Option<u64>,
    #[arg(long, default_value_t = 250)]
    cols: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
    kmeans_k: Vec<usize>,
    #[arg(long, default_value_t = 30)]
    kmeans_iters: usize,
    #[arg(long, default_value_t = 500)]
    svm_iters: usize,
    #[arg(long, value_enum, default_value = "per-rank")]
    gen_mode: GenMode,
    /// Refuse to run below 1024 GiB of total input.
    #[arg(long)]
    full_scale: bool,
    /// Append the record as a JSON line to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    tags: TagArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum TestChoice {
    Pca,
    Kmeans,
    Svm,
    All,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, value_enum)]
    test: TestChoice,
    #[arg(long, default_value_t = 2)]
    ranks: usize,
}

#[derive(Args)]
struct FomArgs {
    /// Mean slowest-rank wall time of the ensemble jobs, seconds.
    #[arg(long)]
    ta: f64,
    #[arg(long, default_value_t = 1.024)]
    job_size_tb: f64,
    #[arg(long)]
    total_nodes: u64,
    #[arg(long)]
    job_nodes: u64,
}

#[derive(Args)]
struct CampaignArgs {
    #[arg(long, value_enum)]
    mode: ScalingMode,
    #[arg(long, value_delimiter = ',', required = true)]
    ranks: Vec<usize>,
    /// Per-rank size for weak scaling, total size for strong scaling.
    #[arg(long, value_parser = parse_size)]
    size: u64,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "pca,kmeans,svm")]
    workloads: Vec<Workload>,
    /// Records are written here as JSON lines, with a CSV copy next to it.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 250)]
    cols: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value = "per-rank")]
    gen_mode: GenMode,
    #[command(flatten)]
    tags: TagArgs,
}

#[derive(Args)]
struct ModelArgs {
    /// CSV table as written by `campaign`.
    #[arg(long = "in")]
    input: PathBuf,
    /// Response column; prefix with `log-` to model its logarithm.
    #[arg(long, default_value = "log-throughput")]
    response: String,
    #[arg(long, value_delimiter = ',', required = true)]
    factors: Vec<String>,
    /// Factors to treat as numeric covariates instead of categorical.
    #[arg(long, value_delimiter = ',')]
    numeric: Vec<String>,
}

fn parse_size(s: &str) -> std::result::Result<u64, String> {
    parse_bytes(s).map_err(|e| e.to_string())
}

fn world(ranks: usize, timeout: Duration) -> Result<InProcessWorld> {
    if ranks == 0 {
        return Err(Error::Argument("need at least one rank".into()));
    }
    Ok(InProcessWorld::new(ranks).with_timeout(timeout))
}

/// Returns rank 0's value, or the first error any rank reported.
fn first_ok<T>(results: Vec<Result<T>>) -> Result<T> {
    let mut first = None;
    for r in results {
        match r {
            Err(e) => return Err(e),
            Ok(v) if first.is_none() => first = Some(v),
            Ok(_) => {}
        }
    }
    first.ok_or_else(|| Error::Argument("no ranks ran".into()))
}

fn bench(args: BenchArgs, timeout: Duration) -> Result<ExitCode> {
    let size = match (args.rows_per_rank, args.bytes_per_rank) {
        (Some(r), _) => ProblemSize::RowsPerRank(r),
        (None, Some(b)) => ProblemSize::BytesPerRank(b),
        (None, None) => return Err(Error::Argument("no problem size given".into())),
    };
    let mut config = BenchmarkConfig::new(args.workload, args.ranks, size);
    config.ncols = args.cols;
    config.seed = args.seed;
    config.kmeans_k = args.kmeans_k;
    config.kmeans_max_iter = args.kmeans_iters;
    config.svm_iters = args.svm_iters;
    config.gen_mode = args.gen_mode;
    config.full_scale = args.full_scale;
    config.tags = args.tags.tags();
    config.validate()?;

    let results = world(args.ranks, timeout)?.run(|comm| run_benchmark(&config, &comm));
    let record = first_ok(results)?;
    eprintln!(
        "{} on {} ranks: {} bytes, t_max {:.6} s, {:.4} GiB/s",
        config.workload, config.ranks, record.problem_bytes, record.timing.t_max, record.throughput_gbs
    );
    println!("{}", serde_json::to_string(&record).map_err(|e| Error::Io(e.into()))?);
    if let Some(path) = &args.out {
        append_records(std::slice::from_ref(&record), path)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn run_validate(args: ValidateArgs, timeout: Duration) -> Result<ExitCode> {
    let tests: Vec<Workload> = match args.test {
        TestChoice::Pca => vec![Workload::Pca],
        TestChoice::Kmeans => vec![Workload::Kmeans],
        TestChoice::Svm => vec![Workload::Svm],
        TestChoice::All => vec![Workload::Pca, Workload::Kmeans, Workload::Svm],
    };
    let mut all_passed = true;
    for test in tests {
        let report = first_ok(world(args.ranks, timeout)?.run(|comm| validate(test, &comm)))?;
        println!("{report}");
        all_passed &= report.passed;
    }
    Ok(if all_passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn fom(args: FomArgs) -> Result<ExitCode> {
    let value = fom_tbs(&FomInput {
        t_a: args.ta,
        job_size_tb: args.job_size_tb,
        total_nodes: args.total_nodes,
        job_nodes: args.job_nodes,
    })?;
    println!("{value:.6} TB/s");
    Ok(ExitCode::SUCCESS)
}

fn campaign(args: CampaignArgs, timeout: Duration) -> Result<ExitCode> {
    let mut plan = CampaignPlan::new(args.mode, args.ranks, args.size, args.workloads);
    plan.ncols = args.cols;
    plan.seed = args.seed;
    plan.gen_mode = args.gen_mode;
    plan.tags = args.tags.tags();
    plan.timeout = timeout;
    let records = run_campaign(&plan)?;
    write_records(&records, &args.out)?;
    let csv_path = args.out.with_extension("csv");
    write_records_csv(&records, std::io::BufWriter::new(std::fs::File::create(&csv_path)?))?;
    print!("{}", summary_table(&records));
    eprintln!("wrote {} and {}", args.out.display(), csv_path.display());
    Ok(ExitCode::SUCCESS)
}

fn model(args: ModelArgs) -> Result<ExitCode> {
    let mut table = FactorTable::from_csv_path(&args.input)?;
    for f in &args.factors {
        if !args.numeric.contains(f) {
            table.make_categorical(f)?;
        }
    }
    let response = ResponseSpec::parse(&args.response);
    let fit = stepwise_aic(&table, &response, &args.factors)?;
    print!("{}", render_report(&fit, &table)?);
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let timeout = Duration::from_secs(cli.timeout);
    let outcome = match cli.command {
        Command::Bench(a) => bench(a, timeout),
        Command::Validate(a) => run_validate(a, timeout),
        Command::Fom(a) => fom(a),
        Command::Campaign(a) => campaign(a, timeout),
        Command::Model(a) => model(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
