use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use poset_mcmc::diagnostics::{run_experiment, BucketSize, ExperimentConfig, Mode, RunReport};
use poset_mcmc::engine::DEFAULT_EXACT_CAP;
use poset_mcmc::poset::DEFAULT_IDEAL_CAP;

#[derive(Parser)]
#[command(name = "poset-mcmc", version, about = "Partial order MCMC for Bayesian network arc posteriors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the local score table and write it as a cache file.
    Scores(RunArgs),
    /// Sample a dataset from a network description.
    Gen(RunArgs),
    /// Exact arc posteriors over all linear orders.
    Exact(RunArgs),
    /// Sample bucket orders and estimate arc posteriors.
    Mcmc(RunArgs),
    /// Pool per-chain estimates found in --out and report their spread.
    Aggregate(RunArgs),
    /// Time MCMC iterations for several bucket sizes.
    Bench(RunArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Categorical data file (comma or tab separated).
    #[arg(long)]
    data: Option<PathBuf>,
    /// The data file has no header line.
    #[arg(long)]
    no_header: bool,
    /// Network description (JSON) to sample data from.
    #[arg(long)]
    network: Option<PathBuf>,
    /// Rows to sample from --network.
    #[arg(long)]
    rows: Option<usize>,
    /// Score cache written by `scores`, instead of data.
    #[arg(long)]
    scores: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    max_indegree: usize,
    /// Bucket size, or `auto` for round((k-2) log2 n).
    #[arg(long, default_value = "auto")]
    bucket_size: String,
    /// Number of parallel bucket orders.
    #[arg(long)]
    parts: Option<usize>,
    /// Total iterations (burn-in plus samples times thinning).
    #[arg(long)]
    iters: Option<u64>,
    #[arg(long)]
    burnin: Option<u64>,
    /// Iterations between retained samples.
    #[arg(long)]
    thin: Option<u64>,
    /// Retained samples per chain.
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long, default_value_t = 1)]
    chains: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Largest node count for exact computation.
    #[arg(long, default_value_t = DEFAULT_EXACT_CAP)]
    exact_cap: usize,
    /// Largest number of ideals per order.
    #[arg(long, default_value_t = DEFAULT_IDEAL_CAP)]
    ideal_cap: u128,
    /// In mcmc mode, also compute exact posteriors and report errors.
    #[arg(long)]
    compare_exact: bool,
    /// Bucket sizes for bench, comma separated.
    #[arg(long, value_delimiter = ',')]
    bench_sizes: Vec<usize>,
    /// Timed iterations per bucket size in bench.
    #[arg(long, default_value_t = 20)]
    bench_iters: u64,
}

impl RunArgs {
    fn into_config(self, mode: Mode) -> poset_mcmc::Result<ExperimentConfig> {
        let mut c = ExperimentConfig::new(mode, self.out);
        c.data = self.data;
        c.has_header = !self.no_header;
        c.network = self.network;
        c.rows = self.rows;
        c.scores = self.scores;
        c.max_indegree = self.max_indegree;
        c.bucket_size = self.bucket_size.parse::<BucketSize>()?;
        c.parts = self.parts;
        c.iterations = self.iters;
        c.burn_in = self.burnin;
        c.thinning = self.thin;
        c.samples = self.samples;
        c.chains = self.chains;
        c.seed = self.seed;
        c.exact_cap = self.exact_cap;
        c.ideal_cap = self.ideal_cap;
        c.compare_exact = self.compare_exact;
        c.bench_sizes = self.bench_sizes;
        c.bench_iterations = self.bench_iters;
        Ok(c)
    }
}

fn print_report(report: &RunReport) {
    if report.routed_to_exact {
        println!("single bucket per part: ran exact mode");
    }
    if let Some(ev) = report.log_evidence {
        println!("log evidence\t{ev}");
    }
    if let Some(d) = report.max_arc_deviation {
        println!("max arc deviation\t{d}");
    }
    for (run, e) in &report.largest_absolute_errors {
        println!("largest absolute error\t{run}\t{e}");
    }
    for f in &report.files {
        println!("wrote {}", f.display());
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            log::warn!("could not set thread count: {e}");
        }
    }
    let (mode, args) = match cli.command {
        Command::Scores(a) => (Mode::Scores, a),
        Command::Gen(a) => (Mode::Gen, a),
        Command::Exact(a) => (Mode::Exact, a),
        Command::Mcmc(a) => (Mode::Mcmc, a),
        Command::Aggregate(a) => (Mode::Aggregate, a),
        Command::Bench(a) => (Mode::Bench, a),
    };
    match args.into_config(mode).and_then(|c| run_experiment(&c)) {
        Ok(report) => {
            print_report(&report);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
