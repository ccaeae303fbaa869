//! Experiment configuration, defaults, orchestration and report files.
//!
//! The default bucket size follows `b ≈ (k - 2) log2 n`: below that the
//! `n^{k+1}` score pass dominates each iteration anyway, above it the
//! `2^b` growth of the ideal lattice takes over. A single bucket order
//! (`r = 1`) is the default.

mod bench;
mod config;
mod report;
mod run;

pub use bench::bench_iteration_time;
pub use config::{
    auto_bucket_size, resolve_defaults, BucketSize, ExperimentConfig, Mode, Resolved, DEFAULT_BURN_IN,
    DEFAULT_SAMPLES, DEFAULT_THINNING, MAX_AUTO_BUCKET,
};
pub use report::{
    bench_tsv, deviation_tsv, emit_convergence_report, errors_tsv, estimate_path, parse_bench_tsv,
    parse_deviation_tsv, parse_errors_tsv, parse_summary_tsv, read_chain_estimates, samples_path, trace_path,
    BenchRow, ChainSummary,
};
pub use run::{evidence_path, parse_evidence_tsv, read_evidence, run_experiment, RunReport};
