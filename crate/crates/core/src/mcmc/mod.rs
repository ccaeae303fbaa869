//! Metropolis-Hastings sampling over reorderings of a parallel bucket
//! order, and the arc posterior estimates built from the samples.

mod estimate;
mod sampler;
mod trace;

pub use estimate::{estimate_arc_posteriors, largest_absolute_error, max_arc_deviation, ArcDeviation, PooledEstimate};
pub use sampler::{
    chain_rng, flip_count, mh_step, propose_flip, run_chain, run_chains, ChainState, McmcConfig, Target,
};
pub use trace::{
    parse_samples_tsv, parse_trace_tsv, read_samples_tsv, read_trace_tsv, ChainTrace, Sample, StepRecord,
    TraceFile, TraceRow,
};
