use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::trace::{ChainTrace, Sample, StepRecord};
use crate::data::ScoreTable;
use crate::engine::{EngineOptions, Evaluator};
use crate::error::{Error, Result};
use crate::poset::{make_order, members, Flip, ParallelBucketOrder, DEFAULT_IDEAL_CAP};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct McmcConfig {
    pub bucket_size: usize,
    pub parts: usize,
    pub burn_in: u64,
    pub thinning: u64,
    pub samples: u64,
    pub chains: usize,
    pub base_seed: u64,
    /// Adds `ln q(P | P~) - ln q(P~ | P)` to the acceptance ratio. The flip
    /// proposal is symmetric, so this only matters for other proposals.
    pub hastings: bool,
    /// Reuse unchanged alpha tables between iterations.
    pub incremental: bool,
    pub ideal_cap: u128,
}

impl McmcConfig {
    pub fn new(bucket_size: usize) -> Self {
        Self {
            bucket_size,
            parts: 1,
            burn_in: 10_000,
            thinning: 100,
            samples: 100,
            chains: 1,
            base_seed: 0,
            hastings: false,
            incremental: true,
            ideal_cap: DEFAULT_IDEAL_CAP,
        }
    }

    pub fn schedule(mut self, burn_in: u64, samples: u64, thinning: u64) -> Self {
        self.burn_in = burn_in;
        self.samples = samples;
        self.thinning = thinning;
        self
    }

    pub fn total_iterations(&self) -> u64 {
        self.burn_in + self.samples * self.thinning
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.samples == 0 || self.thinning == 0 {
            return Err(Error::Config("sample count and thinning interval must be at least 1".into()));
        }
        if self.chains == 0 {
            return Err(Error::Config("at least one chain is required".into()));
        }
        let base = self.base_order(n)?;
        if flip_count(&base) == 0 {
            return Err(Error::Config(format!(
                "order {base} has a single bucket in every part; no flip is possible (use exact mode)"
            )));
        }
        Ok(())
    }

    /// The order whose reorderings form the state space.
    pub fn base_order(&self, n: usize) -> Result<ParallelBucketOrder> {
        make_order(n, self.bucket_size, self.parts, &(0..n).collect::<Vec<_>>())
    }
}

/// Anything the sampler can target: an unnormalized log density on orders.
pub trait Target {
    fn log_target(&mut self, order: &ParallelBucketOrder) -> Result<f64>;
}

impl<T: Real> Target for Evaluator<'_, T> {
    fn log_target(&mut self, order: &ParallelBucketOrder) -> Result<f64> {
        Ok(self.log_joint(order)?.as_f64())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    pub order: ParallelBucketOrder,
    pub log_joint: f64,
}

/// Number of `(part, u, v)` triples with `u`, `v` in different buckets of
/// the same part. Depends only on the type signature.
pub fn flip_count(order: &ParallelBucketOrder) -> u64 {
    order
        .parts()
        .iter()
        .map(|part| {
            let sizes: Vec<u64> = part.iter().map(|b| b.count_ones() as u64).collect();
            let total: u64 = sizes.iter().sum();
            (total * total - sizes.iter().map(|s| s * s).sum::<u64>()) / 2
        })
        .sum()
}

/// Draws a flip uniformly among all valid triples and applies it.
pub fn propose_flip<R: Rng + ?Sized>(
    order: &ParallelBucketOrder,
    rng: &mut R,
) -> Result<(ParallelBucketOrder, Flip)> {
    let total = flip_count(order);
    if total == 0 {
        return Err(Error::Config(format!("no valid flip in order {order}")));
    }
    let mut pick = rng.random_range(0..total);
    for (part, buckets) in order.parts().iter().enumerate() {
        for i in 0..buckets.len() {
            for j in i + 1..buckets.len() {
                let bi = buckets[i].count_ones() as u64;
                let bj = buckets[j].count_ones() as u64;
                if pick >= bi * bj {
                    pick -= bi * bj;
                    continue;
                }
                let u = members(buckets[i]).nth((pick / bj) as usize).unwrap();
                let v = members(buckets[j]).nth((pick % bj) as usize).unwrap();
                let flip = Flip { part, u, v };
                return Ok((order.apply_flip(flip)?, flip));
            }
        }
    }
    unreachable!("flip index within count")
}

/// One Metropolis-Hastings transition. Returns the proposal and whether it
/// was accepted; `state` is updated in place on acceptance.
pub fn mh_step<G: Target + ?Sized, R: Rng + ?Sized>(
    state: &mut ChainState,
    target: &mut G,
    rng: &mut R,
    hastings: bool,
) -> Result<(Flip, bool)> {
    let (candidate, flip) = propose_flip(&state.order, rng)?;
    let log_candidate = target.log_target(&candidate)?;
    let mut delta = log_candidate - state.log_joint;
    if hastings {
        // q(P~ | P) = 1 / flip_count(P)
        delta += (flip_count(&candidate) as f64).ln() - (flip_count(&state.order) as f64).ln();
    }
    let accept = delta >= 0.0 || rng.random::<f64>().ln() < delta;
    if accept {
        state.order = candidate;
        state.log_joint = log_candidate;
    }
    Ok((flip, accept))
}

/// Independent generator for chain `chain` of a run seeded with `base_seed`.
pub fn chain_rng(base_seed: u64, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(chain as u64);
    rng
}

/// Runs one chain: a random initial reordering, `burn_in` steps, then
/// `samples` retained states `thinning` steps apart, each with its
/// conditional arc posteriors.
pub fn run_chain<T: Real>(scores: &ScoreTable<T>, config: &McmcConfig, chain: usize) -> Result<ChainTrace> {
    let n = scores.n();
    config.validate(n)?;
    let mut rng = chain_rng(config.base_seed, chain);
    let opts = EngineOptions {
        ideal_cap: config.ideal_cap,
    };
    let mut eval = Evaluator::new(scores, opts).with_incremental(config.incremental);
    let initial = config.base_order(n)?.random_reordering(&mut rng);
    let mut state = ChainState {
        log_joint: eval.log_target(&initial)?,
        order: initial.clone(),
    };
    let total = config.total_iterations();
    let mut trace = ChainTrace {
        chain,
        burn_in: config.burn_in,
        thinning: config.thinning,
        initial,
        initial_log_score: state.log_joint,
        steps: Vec::with_capacity(total as usize),
        samples: Vec::with_capacity(config.samples as usize),
    };
    for iteration in 1..=total {
        let (flip, accepted) = mh_step(&mut state, &mut eval, &mut rng, config.hastings)?;
        trace.steps.push(StepRecord {
            iteration,
            log_score: state.log_joint,
            accepted,
            flip,
        });
        if iteration > config.burn_in && (iteration - config.burn_in).is_multiple_of(config.thinning) {
            let ev = eval.evaluate(&state.order)?;
            debug_assert_eq!(ev.log_joint.as_f64(), state.log_joint);
            let mut arcs = eval.arc_posteriors(&ev);
            arcs.chain = Some(chain);
            trace.samples.push(Sample {
                iteration,
                order: state.order.clone(),
                arcs,
            });
        }
    }
    log::info!(
        "chain {chain}: {total} steps, acceptance {:.3}, final score {:.4}",
        trace.acceptance_ratio(),
        state.log_joint
    );
    Ok(trace)
}

/// Runs `config.chains` chains in parallel.
pub fn run_chains<T: Real>(scores: &ScoreTable<T>, config: &McmcConfig) -> Result<Vec<ChainTrace>> {
    config.validate(scores.n())?;
    (0..config.chains)
        .into_par_iter()
        .map(|c| run_chain(scores, config, c))
        .collect()
}
