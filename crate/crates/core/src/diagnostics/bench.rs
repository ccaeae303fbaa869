use std::time::Instant;

use super::report::BenchRow;
use crate::data::ScoreTable;
use crate::engine::{EngineOptions, Evaluator};
use crate::error::{Error, Result};
use crate::mcmc::{chain_rng, flip_count, mh_step, ChainState, Target};
use crate::poset::{make_order, DEFAULT_IDEAL_CAP};
use crate::scalar::Real;

const WARMUP_STEPS: u64 = 2;

/// Mean wall-clock seconds per MCMC step for each bucket size, once with
/// every alpha table rebuilt per step and once with unchanged tables
/// reused. Both runs follow the same chain, since the two evaluation paths
/// produce identical values.
pub fn bench_iteration_time<T: Real>(
    scores: &ScoreTable<T>,
    bucket_sizes: &[usize],
    iterations: u64,
    seed: u64,
) -> Result<Vec<BenchRow>> {
    let n = scores.n();
    if iterations == 0 {
        return Err(Error::Config("bench needs at least one iteration".into()));
    }
    bucket_sizes
        .iter()
        .map(|&b| {
            let base = make_order(n, b, 1, &(0..n).collect::<Vec<_>>())?;
            if flip_count(&base) == 0 {
                return Err(Error::Config(format!("bucket size {b} leaves a single bucket")));
            }
            let mut times = [0.0; 2];
            for (slot, incremental) in [false, true].into_iter().enumerate() {
                let mut eval = Evaluator::new(scores, EngineOptions { ideal_cap: DEFAULT_IDEAL_CAP })
                    .with_incremental(incremental);
                let mut rng = chain_rng(seed, 0);
                let order = base.random_reordering(&mut rng);
                let mut state = ChainState {
                    log_joint: eval.log_target(&order)?,
                    order,
                };
                for _ in 0..WARMUP_STEPS {
                    mh_step(&mut state, &mut eval, &mut rng, false)?;
                }
                let start = Instant::now();
                for _ in 0..iterations {
                    mh_step(&mut state, &mut eval, &mut rng, false)?;
                }
                times[slot] = start.elapsed().as_secs_f64() / iterations as f64;
            }
            log::info!("bucket size {b}: {:.6}s full, {:.6}s incremental", times[0], times[1]);
            Ok(BenchRow {
                bucket_size: b,
                ideals: base.count_ideals(),
                iterations,
                mean_seconds_full: times[0],
                mean_seconds_incremental: times[1],
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_per_size() {
        let s: ScoreTable<f64> = ScoreTable::from_fn(8, 2, |_, x| -(x.count_ones() as f64)).unwrap();
        let rows = bench_iteration_time(&s, &[1, 3], 5, 0).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].ideals, 9);
        assert_eq!(rows[1].ideals, 1 + 7 + 7 + 3);
        assert!(rows.iter().all(|r| r.mean_seconds_full > 0.0 && r.iterations == 5));
        assert!(bench_iteration_time(&s, &[8], 5, 0).is_err());
    }
}
