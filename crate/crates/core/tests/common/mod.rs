#![allow(dead_code)]

pub mod oracle;

use std::path::{Path, PathBuf};

use poset_mcmc::data::Dataset;
use poset_mcmc::poset::{NodeSet, ParallelBucketOrder};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn random_dataset<R: Rng>(n: usize, m: usize, rng: &mut R) -> Dataset {
    let arity: Vec<usize> = (0..n).map(|_| rng.random_range(2..4)).collect();
    let rows: Vec<Vec<usize>> = (0..m)
        .map(|_| arity.iter().map(|&r| rng.random_range(0..r)).collect())
        .collect();
    Dataset::from_indices((0..n).map(|v| format!("x{v}")).collect(), &arity, &rows).unwrap()
}

/// Splits `0..len` into non-empty consecutive runs at random cut points.
fn random_runs<R: Rng>(len: usize, max_runs: usize, rng: &mut R) -> Vec<usize> {
    let runs = rng.random_range(1..=max_runs.min(len));
    let mut cuts: Vec<usize> = (1..len).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<usize> = cuts[..runs - 1].to_vec();
    cuts.sort_unstable();
    cuts.push(len);
    let mut last = 0;
    cuts.iter()
        .map(|&c| {
            let size = c - last;
            last = c;
            size
        })
        .collect()
}

/// A parallel bucket order with a random type signature: up to
/// `max_parts` parts of random sizes, each cut into random buckets.
pub fn random_order<R: Rng>(n: usize, max_parts: usize, rng: &mut R) -> ParallelBucketOrder {
    let mut nodes: Vec<usize> = (0..n).collect();
    nodes.shuffle(rng);
    let mut rest = &nodes[..];
    let mut parts = Vec::new();
    for part_size in random_runs(n, max_parts, rng) {
        let (mine, tail) = rest.split_at(part_size);
        rest = tail;
        let mut it = mine.iter();
        let buckets: Vec<NodeSet> = random_runs(part_size, part_size, rng)
            .into_iter()
            .map(|b| it.by_ref().take(b).fold(0u64, |m, &v| m | 1 << v))
            .collect();
        parts.push(buckets);
    }
    ParallelBucketOrder::from_parts(n, parts).unwrap()
}
