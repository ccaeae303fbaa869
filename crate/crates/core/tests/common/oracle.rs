//! Exhaustive enumeration over (linear extension, DAG) pairs.
//!
//! Deliberately naive: every linear extension of the order is listed, and
//! for each one every DAG whose parent sets respect it and the indegree
//! bound is listed explicitly, weights looked up one parent set at a time.

#![allow(dead_code)]

use poset_mcmc::data::ScoreTable;
use poset_mcmc::poset::{linear_extensions, ParallelBucketOrder};

/// Calls `visit(parents, log_weight)` once per (extension, DAG) pair.
pub fn for_each_pair(scores: &ScoreTable<f64>, order: &ParallelBucketOrder, mut visit: impl FnMut(&[u64], f64)) {
    let n = scores.n();
    let k = scores.max_indegree();
    for ext in linear_extensions(order).unwrap() {
        let mut parents = vec![0u64; n];
        dags(scores, k, &ext, 0, 0, 0.0, &mut parents, &mut visit);
    }
}

#[allow(clippy::too_many_arguments)]
fn dags(
    scores: &ScoreTable<f64>,
    k: usize,
    ext: &[usize],
    pos: usize,
    before: u64,
    acc: f64,
    parents: &mut Vec<u64>,
    visit: &mut impl FnMut(&[u64], f64),
) {
    if pos == ext.len() {
        visit(parents, acc);
        return;
    }
    let v = ext[pos];
    let mut s = before;
    // all subsets of `before`, including the empty one
    loop {
        if s.count_ones() as usize <= k {
            let w = scores.get(v, s).expect("parent set within indegree bound");
            parents[v] = s;
            dags(scores, k, ext, pos + 1, before | 1 << v, acc + w, parents, visit);
        }
        if s == 0 {
            break;
        }
        s = (s - 1) & before;
    }
    parents[v] = 0;
}

pub fn log_sum(terms: &[f64]) -> f64 {
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

pub struct Enumeration {
    pub log_total: f64,
    /// `arcs[u][v]`: log of the summed weight of pairs containing `u → v`.
    pub log_arcs: Vec<Vec<f64>>,
}

impl Enumeration {
    pub fn arc_probability(&self, u: usize, v: usize) -> f64 {
        (self.log_arcs[u][v] - self.log_total).exp()
    }
}

pub fn enumerate(scores: &ScoreTable<f64>, order: &ParallelBucketOrder) -> Enumeration {
    let n = scores.n();
    let mut all = Vec::new();
    let mut arcs = vec![vec![Vec::new(); n]; n];
    for_each_pair(scores, order, |parents, w| {
        all.push(w);
        for (v, &s) in parents.iter().enumerate() {
            for (u, row) in arcs.iter_mut().enumerate() {
                if s >> u & 1 == 1 {
                    row[v].push(w);
                }
            }
        }
    });
    Enumeration {
        log_total: log_sum(&all),
        log_arcs: arcs.iter().map(|row| row.iter().map(|t| log_sum(t)).collect()).collect(),
    }
}

/// `ln` of the summed weight of pairs whose DAG satisfies `feature`.
pub fn log_feature_weight(
    scores: &ScoreTable<f64>,
    order: &ParallelBucketOrder,
    feature: impl Fn(&[u64]) -> bool,
) -> f64 {
    let mut kept = Vec::new();
    for_each_pair(scores, order, |parents, w| {
        if feature(parents) {
            kept.push(w);
        }
    });
    log_sum(&kept)
}

/// Unconditional posteriors `p(u → v | D)` over all linear orders.
pub fn exact_by_enumeration(scores: &ScoreTable<f64>) -> Enumeration {
    let n = scores.n();
    let single: String = (0..n).map(|v| v.to_string()).collect::<Vec<_>>().join(",");
    enumerate(scores, &single.parse().unwrap())
}
