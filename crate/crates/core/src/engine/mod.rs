//! Exact conditional posteriors given a parallel bucket order.
//!
//! For an order `P` the engine computes, in the log domain,
//! `p(D, P) = sum_{L ⊇ P} sum_{A ⊆ L} prod_v w_v(A_v)` (up to the constant
//! `ρ ≡ 1` factor) together with `p(u → v | D, P)` for every arc and the
//! posterior of any modular feature.

mod dp;
mod evaluator;
mod feature;
mod matrix;

use std::sync::Arc;

use rayon::prelude::*;

pub use dp::direct_log_alpha;
pub use evaluator::{Evaluation, Evaluator};
pub use feature::{LocalIndicator, ModularFeature};
pub use matrix::{ArcPosteriorMatrix, PosteriorMode};

use crate::data::ScoreTable;
use crate::error::{Error, Result};
use crate::poset::{IdealLattice, LatticeShape, ParallelBucketOrder, DEFAULT_IDEAL_CAP};
use crate::scalar::Real;
use dp::{Filter, Frame};

/// Largest node count accepted by [`exact_posteriors`] by default.
pub const DEFAULT_EXACT_CAP: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EngineOptions {
    /// Maximum number of ideals a lattice may have.
    pub ideal_cap: u128,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            ideal_cap: DEFAULT_IDEAL_CAP,
        }
    }
}

/// `ln a_v(J)` at the placements `J` of every node `v`.
pub struct AlphaTables<T> {
    frame: Arc<Frame>,
    tables: Vec<Arc<[T]>>,
}

impl<T: Real> AlphaTables<T> {
    pub fn n(&self) -> usize {
        self.tables.len()
    }

    /// Raw table of node `v`, one value per placement.
    pub fn table(&self, v: usize) -> &[T] {
        &self.tables[v]
    }

    /// `ln a_v(I)` for ideal index `idx`, or `None` if `I ∪ {v}` is not an
    /// ideal (or `v ∈ I`).
    pub fn log_alpha(&self, v: usize, idx: usize) -> Option<T> {
        self.frame.placement_of(v, idx).map(|pi| self.tables[v][pi])
    }
}

/// Forward values `ln g(I)` and backward values `ln h(I)` per ideal index.
#[derive(Clone, Debug)]
pub struct ForwardBackward<T> {
    g: Vec<T>,
    h: Vec<T>,
}

impl<T: Real> ForwardBackward<T> {
    pub fn log_g(&self, idx: usize) -> T {
        self.g[idx]
    }

    pub fn log_h(&self, idx: usize) -> T {
        self.h[idx]
    }

    pub fn g(&self) -> &[T] {
        &self.g
    }

    pub fn h(&self) -> &[T] {
        &self.h
    }

    pub fn log_total(&self) -> T {
        self.g[self.g.len() - 1]
    }
}

fn check_nodes<T: Real>(scores: &ScoreTable<T>, order: &ParallelBucketOrder) -> Result<()> {
    if scores.n() != order.n() {
        return Err(Error::Shape(format!(
            "score table has {} nodes, order has {}",
            scores.n(),
            order.n()
        )));
    }
    Ok(())
}

fn frame_for(order: &ParallelBucketOrder, opts: &EngineOptions) -> Result<Frame> {
    let shape = LatticeShape::new(&order.type_signature(), opts.ideal_cap)?;
    Ok(Frame::new(order, Arc::new(shape)))
}

fn lattice_frame(lattice: &IdealLattice) -> Frame {
    Frame::new(lattice.order(), Arc::new(lattice.shape().clone()))
}

pub fn build_alpha<T: Real>(scores: &ScoreTable<T>, lattice: &IdealLattice) -> Result<AlphaTables<T>> {
    check_nodes(scores, lattice.order())?;
    let frame = lattice_frame(lattice);
    let tables = dp::all_alpha(scores, &frame, None);
    Ok(AlphaTables {
        frame: Arc::new(frame),
        tables,
    })
}

pub fn forward_backward<T: Real>(alpha: &AlphaTables<T>, lattice: &IdealLattice) -> ForwardBackward<T> {
    assert_eq!(alpha.frame.shape.len(), lattice.len(), "alpha built for another lattice");
    ForwardBackward {
        g: dp::forward(&alpha.frame, &alpha.tables),
        h: dp::backward(&alpha.frame, &alpha.tables),
    }
}

fn log_total_filtered<T: Real>(scores: &ScoreTable<T>, frame: &Frame, filter: Filter) -> T {
    let alpha = dp::all_alpha(scores, frame, filter);
    *dp::forward(frame, &alpha).last().expect("lattice is never empty")
}

/// `ln p(D, P)` up to the common constant of the order-modular prior.
pub fn log_joint<T: Real>(
    scores: &ScoreTable<T>,
    order: &ParallelBucketOrder,
    opts: &EngineOptions,
) -> Result<T> {
    check_nodes(scores, order)?;
    let frame = frame_for(order, opts)?;
    Ok(log_total_filtered(scores, &frame, None))
}

pub(crate) fn arcs_from<T: Real>(
    scores: &ScoreTable<T>,
    frame: &Frame,
    alpha: &[Arc<[T]>],
    g: &[T],
) -> ArcPosteriorMatrix {
    let h = dp::backward(frame, alpha);
    let total = g[g.len() - 1];
    let column = |v| dp::arc_numerators(scores, frame, g, &h, v);
    let columns: Vec<Vec<T>> = if dp::heavy(scores, frame) {
        (0..frame.n).into_par_iter().map(column).collect()
    } else {
        (0..frame.n).map(column).collect()
    };
    let mut m = ArcPosteriorMatrix::zeros(frame.n, PosteriorMode::Conditional, scores.max_indegree());
    for (v, num) in columns.iter().enumerate() {
        for (u, &x) in num.iter().enumerate() {
            m.set(u, v, (x - total).as_f64().exp());
        }
    }
    m
}

/// `p(u → v | D, P)` for all pairs.
pub fn arc_posteriors<T: Real>(
    scores: &ScoreTable<T>,
    order: &ParallelBucketOrder,
    opts: &EngineOptions,
) -> Result<ArcPosteriorMatrix> {
    check_nodes(scores, order)?;
    let frame = frame_for(order, opts)?;
    let alpha = dp::all_alpha(scores, &frame, None);
    let g = dp::forward(&frame, &alpha);
    let mut m = arcs_from(scores, &frame, &alpha, &g);
    m.order = Some(order.to_string());
    Ok(m)
}

/// `p(f | D, P)`, by rerunning the forward pass with the weights of parent
/// sets failing `f` set to zero.
pub fn feature_posterior<T: Real>(
    scores: &ScoreTable<T>,
    order: &ParallelBucketOrder,
    feature: &ModularFeature,
    opts: &EngineOptions,
) -> Result<f64> {
    check_nodes(scores, order)?;
    if feature.n() != scores.n() {
        return Err(Error::Shape(format!(
            "feature has {} nodes, score table {}",
            feature.n(),
            scores.n()
        )));
    }
    let frame = frame_for(order, opts)?;
    let total = log_total_filtered(scores, &frame, None);
    let filter = |v: usize, s: u64| feature.holds_local(v, s);
    let restricted = log_total_filtered(scores, &frame, Some(&filter));
    Ok((restricted - total).as_f64().exp().min(1.0))
}

/// Log evidence and unconditional arc posteriors, via the single-bucket
/// order whose only linear extensions are all linear orders.
pub fn exact_posteriors<T: Real>(scores: &ScoreTable<T>, exact_cap: usize) -> Result<(T, ArcPosteriorMatrix)> {
    let n = scores.n();
    if n > exact_cap {
        return Err(Error::CapExceeded {
            what: "exact mode (nodes)",
            required: n as u128,
            cap: exact_cap as u128,
        });
    }
    let order = ParallelBucketOrder::single_bucket(n)?;
    let opts = EngineOptions {
        ideal_cap: (1u128 << n).max(DEFAULT_IDEAL_CAP),
    };
    let frame = frame_for(&order, &opts)?;
    let alpha = dp::all_alpha(scores, &frame, None);
    let g = dp::forward(&frame, &alpha);
    let total = g[g.len() - 1];
    let mut m = arcs_from(scores, &frame, &alpha, &g);
    m.mode = PosteriorMode::Exact;
    m.order = Some(order.to_string());
    Ok((total, m))
}

#[cfg(test)]
mod tests;
