use std::sync::Arc;

use super::dp::{self, Frame};
use super::{arcs_from, check_nodes, ArcPosteriorMatrix, EngineOptions};
use crate::data::ScoreTable;
use crate::error::Result;
use crate::poset::{LatticeShape, NodeSet, ParallelBucketOrder};
use crate::scalar::Real;

/// Alpha of a single-part order depends only on the node, the union of
/// the buckets before it and its own bucket.
type Key = (NodeSet, NodeSet);

/// Repeated evaluation of orders sharing one type signature.
///
/// The lattice shape is built once. With incremental evaluation on,
/// single-part alpha tables are cached per node under their [`Key`], so a
/// flip only rebuilds the nodes in or between the two flipped buckets.
/// Cached tables are produced by the same routine as fresh ones, so results
/// are bit-identical either way.
pub struct Evaluator<'a, T> {
    scores: &'a ScoreTable<T>,
    opts: EngineOptions,
    incremental: bool,
    shape: Option<(Vec<Vec<usize>>, Arc<LatticeShape>)>,
    /// Per node, up to two recent tables, most recent first.
    cache: Vec<Vec<(Key, Arc<[T]>)>>,
    rebuilt: u64,
}

/// One evaluated order.
pub struct Evaluation<T> {
    pub order: ParallelBucketOrder,
    pub log_joint: T,
    frame: Frame,
    alpha: Vec<Arc<[T]>>,
    g: Vec<T>,
}

impl<'a, T: Real> Evaluator<'a, T> {
    pub fn new(scores: &'a ScoreTable<T>, opts: EngineOptions) -> Self {
        Self {
            scores,
            opts,
            incremental: true,
            shape: None,
            cache: vec![Vec::new(); scores.n()],
            rebuilt: 0,
        }
    }

    pub fn with_incremental(mut self, on: bool) -> Self {
        self.incremental = on;
        self
    }

    pub fn scores(&self) -> &'a ScoreTable<T> {
        self.scores
    }

    /// Number of node alpha tables computed so far.
    pub fn tables_built(&self) -> u64 {
        self.rebuilt
    }

    fn shape_for(&mut self, order: &ParallelBucketOrder) -> Result<Arc<LatticeShape>> {
        let signature = order.type_signature();
        if let Some((sig, shape)) = &self.shape {
            if *sig == signature {
                return Ok(shape.clone());
            }
        }
        let shape = Arc::new(LatticeShape::new(&signature, self.opts.ideal_cap)?);
        self.shape = Some((signature, shape.clone()));
        Ok(shape)
    }

    fn node_table(&mut self, frame: &Frame, v: usize) -> Arc<[T]> {
        let slot = frame.slots[v];
        let key = (frame.prefixes[0][slot.bucket], frame.buckets[0][slot.bucket]);
        let entries = &mut self.cache[v];
        if let Some(pos) = entries.iter().position(|(k, _)| *k == key) {
            let hit = entries.remove(pos);
            let table = hit.1.clone();
            entries.insert(0, hit);
            return table;
        }
        let table: Arc<[T]> = Arc::from(dp::node_alpha(self.scores, frame, v, None));
        self.rebuilt += 1;
        entries.insert(0, (key, table.clone()));
        entries.truncate(2);
        table
    }

    pub fn evaluate(&mut self, order: &ParallelBucketOrder) -> Result<Evaluation<T>> {
        check_nodes(self.scores, order)?;
        let shape = self.shape_for(order)?;
        let frame = Frame::new(order, shape);
        let alpha = if self.incremental && frame.single_part() {
            (0..frame.n).map(|v| self.node_table(&frame, v)).collect()
        } else {
            self.rebuilt += frame.n as u64;
            dp::all_alpha(self.scores, &frame, None)
        };
        let g = dp::forward(&frame, &alpha);
        Ok(Evaluation {
            order: order.clone(),
            log_joint: g[g.len() - 1],
            frame,
            alpha,
            g,
        })
    }

    pub fn log_joint(&mut self, order: &ParallelBucketOrder) -> Result<T> {
        Ok(self.evaluate(order)?.log_joint)
    }

    /// Conditional arc posteriors of an evaluated order.
    pub fn arc_posteriors(&self, ev: &Evaluation<T>) -> ArcPosteriorMatrix {
        let mut m = arcs_from(self.scores, &ev.frame, &ev.alpha, &ev.g);
        m.order = Some(ev.order.to_string());
        m
    }
}
