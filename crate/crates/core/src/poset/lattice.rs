//! Ideals of a parallel bucket order.
//!
//! For one bucket order `B_0 B_1 .. B_{l-1}` every non-empty ideal is
//! `B_0 ∪ .. ∪ B_{i-1} ∪ T` with `∅ ≠ T ⊆ B_i`. Local states are numbered
//!
//! ```text
//! 0                      the empty ideal
//! base_i + T             T a non-empty bitmask over the members of B_i
//! base_i = 1 + sum_{j<i} (2^{b_j} - 1) - 1
//! ```
//!
//! so `base_i` itself is the full prefix through `B_{i-1}` and a full `T`
//! coincides with `base_{i+1}`. Adding or removing the member at bucket
//! position `t` moves the state by exactly `2^t`, and the numbering is a
//! linear extension of inclusion. Parts combine by mixed-radix indexing with
//! part 0 most significant.

use super::order::{full_set, members, NodeSet, ParallelBucketOrder};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub(crate) struct PartShape {
    pub sizes: Vec<usize>,
    /// `base_i` per bucket: the local state of the prefix before it.
    pub bases: Vec<usize>,
    pub states: usize,
    /// Per local state: bucket holding the maximal elements and their
    /// subset mask (`(0, 0)` for the empty state).
    pub top_bucket: Vec<u32>,
    pub top_subset: Vec<u64>,
    /// Per local state: bucket that receives the next element and the
    /// members of it already present. `u32::MAX` at the full state.
    pub next_bucket: Vec<u32>,
    pub next_subset: Vec<u64>,
}

impl PartShape {
    fn new(sizes: &[usize]) -> Self {
        let states = 1 + sizes.iter().map(|&b| (1usize << b) - 1).sum::<usize>();
        let mut bases = Vec::with_capacity(sizes.len());
        let mut top_bucket = vec![0u32; states];
        let mut top_subset = vec![0u64; states];
        let mut next_bucket = vec![u32::MAX; states];
        let mut next_subset = vec![0u64; states];
        let mut base = 0usize;
        for (i, &b) in sizes.iter().enumerate() {
            bases.push(base);
            let full = (1usize << b) - 1;
            next_bucket[base] = i as u32;
            next_subset[base] = 0;
            for t in 1..=full {
                top_bucket[base + t] = i as u32;
                top_subset[base + t] = t as u64;
                if t < full {
                    next_bucket[base + t] = i as u32;
                    next_subset[base + t] = t as u64;
                }
            }
            base += full;
        }
        Self {
            sizes: sizes.to_vec(),
            bases,
            states,
            top_bucket,
            top_subset,
            next_bucket,
            next_subset,
        }
    }
}

/// Index arithmetic of the ideal lattice; depends only on the type
/// signature, not on which nodes sit in which bucket.
#[derive(Clone, Debug)]
pub struct LatticeShape {
    pub(crate) parts: Vec<PartShape>,
    pub(crate) strides: Vec<usize>,
    len: usize,
}

impl LatticeShape {
    pub fn new(signature: &[Vec<usize>], cap: u128) -> Result<Self> {
        let mut required = 1u128;
        for sizes in signature {
            if sizes.iter().any(|&b| b == 0 || b >= 48) {
                return Err(Error::InvalidOrder(format!("unsupported bucket sizes {sizes:?}")));
            }
            let local = 1 + sizes.iter().map(|&b| (1u128 << b) - 1).sum::<u128>();
            required = required.saturating_mul(local);
        }
        if required > cap {
            return Err(Error::CapExceeded {
                what: "ideal lattice (ideals)",
                required,
                cap,
            });
        }
        let parts: Vec<PartShape> = signature.iter().map(|s| PartShape::new(s)).collect();
        let mut strides = vec![1usize; parts.len()];
        for p in (0..parts.len().saturating_sub(1)).rev() {
            strides[p] = strides[p + 1] * parts[p + 1].states;
        }
        Ok(Self {
            len: required as usize,
            parts,
            strides,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn part_count(&self) -> usize {
        self.parts.len()
    }

    #[inline]
    pub(crate) fn local(&self, idx: usize, part: usize) -> usize {
        (idx / self.strides[part]) % self.parts[part].states
    }

    /// Index with part `part`'s digit removed.
    #[inline]
    pub(crate) fn others(&self, idx: usize, part: usize) -> usize {
        let s = self.strides[part];
        (idx / (s * self.parts[part].states)) * s + idx % s
    }

    /// Number of distinct `others` values for `part`.
    pub(crate) fn others_len(&self, part: usize) -> usize {
        self.len / self.parts[part].states
    }

    /// Calls `f(part, bucket, position, rest, lower)` for every cover
    /// `lower ⋖ idx`; the removed node is the one at `position` of `bucket`
    /// in `part` and `rest` is the mask of that bucket's members left in
    /// `lower`.
    #[inline]
    pub(crate) fn for_each_cover(
        &self,
        idx: usize,
        mut f: impl FnMut(usize, usize, usize, u64, usize),
    ) {
        for (p, shape) in self.parts.iter().enumerate() {
            let s = self.local(idx, p);
            if s == 0 {
                continue;
            }
            let bucket = shape.top_bucket[s] as usize;
            let top = shape.top_subset[s];
            for t in members(top) {
                f(p, bucket, t, top & !(1 << t), idx - (1usize << t) * self.strides[p]);
            }
        }
    }

    /// Calls `f(part, bucket, position, present, upper)` for every cover
    /// `idx ⋖ upper`; `present` is the mask of bucket members already in
    /// the ideal.
    #[inline]
    pub(crate) fn for_each_extension(
        &self,
        idx: usize,
        mut f: impl FnMut(usize, usize, usize, u64, usize),
    ) {
        for (p, shape) in self.parts.iter().enumerate() {
            let s = self.local(idx, p);
            let bucket = shape.next_bucket[s];
            if bucket == u32::MAX {
                continue;
            }
            let bucket = bucket as usize;
            let present = shape.next_subset[s];
            let absent = ((1u64 << shape.sizes[bucket]) - 1) & !present;
            for t in members(absent) {
                f(p, bucket, t, present, idx + (1usize << t) * self.strides[p]);
            }
        }
    }
}

/// Materialized ideal lattice of a specific order.
#[derive(Clone, Debug)]
pub struct IdealLattice {
    shape: LatticeShape,
    order: ParallelBucketOrder,
    /// `bucket_nodes[p][i][t]`: node at position `t` of bucket `i` in part `p`.
    bucket_nodes: Vec<Vec<Vec<usize>>>,
    masks: Vec<NodeSet>,
}

/// A cover relation `lower ⋖ upper` with `upper = lower ∪ {node}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Cover {
    pub node: usize,
    pub lower: usize,
    pub upper: usize,
}

pub const DEFAULT_IDEAL_CAP: u128 = 1 << 25;

/// Enumerates all ideals of `order`, failing if there are more than `cap`.
pub fn enumerate_ideals(order: &ParallelBucketOrder, cap: u128) -> Result<IdealLattice> {
    let shape = LatticeShape::new(&order.type_signature(), cap)?;
    let bucket_nodes: Vec<Vec<Vec<usize>>> = order
        .parts()
        .iter()
        .map(|part| part.iter().map(|&b| members(b).collect()).collect())
        .collect();
    let local_masks: Vec<Vec<NodeSet>> = shape
        .parts
        .iter()
        .zip(order.parts())
        .map(|(ps, buckets)| {
            (0..ps.states)
                .map(|s| {
                    if s == 0 {
                        return 0;
                    }
                    let i = ps.top_bucket[s] as usize;
                    let prefix = buckets[..i].iter().fold(0, |a, b| a | b);
                    let nodes: Vec<usize> = members(buckets[i]).collect();
                    members(ps.top_subset[s]).fold(prefix, |m, t| m | 1 << nodes[t])
                })
                .collect()
        })
        .collect();
    let masks = (0..shape.len())
        .map(|idx| {
            (0..shape.part_count()).fold(0, |m, p| m | local_masks[p][shape.local(idx, p)])
        })
        .collect();
    Ok(IdealLattice {
        shape,
        order: order.clone(),
        bucket_nodes,
        masks,
    })
}

impl IdealLattice {
    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn shape(&self) -> &LatticeShape {
        &self.shape
    }

    pub fn order(&self) -> &ParallelBucketOrder {
        &self.order
    }

    pub fn mask(&self, idx: usize) -> NodeSet {
        self.masks[idx]
    }

    pub fn masks(&self) -> &[NodeSet] {
        &self.masks
    }

    pub fn size(&self, idx: usize) -> usize {
        self.masks[idx].count_ones() as usize
    }

    pub fn top(&self) -> usize {
        self.len() - 1
    }

    /// Canonical descriptor: per part, `None` for the empty ideal or
    /// `(bucket, subset of bucket positions)` for the bucket holding the
    /// maximal elements.
    pub fn descriptor(&self, idx: usize) -> Vec<Option<(usize, u64)>> {
        self.shape
            .parts
            .iter()
            .enumerate()
            .map(|(p, ps)| {
                let s = self.shape.local(idx, p);
                (s != 0).then(|| (ps.top_bucket[s] as usize, ps.top_subset[s]))
            })
            .collect()
    }

    pub fn node_at(&self, part: usize, bucket: usize, position: usize) -> usize {
        self.bucket_nodes[part][bucket][position]
    }

    /// Covers `I \ {v} ⋖ I` for maximal elements `v` of ideal `idx`.
    pub fn covers(&self, idx: usize) -> Vec<Cover> {
        let mut out = Vec::new();
        self.shape.for_each_cover(idx, |p, i, t, _, lower| {
            out.push(Cover {
                node: self.node_at(p, i, t),
                lower,
                upper: idx,
            })
        });
        out
    }

    /// Covers `I ⋖ I ∪ {v}` for minimal elements `v` of the complement.
    pub fn extensions(&self, idx: usize) -> Vec<Cover> {
        let mut out = Vec::new();
        self.shape.for_each_extension(idx, |p, i, t, _, upper| {
            out.push(Cover {
                node: self.node_at(p, i, t),
                lower: idx,
                upper,
            })
        });
        out
    }

    /// All ideals `I` not containing `v` for which `I ∪ {v}` is an ideal.
    pub fn placements(&self, v: usize) -> Vec<Cover> {
        (0..self.len())
            .flat_map(|idx| self.extensions(idx))
            .filter(|c| c.node == v)
            .collect()
    }

    /// Index of the ideal with the given node set, if it is an ideal.
    pub fn index_of(&self, mask: NodeSet) -> Option<usize> {
        // masks are sorted along a linear extension, not numerically
        self.masks.iter().position(|&m| m == mask)
    }

    pub fn full_mask(&self) -> NodeSet {
        full_set(self.order.n())
    }
}
