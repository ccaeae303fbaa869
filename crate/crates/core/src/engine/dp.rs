//! Forward-backward dynamic programming over the ideals of a parallel
//! bucket order.
//!
//! Writing `a_v(J) = sum_{S ⊆ J, |S| <= k} w_v(S)`, the forward value
//! `g(I)` sums over all ways to build `I` one node at a time along a linear
//! extension, multiplying `a_v` of the set already placed when `v` is added;
//! `h(I)` does the same from `I` up to the full set. `g(N)` is therefore the
//! sum over linear extensions `L ⊇ P` and DAGs `A ⊆ L` of `prod_v w_v(A_v)`.
//!
//! `a_v` is only ever needed at *placements* of `v`: ideals `J` with
//! `v ∉ J` and `J ∪ {v}` an ideal. If `v` sits at position `t` of bucket
//! `B_i` in part `p`, a placement is determined by the subset of `B_i \ {v}`
//! already present (`b_i - 1` bits, position `t` squeezed out) and by the
//! states of the other parts. Tables are indexed as
//! `squeezed_subset | others << (b_i - 1)`.

use std::sync::Arc;

use rayon::prelude::*;

use crate::data::ScoreTable;
use crate::poset::{full_set, members, LatticeShape, NodeSet, ParallelBucketOrder, Slot};
use crate::scalar::{ln_add_exp, LogSum, Real};

/// Optional per-node predicate on parent sets; entries failing it are
/// dropped, i.e. their weight is multiplied by zero.
pub(crate) type Filter<'a> = Option<&'a (dyn Fn(usize, u64) -> bool + Sync)>;

/// Below this many score entries the per-node loops stay sequential.
const PARALLEL_ENTRIES: usize = 1 << 16;

#[inline]
pub(crate) fn squeeze(mask: u64, t: usize) -> u64 {
    (mask & ((1 << t) - 1)) | ((mask >> (t + 1)) << t)
}

#[inline]
pub(crate) fn unsqueeze(mask: u64, t: usize) -> u64 {
    (mask & ((1 << t) - 1)) | ((mask >> t) << (t + 1))
}

/// An order laid over its lattice shape.
pub(crate) struct Frame {
    pub shape: Arc<LatticeShape>,
    pub n: usize,
    pub nodes: Vec<Vec<Vec<usize>>>,
    pub slots: Vec<Slot>,
    pub buckets: Vec<Vec<NodeSet>>,
    /// Union of the buckets before bucket `i` of part `p`.
    pub prefixes: Vec<Vec<NodeSet>>,
    /// Node set of each local state, only for multi-part orders.
    local_masks: Option<Vec<Vec<NodeSet>>>,
}

impl Frame {
    pub fn new(order: &ParallelBucketOrder, shape: Arc<LatticeShape>) -> Self {
        debug_assert_eq!(shape.part_count(), order.part_count());
        let buckets: Vec<Vec<NodeSet>> = order.parts().to_vec();
        let nodes = buckets
            .iter()
            .map(|part| part.iter().map(|&b| members(b).collect()).collect())
            .collect();
        let prefixes: Vec<Vec<NodeSet>> = buckets
            .iter()
            .map(|part| {
                let mut acc = 0;
                part.iter()
                    .map(|&b| {
                        let before = acc;
                        acc |= b;
                        before
                    })
                    .collect()
            })
            .collect();
        let local_masks = (order.part_count() > 1).then(|| {
            shape
                .parts
                .iter()
                .enumerate()
                .map(|(p, ps)| {
                    (0..ps.states)
                        .map(|s| {
                            if s == 0 {
                                return 0;
                            }
                            let i = ps.top_bucket[s] as usize;
                            let nodes: Vec<usize> = members(buckets[p][i]).collect();
                            members(ps.top_subset[s])
                                .fold(prefixes[p][i], |m, t| m | 1 << nodes[t])
                        })
                        .collect()
                })
                .collect()
        });
        Self {
            n: order.n(),
            slots: order.slots(),
            shape,
            nodes,
            buckets,
            prefixes,
            local_masks,
        }
    }

    pub fn single_part(&self) -> bool {
        self.local_masks.is_none()
    }

    /// Bits of the squeezed bucket subset for node `v`.
    pub fn dim(&self, v: usize) -> usize {
        let s = self.slots[v];
        self.shape.parts[s.part].sizes[s.bucket] - 1
    }

    pub fn table_len(&self, v: usize) -> usize {
        (1 << self.dim(v)) * self.shape.others_len(self.slots[v].part)
    }

    /// Nodes of buckets after `v`'s bucket in its part, plus (single part)
    /// nothing else: these can never be parents of `v` under the order.
    pub fn later(&self, v: usize) -> NodeSet {
        let s = self.slots[v];
        let part: NodeSet = self.buckets[s.part].iter().fold(0, |a, b| a | b);
        part & !self.prefixes[s.part][s.bucket] & !self.buckets[s.part][s.bucket]
    }

    pub fn ideal_mask(&self, idx: usize) -> NodeSet {
        match &self.local_masks {
            Some(lm) => (0..lm.len()).fold(0, |m, p| m | lm[p][self.shape.local(idx, p)]),
            None => {
                let ps = &self.shape.parts[0];
                if idx == 0 {
                    return 0;
                }
                let i = ps.top_bucket[idx] as usize;
                members(ps.top_subset[idx]).fold(self.prefixes[0][i], |m, t| m | 1 << self.nodes[0][i][t])
            }
        }
    }

    /// Ideal index of placement `pi` of node `v`.
    pub fn placement_ideal(&self, v: usize, pi: usize) -> usize {
        let Slot {
            part,
            bucket,
            position,
        } = self.slots[v];
        let d = self.dim(v);
        let squeezed = (pi & ((1 << d) - 1)) as u64;
        let others = pi >> d;
        let ps = &self.shape.parts[part];
        let local = ps.bases[bucket] + unsqueeze(squeezed, position) as usize;
        let stride = self.shape.strides[part];
        (others / stride) * stride * ps.states + local * stride + others % stride
    }

    /// Placement index of ideal `idx` for node `v`, if `idx` is one.
    pub fn placement_of(&self, v: usize, idx: usize) -> Option<usize> {
        let s = self.slots[v];
        let ps = &self.shape.parts[s.part];
        let local = self.shape.local(idx, s.part);
        if ps.next_bucket[local] != s.bucket as u32 || ps.next_subset[local] >> s.position & 1 == 1 {
            return None;
        }
        let c = squeeze(ps.next_subset[local], s.position) as usize;
        Some(c | self.shape.others(idx, s.part) << self.dim(v))
    }

    /// The other members of `v`'s bucket.
    pub fn bucket_peers(&self, v: usize) -> NodeSet {
        let s = self.slots[v];
        self.buckets[s.part][s.bucket] & !(1 << v)
    }

    /// Bit of each node of `v`'s bucket in the squeezed subset index, zero
    /// for every other node.
    fn squeezed_bits(&self, v: usize) -> Vec<usize> {
        let s = self.slots[v];
        let mut bits = vec![0; self.n];
        for (pos, &u) in self.nodes[s.part][s.bucket].iter().enumerate() {
            if u != v {
                bits[u] = 1 << (pos - usize::from(pos > s.position));
            }
        }
        bits
    }
}

/// Squeezed subset of `set ∩ B_i` for one node, looked up a byte of the
/// node mask at a time.
struct BucketIndex {
    /// Byte offset and table, only for bytes holding bucket members.
    tables: Vec<(u32, [usize; 256])>,
}

impl BucketIndex {
    /// Index for the bucket members other than `v`, `peers`.
    fn from_peers(peers: NodeSet) -> Self {
        let mut bits = vec![0; 64];
        for (i, u) in members(peers).enumerate() {
            bits[u] = 1 << i;
        }
        Self::new(&bits)
    }

    /// `bits` as from [`Frame::squeezed_bits`].
    fn new(bits: &[usize]) -> Self {
        let tables = bits
            .chunks(8)
            .enumerate()
            .filter(|(_, chunk)| chunk.iter().any(|&b| b != 0))
            .map(|(j, chunk)| {
                let mut t = [0usize; 256];
                for x in 1..256usize {
                    let low = x.trailing_zeros() as usize;
                    t[x] = t[x & (x - 1)] | chunk.get(low).copied().unwrap_or(0);
                }
                (8 * j as u32, t)
            })
            .collect();
        Self { tables }
    }

    #[inline]
    fn of(&self, set: NodeSet) -> usize {
        self.tables
            .iter()
            .fold(0, |c, (shift, t)| c | t[(set >> shift) as usize & 0xff])
    }
}

fn subset_zeta_by<T: Copy>(table: &mut [T], add: impl Fn(T, T) -> T) {
    let len = table.len();
    let mut bit = 1;
    while bit < len {
        for mask in 0..len {
            if mask & bit != 0 {
                table[mask] = add(table[mask], table[mask ^ bit]);
            }
        }
        bit <<= 1;
    }
}

fn subset_zeta<T: Real>(table: &mut [T]) {
    subset_zeta_by(table, ln_add_exp);
}

fn superset_zeta<T: Real>(table: &mut [T]) {
    let len = table.len();
    let mut bit = 1;
    while bit < len {
        for mask in 0..len {
            if mask & bit == 0 {
                table[mask] = ln_add_exp(table[mask], table[mask | bit]);
            }
        }
        bit <<= 1;
    }
}

/// Linear weights of the kept parent sets disjoint from `later`, summed by
/// their squeezed trace on `peers`, the rest of `v`'s bucket. Bucket
/// positions follow node labels, so the trace is a bit extract.
fn bin_sums<T: Real>(
    sets: &[u64],
    linear: &[T],
    later: NodeSet,
    keep: &impl Fn(u64) -> bool,
    peers: NodeSet,
    len: usize,
) -> Vec<T> {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("bmi2") {
        // SAFETY: the CPU supports BMI2
        return unsafe { bin_sums_pext(sets, linear, later, keep, peers, len) };
    }
    let index = BucketIndex::from_peers(peers);
    bin_sums_by(sets, linear, later, keep, len, |s| index.of(s))
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "bmi2")]
fn bin_sums_pext<T: Real>(
    sets: &[u64],
    linear: &[T],
    later: NodeSet,
    keep: &impl Fn(u64) -> bool,
    peers: NodeSet,
    len: usize,
) -> Vec<T> {
    bin_sums_by(sets, linear, later, keep, len, |s| std::arch::x86_64::_pext_u64(s, peers) as usize)
}

#[inline(always)]
fn bin_sums_by<T: Real>(
    sets: &[u64],
    linear: &[T],
    later: NodeSet,
    keep: &impl Fn(u64) -> bool,
    len: usize,
    bin: impl Fn(u64) -> usize,
) -> Vec<T> {
    let mut sums = vec![T::zero(); len];
    for (&s, &x) in sets.iter().zip(linear) {
        if s & later != 0 || !keep(s) {
            continue;
        }
        let c = bin(s);
        sums[c] = sums[c] + x;
    }
    sums
}

/// `ln a_v` at every placement of `v`.
pub(crate) fn node_alpha<T: Real>(
    scores: &ScoreTable<T>,
    frame: &Frame,
    v: usize,
    filter: Filter,
) -> Vec<T> {
    let keep = |s: u64| filter.is_none_or(|f| f(v, s));
    if frame.single_part() {
        // Assign each parent set to the placements it fits: sets touching a
        // later bucket never fit, sets inside the prefix fit everywhere, the
        // rest fit from their trace on v's bucket upwards.
        let later = frame.later(v);
        let len = 1 << frame.dim(v);
        let (linear, peak) = scores.linear_weights(v);
        let mut sums = bin_sums(scores.sets(v), linear, later, &keep, frame.bucket_peers(v), len);
        subset_zeta_by(&mut sums, |a, b| a + b);
        // every value far enough above underflow is accurate; otherwise
        // redo the node in log space
        let floor = T::min_positive_value().sqrt();
        if sums.iter().all(|&x| x >= floor) {
            return sums.into_iter().map(|x| x.ln() + peak).collect();
        }
        let index = BucketIndex::new(&frame.squeezed_bits(v));
        let mut acc = vec![LogSum::new(); len];
        for (s, w) in scores.entries(v) {
            if s & later != 0 || !keep(s) {
                continue;
            }
            acc[index.of(s)].add(w);
        }
        let mut table: Vec<T> = acc.iter().map(LogSum::value).collect();
        subset_zeta(&mut table);
        table
    } else {
        let entries: Vec<(u64, T)> = scores.entries(v).filter(|&(s, _)| keep(s)).collect();
        (0..frame.table_len(v))
            .map(|pi| {
                let mask = frame.ideal_mask(frame.placement_ideal(v, pi));
                let mut acc = LogSum::new();
                for &(s, w) in &entries {
                    if s & !mask == 0 {
                        acc.add(w);
                    }
                }
                acc.value()
            })
            .collect()
    }
}

pub(crate) fn heavy<T: Real>(scores: &ScoreTable<T>, frame: &Frame) -> bool {
    scores.len() + frame.shape.len() * frame.n >= PARALLEL_ENTRIES
}

pub(crate) fn all_alpha<T: Real>(
    scores: &ScoreTable<T>,
    frame: &Frame,
    filter: Filter,
) -> Vec<Arc<[T]>> {
    let one = |v| Arc::from(node_alpha(scores, frame, v, filter));
    if heavy(scores, frame) {
        (0..frame.n).into_par_iter().map(one).collect()
    } else {
        (0..frame.n).map(one).collect()
    }
}

/// `ln g` for every ideal.
pub(crate) fn forward<T: Real>(frame: &Frame, alpha: &[Arc<[T]>]) -> Vec<T> {
    let shape = &*frame.shape;
    let mut g = vec![T::neg_infinity(); shape.len()];
    g[0] = T::zero();
    for idx in 1..shape.len() {
        let mut acc = LogSum::new();
        shape.for_each_cover(idx, |p, i, t, rest, lower| {
            let v = frame.nodes[p][i][t];
            let d = shape.parts[p].sizes[i] - 1;
            let pi = squeeze(rest, t) as usize | shape.others(idx, p) << d;
            acc.add(g[lower] + alpha[v][pi]);
        });
        g[idx] = acc.value();
    }
    g
}

/// `ln h` for every ideal.
pub(crate) fn backward<T: Real>(frame: &Frame, alpha: &[Arc<[T]>]) -> Vec<T> {
    let shape = &*frame.shape;
    let len = shape.len();
    let mut h = vec![T::neg_infinity(); len];
    h[len - 1] = T::zero();
    for idx in (0..len - 1).rev() {
        let mut acc = LogSum::new();
        shape.for_each_extension(idx, |p, i, t, present, upper| {
            let v = frame.nodes[p][i][t];
            let d = shape.parts[p].sizes[i] - 1;
            let pi = squeeze(present, t) as usize | shape.others(idx, p) << d;
            acc.add(alpha[v][pi] + h[upper]);
        });
        h[idx] = acc.value();
    }
    h
}

/// `ln` of the summed weight of all (extension, DAG) pairs in which `u` is
/// a parent of `v`, for every `u`.
pub(crate) fn arc_numerators<T: Real>(
    scores: &ScoreTable<T>,
    frame: &Frame,
    g: &[T],
    h: &[T],
    v: usize,
) -> Vec<T> {
    let mut num = vec![LogSum::new(); frame.n];
    let Slot { part, position, .. } = frame.slots[v];
    let step = (1usize << position) * frame.shape.strides[part];
    let len = frame.table_len(v);
    // m(J) = g(J) h(J ∪ {v}) at each placement J
    let mut through: Vec<T> = (0..len)
        .map(|pi| {
            let j = frame.placement_ideal(v, pi);
            g[j] + h[j + step]
        })
        .collect();
    if frame.single_part() {
        superset_zeta(&mut through);
        let later = frame.later(v);
        let index = BucketIndex::new(&frame.squeezed_bits(v));
        for (s, w) in scores.entries(v) {
            if s == 0 || s & later != 0 {
                continue;
            }
            let val = w + through[index.of(s)];
            for u in members(s) {
                num[u].add(val);
            }
        }
    } else {
        let entries: Vec<(u64, T)> = scores.entries(v).filter(|&(s, _)| s != 0).collect();
        for (pi, &m) in through.iter().enumerate() {
            let mask = frame.ideal_mask(frame.placement_ideal(v, pi));
            for &(s, w) in &entries {
                if s & !mask == 0 {
                    let val = w + m;
                    for u in members(s) {
                        num[u].add(val);
                    }
                }
            }
        }
    }
    num.iter().map(LogSum::value).collect()
}

/// `ln a_v(I)` straight from the definition, for any node set `I`.
pub fn direct_log_alpha<T: Real>(scores: &ScoreTable<T>, v: usize, set: NodeSet) -> T {
    let allowed = set & !(1 << v) & full_set(scores.n());
    let mut acc = LogSum::new();
    for (s, w) in scores.entries(v) {
        if s & !allowed == 0 {
            acc.add(w);
        }
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squeeze_inverts_unsqueeze() {
        for t in 0..6 {
            for c in 0..32u64 {
                assert_eq!(squeeze(unsqueeze(c, t), t), c);
                assert_eq!(unsqueeze(c, t) >> t & 1, 0);
            }
        }
    }

    #[test]
    fn bucket_index_extracts_peer_bits() {
        let peers: NodeSet = 0b1011_0100_0000_0000_0000_0000_0000_0000_0000_1001_0010;
        let index = BucketIndex::from_peers(peers);
        let nodes: Vec<usize> = members(peers).collect();
        for s in [0u64, peers, 0b10, 0b1_0000_0010, 1 << 40 | 1 << 43 | 1, u64::MAX] {
            let expect = nodes.iter().enumerate().fold(0, |c, (i, &u)| c | ((s >> u & 1) as usize) << i);
            assert_eq!(index.of(s), expect, "{s:#x}");
        }
    }

    #[test]
    fn zeta_transforms() {
        let lin = [1.0f64, 2.0, 3.0, 4.0];
        let mut t: Vec<f64> = lin.iter().map(|x| x.ln()).collect();
        subset_zeta(&mut t);
        let expect = [1.0, 3.0, 4.0, 10.0];
        for (a, b) in t.iter().zip(expect) {
            assert!((a.exp() - b).abs() < 1e-12);
        }
        let mut t: Vec<f64> = lin.iter().map(|x| x.ln()).collect();
        superset_zeta(&mut t);
        let expect = [10.0, 6.0, 7.0, 4.0];
        for (a, b) in t.iter().zip(expect) {
            assert!((a.exp() - b).abs() < 1e-12);
        }
    }
}
