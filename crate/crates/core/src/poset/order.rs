use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Bitmask of node indices.
pub type NodeSet = u64;

pub(crate) fn members(set: NodeSet) -> impl Iterator<Item = usize> {
    let mut s = set;
    std::iter::from_fn(move || {
        if s == 0 {
            None
        } else {
            let v = s.trailing_zeros() as usize;
            s &= s - 1;
            Some(v)
        }
    })
}

/// Disjoint bucket orders on a partition of `{0, .., n-1}`.
///
/// Each part is a sequence of buckets; every node of an earlier bucket
/// precedes every node of a later bucket of the same part, nodes within a
/// bucket and nodes of different parts are incomparable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParallelBucketOrder {
    n: usize,
    parts: Vec<Vec<NodeSet>>,
}

/// Location of a node inside an order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Slot {
    pub part: usize,
    pub bucket: usize,
    /// Rank of the node among its bucket's members (ascending node index).
    pub position: usize,
}

/// A flip proposal: exchange `u` and `v`, in distinct buckets of `part`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Flip {
    pub part: usize,
    pub u: usize,
    pub v: usize,
}

impl ParallelBucketOrder {
    pub fn from_parts(n: usize, parts: Vec<Vec<NodeSet>>) -> Result<Self> {
        if n == 0 || n > 64 {
            return Err(Error::InvalidOrder(format!("node count {n} not in 1..=64")));
        }
        let mut seen: NodeSet = 0;
        for part in &parts {
            if part.is_empty() {
                return Err(Error::InvalidOrder("empty part".into()));
            }
            for &b in part {
                if b == 0 {
                    return Err(Error::InvalidOrder("empty bucket".into()));
                }
                if b & seen != 0 {
                    return Err(Error::InvalidOrder("buckets overlap".into()));
                }
                seen |= b;
            }
        }
        if parts.is_empty() || seen != full_set(n) {
            return Err(Error::InvalidOrder(format!(
                "buckets do not cover exactly the nodes 0..{n}"
            )));
        }
        Ok(Self { n, parts })
    }

    /// Linear order given by a permutation, one node per bucket.
    pub fn chain(order: &[usize]) -> Result<Self> {
        make_order(order.len(), 1, 1, order)
    }

    pub fn single_bucket(n: usize) -> Result<Self> {
        Self::from_parts(n, vec![vec![full_set(n)]])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn parts(&self) -> &[Vec<NodeSet>] {
        &self.parts
    }

    pub fn part_count(&self) -> usize {
        self.parts.len()
    }

    pub fn buckets(&self, part: usize) -> &[NodeSet] {
        &self.parts[part]
    }

    /// Bucket sizes per part.
    pub fn type_signature(&self) -> Vec<Vec<usize>> {
        self.parts
            .iter()
            .map(|p| p.iter().map(|b| b.count_ones() as usize).collect())
            .collect()
    }

    pub fn part_set(&self, part: usize) -> NodeSet {
        self.parts[part].iter().fold(0, |a, b| a | b)
    }

    pub fn slot(&self, v: usize) -> Slot {
        for (p, part) in self.parts.iter().enumerate() {
            for (i, &b) in part.iter().enumerate() {
                if b >> v & 1 == 1 {
                    let position = (b & ((1u64 << v) - 1)).count_ones() as usize;
                    return Slot {
                        part: p,
                        bucket: i,
                        position,
                    };
                }
            }
        }
        panic!("node {v} not in order");
    }

    /// Slot of every node, indexed by node.
    pub fn slots(&self) -> Vec<Slot> {
        let mut out = vec![
            Slot {
                part: 0,
                bucket: 0,
                position: 0
            };
            self.n
        ];
        for (p, part) in self.parts.iter().enumerate() {
            for (i, &b) in part.iter().enumerate() {
                for (t, v) in members(b).enumerate() {
                    out[v] = Slot {
                        part: p,
                        bucket: i,
                        position: t,
                    };
                }
            }
        }
        out
    }

    /// Nodes that must precede `v`.
    pub fn predecessors(&self, v: usize) -> NodeSet {
        let s = self.slot(v);
        self.parts[s.part][..s.bucket].iter().fold(0, |a, b| a | b)
    }

    /// True when `u` precedes `v` (strictly).
    pub fn precedes(&self, u: usize, v: usize) -> bool {
        self.predecessors(v) >> u & 1 == 1
    }

    /// True if no flip move exists.
    pub fn is_single_bucket_per_part(&self) -> bool {
        self.parts.iter().all(|p| p.len() == 1)
    }

    /// Ideal count `prod_parts (sum_i 2^{b_i} - l + 1)`, saturating.
    pub fn count_ideals(&self) -> u128 {
        self.type_signature()
            .iter()
            .map(|sizes| {
                sizes
                    .iter()
                    .map(|&b| if b >= 127 { u128::MAX } else { (1u128 << b) - 1 })
                    .fold(1u128, u128::saturating_add)
            })
            .fold(1u128, u128::saturating_mul)
    }

    /// Reordering count: product over parts of the multinomial
    /// `(b_1 + .. + b_l)! / (b_1! .. b_l!)`.
    pub fn count_reorderings(&self) -> BigUint {
        let mut total = BigUint::from(1u32);
        for sizes in self.type_signature() {
            let mut placed = 0u64;
            for b in sizes {
                // multiply by C(placed + b, b), built incrementally
                for j in 1..=b as u64 {
                    total *= placed + j;
                    total /= j;
                }
                placed += b as u64;
            }
        }
        total
    }

    /// Exchanges `u` and `v` between their buckets in `part`.
    ///
    /// Accepts the pair in either bucket order, so applying the same flip
    /// twice restores the original order.
    pub fn apply_flip(&self, flip: Flip) -> Result<Self> {
        let Flip { part, u, v } = flip;
        if part >= self.parts.len() || u >= self.n || v >= self.n {
            return Err(Error::InvalidFlip(format!("{flip:?} out of range")));
        }
        let find = |x: usize| self.parts[part].iter().position(|b| b >> x & 1 == 1);
        let (bu, bv) = match (find(u), find(v)) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::InvalidFlip(format!(
                    "nodes {u} and {v} are not both in part {part}"
                )))
            }
        };
        if bu == bv {
            return Err(Error::InvalidFlip(format!(
                "nodes {u} and {v} share bucket {bu}"
            )));
        }
        let mut out = self.clone();
        let swap = (1u64 << u) | (1u64 << v);
        out.parts[part][bu] ^= swap;
        out.parts[part][bv] ^= swap;
        Ok(out)
    }

    /// Uniformly random reordering: each part's nodes are shuffled and
    /// refilled into buckets of the same sizes.
    pub fn random_reordering<R: Rng + ?Sized>(&self, rng: &mut R) -> Self {
        let mut out = self.clone();
        for part in out.parts.iter_mut() {
            let mut nodes: Vec<usize> = part.iter().flat_map(|&b| members(b)).collect();
            nodes.sort_unstable();
            nodes.shuffle(rng);
            let mut it = nodes.into_iter();
            for b in part.iter_mut() {
                let size = b.count_ones() as usize;
                *b = it.by_ref().take(size).fold(0, |m, x| m | 1 << x);
            }
        }
        out
    }

    pub fn random_reordering_seeded(&self, seed: u64) -> Self {
        self.random_reordering(&mut ChaCha8Rng::seed_from_u64(seed))
    }

    /// Every reordering, each exactly once. Exponential; for small inputs.
    pub fn reorderings(&self) -> Vec<Self> {
        let per_part: Vec<Vec<Vec<NodeSet>>> = self
            .parts
            .iter()
            .map(|part| {
                let sizes: Vec<usize> = part.iter().map(|b| b.count_ones() as usize).collect();
                let all = part.iter().fold(0, |a, b| a | b);
                let mut out = Vec::new();
                fill_buckets(all, &sizes, &mut Vec::new(), &mut out);
                out
            })
            .collect();
        let mut result = vec![Vec::new()];
        for options in per_part {
            let mut next = Vec::with_capacity(result.len() * options.len());
            for prefix in &result {
                for opt in &options {
                    let mut p: Vec<Vec<NodeSet>> = prefix.clone();
                    p.push(opt.clone());
                    next.push(p);
                }
            }
            result = next;
        }
        result
            .into_iter()
            .map(|parts| Self { n: self.n, parts })
            .collect()
    }
}

/// Assigns the nodes of `remaining` to buckets of the given sizes in every
/// possible way.
fn fill_buckets(
    remaining: NodeSet,
    sizes: &[usize],
    acc: &mut Vec<NodeSet>,
    out: &mut Vec<Vec<NodeSet>>,
) {
    let Some((&size, rest)) = sizes.split_first() else {
        out.push(acc.clone());
        return;
    };
    let nodes: Vec<usize> = members(remaining).collect();
    for_each_combination(&nodes, size, &mut |subset| {
        acc.push(subset);
        fill_buckets(remaining & !subset, rest, acc, out);
        acc.pop();
    });
}

fn for_each_combination(nodes: &[usize], size: usize, f: &mut impl FnMut(NodeSet)) {
    fn go(nodes: &[usize], start: usize, left: usize, mask: NodeSet, f: &mut impl FnMut(NodeSet)) {
        if left == 0 {
            f(mask);
            return;
        }
        for i in start..=nodes.len() - left {
            go(nodes, i + 1, left - 1, mask | 1 << nodes[i], f);
        }
    }
    if size <= nodes.len() {
        go(nodes, 0, size, 0, f);
    }
}

pub(crate) fn full_set(n: usize) -> NodeSet {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Distributes `assignment` (a permutation of the nodes) over `r` parts of
/// `ceil(n/r)` or `floor(n/r)` nodes, each cut into buckets of `b` nodes with
/// a smaller last bucket when `b` does not divide the part size.
pub fn make_order(n: usize, b: usize, r: usize, assignment: &[usize]) -> Result<ParallelBucketOrder> {
    if n == 0 || n > 64 {
        return Err(Error::InvalidOrder(format!("node count {n} not in 1..=64")));
    }
    if b == 0 || b > n {
        return Err(Error::InvalidOrder(format!("bucket size {b} not in 1..={n}")));
    }
    if r == 0 || r > n {
        return Err(Error::InvalidOrder(format!(
            "{r} parts leave an empty part for {n} nodes"
        )));
    }
    let mut seen = 0u64;
    if assignment.len() != n
        || assignment.iter().any(|&v| {
            let dup = v >= n || seen >> v & 1 == 1;
            if v < n {
                seen |= 1 << v;
            }
            dup
        })
    {
        return Err(Error::InvalidOrder("assignment is not a permutation".into()));
    }
    let mut parts = Vec::with_capacity(r);
    let mut rest = assignment;
    for p in 0..r {
        let size = n / r + usize::from(p < n % r);
        let (mine, tail) = rest.split_at(size);
        rest = tail;
        parts.push(
            mine.chunks(b)
                .map(|c| c.iter().fold(0u64, |m, &v| m | 1 << v))
                .collect(),
        );
    }
    ParallelBucketOrder::from_parts(n, parts)
}

/// `make_order` with a uniformly random assignment.
pub fn make_order_seeded(n: usize, b: usize, r: usize, seed: u64) -> Result<ParallelBucketOrder> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    make_order(n, b, r, &perm)
}

/// Descriptor text: parts joined by `;`, buckets by `|`, nodes by `,`.
impl fmt::Display for ParallelBucketOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (p, part) in self.parts.iter().enumerate() {
            if p > 0 {
                f.write_str(";")?;
            }
            for (i, &b) in part.iter().enumerate() {
                if i > 0 {
                    f.write_str("|")?;
                }
                for (j, v) in members(b).enumerate() {
                    if j > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v}")?;
                }
            }
        }
        Ok(())
    }
}

impl FromStr for ParallelBucketOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = Vec::new();
        let mut n = 0usize;
        for part in s.trim().split(';') {
            let mut buckets = Vec::new();
            for bucket in part.split('|') {
                let mut mask = 0u64;
                for tok in bucket.split(',') {
                    let v: usize = tok
                        .trim()
                        .parse()
                        .ok()
                        .filter(|&v| v < 64)
                        .ok_or_else(|| Error::InvalidOrder(format!("bad node {tok:?}")))?;
                    if mask >> v & 1 == 1 {
                        return Err(Error::InvalidOrder(format!("node {v} repeated")));
                    }
                    mask |= 1 << v;
                    n += 1;
                }
                buckets.push(mask);
            }
            parts.push(buckets);
        }
        Self::from_parts(n, parts)
    }
}
