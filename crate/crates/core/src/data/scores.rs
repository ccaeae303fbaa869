//! Local scores `w_v(S) = q_v(S) p(D_v | D_S)` in log form.
//!
//! The likelihood factor is the K2 marginal likelihood (unit Dirichlet
//! hyperparameters); the structure prior is `q_v(S) = 1 / C(n-1, |S|)` and
//! the order weights `rho_v` are identically one.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use statrs::function::factorial::{ln_binomial, ln_factorial};

use super::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Order-dependent factor of the order-modular prior. Only the constant
/// weight is supported, which lets the engine drop it entirely.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrderWeights {
    Unit,
}

#[derive(Clone, Debug)]
pub struct ScoreOptions {
    pub max_indegree: usize,
    /// Upper bound on the table's memory footprint.
    pub memory_cap_bytes: u128,
}

impl ScoreOptions {
    pub fn new(max_indegree: usize) -> Self {
        Self {
            max_indegree,
            memory_cap_bytes: 4 << 30,
        }
    }
}

/// Per-node log weights for every parent set of size at most `k`.
///
/// Parent sets are node bitmasks. For each node they are stored in
/// depth-first lexicographic order over the other nodes: `{}`, `{a}`,
/// `{a,b}`, `{a,b,c}`, ..., `{a,c}`, ... with `a < b < c`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreTable<T> {
    n: usize,
    k: usize,
    sets: Vec<Vec<u64>>,
    weights: Vec<Vec<T>>,
    /// `w_v(S) / peak_v` per entry, with `peak_v` the node's largest weight;
    /// lets alpha sum most bins without a log-domain step per entry.
    linear: Vec<Vec<T>>,
    peaks: Vec<T>,
    digest: Option<String>,
    rho: OrderWeights,
}

/// `sum_{j<=k} C(n-1, j)`.
pub fn parent_set_count(n: usize, k: usize) -> u128 {
    let m = n.saturating_sub(1) as u128;
    let mut total = 0u128;
    let mut c = 1u128;
    for j in 0..=k.min(n.saturating_sub(1)) as u128 {
        total += c;
        c = c * (m - j) / (j + 1);
    }
    total
}

/// All parent sets of `v` with at most `k` members, in table order.
pub fn parent_sets(n: usize, v: usize, k: usize) -> Vec<u64> {
    let others: Vec<usize> = (0..n).filter(|&u| u != v).collect();
    let mut out = Vec::with_capacity(parent_set_count(n, k) as usize);
    fn dfs(others: &[usize], start: usize, mask: u64, depth: usize, k: usize, out: &mut Vec<u64>) {
        out.push(mask);
        if depth == k {
            return;
        }
        for i in start..others.len() {
            dfs(others, i + 1, mask | (1 << others[i]), depth + 1, k, out);
        }
    }
    dfs(&others, 0, 0, 0, k, &mut out);
    out
}

/// `-ln C(n-1, size)`.
pub fn log_parent_prior(size: usize, n: usize) -> f64 {
    assert!(size < n.max(1), "parent set larger than n - 1");
    -ln_binomial(n as u64 - 1, size as u64)
}

struct LnFactorials(Vec<f64>);

impl LnFactorials {
    fn new(max: usize) -> Self {
        Self((0..=max as u64).map(ln_factorial).collect())
    }

    #[inline]
    fn get(&self, i: usize) -> f64 {
        self.0[i]
    }
}

/// Refines per-row configuration ids by one more column. Ids stay dense
/// (numbered by first appearance), so they are always below the row count.
fn refine(ids: &[u32], distinct: usize, col: &[u16], arity: usize) -> (Vec<u32>, usize) {
    let mut remap = vec![u32::MAX; distinct * arity];
    let mut next = 0u32;
    let out = ids
        .iter()
        .zip(col)
        .map(|(&id, &x)| {
            let slot = &mut remap[id as usize * arity + x as usize];
            if *slot == u32::MAX {
                *slot = next;
                next += 1;
            }
            *slot
        })
        .collect();
    (out, next as usize)
}

/// `ln prod_j (r-1)!/(N_j + r - 1)! prod_c N_jc!` over observed configurations.
fn k2_from_ids(
    ids: &[u32],
    distinct: usize,
    col: &[u16],
    arity: usize,
    lnf: &LnFactorials,
    counts: &mut Vec<u32>,
) -> f64 {
    counts.clear();
    counts.resize(distinct * arity, 0);
    for (&id, &x) in ids.iter().zip(col) {
        counts[id as usize * arity + x as usize] += 1;
    }
    let mut score = 0.0;
    for cell in counts.chunks_exact(arity) {
        let total: u32 = cell.iter().sum();
        score += lnf.get(arity - 1) - lnf.get(total as usize + arity - 1);
        for &c in cell {
            score += lnf.get(c as usize);
        }
    }
    score
}

/// K2 log marginal likelihood of column `v` given parent set `parents`.
pub fn log_local_score(v: usize, parents: u64, data: &Dataset) -> f64 {
    assert!(parents & (1 << v) == 0, "node cannot be its own parent");
    let m = data.m();
    let max_arity = data.arities().into_iter().max().unwrap_or(1);
    let lnf = LnFactorials::new(m + max_arity);
    let mut ids = vec![0u32; m];
    let mut distinct = usize::from(m > 0);
    for u in (0..data.n()).filter(|&u| parents >> u & 1 == 1) {
        (ids, distinct) = refine(&ids, distinct, data.column(u), data.arity(u));
    }
    k2_from_ids(&ids, distinct, data.column(v), data.arity(v), &lnf, &mut Vec::new())
}

fn node_scores(data: &Dataset, v: usize, k: usize, lnf: &LnFactorials) -> (Vec<u64>, Vec<f64>) {
    let n = data.n();
    let others: Vec<usize> = (0..n).filter(|&u| u != v).collect();
    let prior: Vec<f64> = (0..=k.min(n - 1)).map(|s| log_parent_prior(s, n)).collect();
    let mut sets = Vec::new();
    let mut weights = Vec::new();
    let mut counts = Vec::new();

    struct Walk<'a> {
        data: &'a Dataset,
        v: usize,
        k: usize,
        others: &'a [usize],
        prior: &'a [f64],
        lnf: &'a LnFactorials,
    }
    fn dfs(
        w: &Walk,
        start: usize,
        mask: u64,
        depth: usize,
        ids: &[u32],
        distinct: usize,
        sets: &mut Vec<u64>,
        weights: &mut Vec<f64>,
        counts: &mut Vec<u32>,
    ) {
        let col = w.data.column(w.v);
        let ll = k2_from_ids(ids, distinct, col, w.data.arity(w.v), w.lnf, counts);
        sets.push(mask);
        weights.push(ll + w.prior[depth]);
        if depth == w.k {
            return;
        }
        for i in start..w.others.len() {
            let u = w.others[i];
            let (next, nd) = refine(ids, distinct, w.data.column(u), w.data.arity(u));
            dfs(w, i + 1, mask | 1 << u, depth + 1, &next, nd, sets, weights, counts);
        }
    }

    let walk = Walk {
        data,
        v,
        k,
        others: &others,
        prior: &prior,
        lnf,
    };
    let ids = vec![0u32; data.m()];
    dfs(
        &walk,
        0,
        0,
        0,
        &ids,
        usize::from(data.m() > 0),
        &mut sets,
        &mut weights,
        &mut counts,
    );
    (sets, weights)
}

/// Precomputes `ln w_v(S)` for all nodes and parent sets with `|S| <= k`.
pub fn build_score_table<T: Real>(data: &Dataset, opts: &ScoreOptions) -> Result<ScoreTable<T>> {
    let n = data.n();
    if n == 0 {
        return Err(Error::Config("dataset has no variables".into()));
    }
    if n > 64 {
        return Err(Error::Config(format!("{n} variables; at most 64 are supported")));
    }
    let k = opts.max_indegree;
    if k > n - 1 {
        return Err(Error::Config(format!(
            "max indegree {k} exceeds n - 1 = {}",
            n - 1
        )));
    }
    let per_node = parent_set_count(n, k);
    let bytes = per_node * n as u128 * (8 + 2 * std::mem::size_of::<T>() as u128);
    if bytes > opts.memory_cap_bytes {
        return Err(Error::CapExceeded {
            what: "score table (bytes)",
            required: bytes,
            cap: opts.memory_cap_bytes,
        });
    }
    let max_arity = data.arities().into_iter().max().unwrap_or(1);
    let lnf = LnFactorials::new(data.m() + max_arity);
    let per: Vec<(Vec<u64>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|v| node_scores(data, v, k, &lnf))
        .collect();
    let (sets, weights) = per
        .into_iter()
        .map(|(s, w)| (s, w.into_iter().map(T::of).collect()))
        .unzip();
    Ok(ScoreTable::assemble(n, k, sets, weights, Some(data.digest()), OrderWeights::Unit))
}

impl<T: Real> ScoreTable<T> {
    fn assemble(
        n: usize,
        k: usize,
        sets: Vec<Vec<u64>>,
        weights: Vec<Vec<T>>,
        digest: Option<String>,
        rho: OrderWeights,
    ) -> Self {
        let peaks: Vec<T> = weights
            .iter()
            .map(|w| w.iter().copied().fold(T::neg_infinity(), T::max))
            .collect();
        let linear = weights
            .iter()
            .zip(&peaks)
            .map(|(w, &p)| w.iter().map(|&x| (x - p).exp()).collect())
            .collect();
        Self {
            n,
            k,
            sets,
            weights,
            linear,
            peaks,
            digest,
            rho,
        }
    }

    /// Table whose weights come from an arbitrary function, e.g. synthetic
    /// benchmark scores. Every value must be finite.
    pub fn from_fn(n: usize, k: usize, mut f: impl FnMut(usize, u64) -> T) -> Result<Self> {
        if n == 0 || n > 64 || k > n - 1 {
            return Err(Error::Config(format!("invalid table shape n={n} k={k}")));
        }
        let sets: Vec<Vec<u64>> = (0..n).map(|v| parent_sets(n, v, k)).collect();
        let mut weights = Vec::with_capacity(n);
        for (v, ss) in sets.iter().enumerate() {
            let w: Vec<T> = ss.iter().map(|&s| f(v, s)).collect();
            if let Some(pos) = w.iter().position(|x| !x.is_finite()) {
                return Err(Error::Config(format!(
                    "non-finite weight for node {v}, set {:#x}",
                    ss[pos]
                )));
            }
            weights.push(w);
        }
        Ok(ScoreTable::assemble(n, k, sets, weights, None, OrderWeights::Unit))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_indegree(&self) -> usize {
        self.k
    }

    pub fn order_weights(&self) -> OrderWeights {
        self.rho
    }

    pub fn digest(&self) -> Option<&str> {
        self.digest.as_deref()
    }

    pub fn sets(&self, v: usize) -> &[u64] {
        &self.sets[v]
    }

    pub fn log_weights(&self, v: usize) -> &[T] {
        &self.weights[v]
    }

    /// Weights of node `v` divided by their maximum, and that maximum in
    /// log space.
    pub(crate) fn linear_weights(&self, v: usize) -> (&[T], T) {
        (&self.linear[v], self.peaks[v])
    }

    pub fn entries(&self, v: usize) -> impl Iterator<Item = (u64, T)> + '_ {
        self.sets[v].iter().copied().zip(self.weights[v].iter().copied())
    }

    pub fn len(&self) -> usize {
        self.sets.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Linear lookup; meant for spot checks, not hot paths.
    pub fn get(&self, v: usize, set: u64) -> Option<T> {
        self.entries(v).find(|&(s, _)| s == set).map(|(_, w)| w)
    }

    /// Converts the weights to another scalar type.
    pub fn cast<U: Real>(&self) -> ScoreTable<U> {
        ScoreTable::assemble(self.n, self.k, self.sets.clone(), self
                .weights
                .iter()
                .map(|w| w.iter().map(|x| U::of(x.as_f64())).collect())
                .collect(), self.digest.clone(), self.rho)
    }

    /// Relabels nodes: node `v` of `self` becomes node `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let map = |s: u64| {
            (0..self.n)
                .filter(|&u| s >> u & 1 == 1)
                .fold(0u64, |m, u| m | 1 << perm[u])
        };
        let mut by_node: Vec<HashMap<u64, T>> = vec![HashMap::new(); self.n];
        for v in 0..self.n {
            for (s, w) in self.entries(v) {
                by_node[perm[v]].insert(map(s), w);
            }
        }
        let sets: Vec<Vec<u64>> = (0..self.n).map(|v| parent_sets(self.n, v, self.k)).collect();
        let weights = sets
            .iter()
            .enumerate()
            .map(|(v, ss)| ss.iter().map(|s| by_node[v][s]).collect())
            .collect();
        ScoreTable::assemble(self.n, self.k, sets, weights, None, self.rho)
    }

    /// Cache text: a `#` header with `n`, `k` and the dataset digest, then
    /// one `v parents log_w` line per entry with 17 significant digits.
    pub fn to_cache_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# n={} k={} digest={}",
            self.n,
            self.k,
            self.digest.as_deref().unwrap_or("-")
        );
        for v in 0..self.n {
            for (s, w) in self.entries(v) {
                let nodes: Vec<String> = (0..self.n)
                    .filter(|&u| s >> u & 1 == 1)
                    .map(|u| u.to_string())
                    .collect();
                let parents = if nodes.is_empty() {
                    "-".to_string()
                } else {
                    nodes.join(",")
                };
                let _ = writeln!(out, "{v} {parents} {:.16e}", w.as_f64());
            }
        }
        out
    }

    pub fn write_cache(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_cache_string()).map_err(|e| Error::io(path, e))
    }

    pub fn read_cache(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_cache(&text, path)
    }

    pub fn parse_cache(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| err(1, "empty score cache".into()))?;
        let header = header
            .strip_prefix('#')
            .ok_or_else(|| err(1, "missing header".into()))?;
        let (mut n, mut k, mut digest) = (None, None, None);
        for field in header.split_whitespace() {
            match field.split_once('=') {
                Some(("n", x)) => n = x.parse::<usize>().ok(),
                Some(("k", x)) => k = x.parse::<usize>().ok(),
                Some(("digest", "-")) => {}
                Some(("digest", x)) => digest = Some(x.to_string()),
                _ => return Err(err(1, format!("unknown header field {field:?}"))),
            }
        }
        let (n, k) = match (n, k) {
            (Some(n), Some(k)) if (1..=64).contains(&n) && k < n => (n, k),
            _ => return Err(err(1, "header needs valid n= and k=".into())),
        };

        let mut by_node: Vec<HashMap<u64, T>> = vec![HashMap::new(); n];
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let mut f = line.split_whitespace();
            let (v, ps, w) = match (f.next(), f.next(), f.next(), f.next()) {
                (Some(v), Some(p), Some(w), None) => (v, p, w),
                _ => return Err(err(i + 1, "expected `v parents log_w`".into())),
            };
            let v: usize = v
                .parse()
                .ok()
                .filter(|&v| v < n)
                .ok_or_else(|| err(i + 1, format!("bad node {v:?}")))?;
            let mut set = 0u64;
            if ps != "-" {
                for p in ps.split(',') {
                    let u: usize = p
                        .parse()
                        .ok()
                        .filter(|&u| u < n && u != v)
                        .ok_or_else(|| err(i + 1, format!("bad parent {p:?}")))?;
                    set |= 1 << u;
                }
            }
            let w: f64 = w
                .parse()
                .ok()
                .filter(|x: &f64| x.is_finite())
                .ok_or_else(|| err(i + 1, format!("bad weight {w:?}")))?;
            if by_node[v].insert(set, T::of(w)).is_some() {
                return Err(err(i + 1, "duplicate entry".into()));
            }
        }
        let sets: Vec<Vec<u64>> = (0..n).map(|v| parent_sets(n, v, k)).collect();
        let mut weights = Vec::with_capacity(n);
        for (v, ss) in sets.iter().enumerate() {
            if by_node[v].len() != ss.len() {
                return Err(err(
                    0,
                    format!("node {v}: {} entries, expected {}", by_node[v].len(), ss.len()),
                ));
            }
            let w = ss
                .iter()
                .map(|s| {
                    by_node[v]
                        .get(s)
                        .copied()
                        .ok_or_else(|| err(0, format!("node {v}: missing set {s:#x}")))
                })
                .collect::<Result<Vec<T>>>()?;
            weights.push(w);
        }
        Ok(ScoreTable::assemble(n, k, sets, weights, digest, OrderWeights::Unit))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn data(names: usize, rows: &[Vec<usize>], arity: &[usize]) -> Dataset {
        Dataset::from_indices((0..names).map(|i| format!("X{i}")).collect(), arity, rows).unwrap()
    }

    /// Product of sequential Dirichlet(1) predictive probabilities, row by row.
    fn sequential_oracle(v: usize, parents: &[usize], d: &Dataset) -> f64 {
        let mut seen: HashMap<(Vec<usize>, usize), usize> = HashMap::new();
        let mut seen_cfg: HashMap<Vec<usize>, usize> = HashMap::new();
        let r = d.arity(v) as f64;
        let mut acc = 0.0;
        for row in 0..d.m() {
            let cfg: Vec<usize> = parents.iter().map(|&u| d.value(row, u)).collect();
            let x = d.value(row, v);
            let n_jc = *seen.get(&(cfg.clone(), x)).unwrap_or(&0) as f64;
            let n_j = *seen_cfg.get(&cfg).unwrap_or(&0) as f64;
            acc += ((n_jc + 1.0) / (n_j + r)).ln();
            *seen.entry((cfg.clone(), x)).or_default() += 1;
            *seen_cfg.entry(cfg).or_default() += 1;
        }
        acc
    }

    #[test]
    fn k2_small_cases() {
        let d = data(1, &[vec![0], vec![1]], &[2]);
        assert!((log_local_score(0, 0, &d) - (1.0f64 / 6.0).ln()).abs() < 1e-12);
        let d = data(1, &[vec![0], vec![0]], &[2]);
        assert!((log_local_score(0, 0, &d) - (1.0f64 / 3.0).ln()).abs() < 1e-12);
        let d = data(2, &[vec![0, 0], vec![1, 1]], &[2, 2]);
        assert!((log_local_score(1, 0b1, &d) - 0.25f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn prior_values() {
        assert!((log_parent_prior(2, 22) + 210f64.ln()).abs() < 1e-12);
        assert_eq!(log_parent_prior(0, 7), 0.0);
        assert!(log_parent_prior(4, 5).abs() < 1e-12);
        // each size contributes total weight one
        for n in 1..12 {
            let total: f64 = (0..n)
                .map(|s| (ln_binomial(n as u64 - 1, s as u64) + log_parent_prior(s, n)).exp())
                .sum();
            assert!((total - n as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn entry_counts() {
        assert_eq!(parent_set_count(3, 1), 3);
        assert_eq!(parent_set_count(22, 5), 27_896);
        assert_eq!(parent_sets(22, 4, 5).len(), 27_896);
        let d = data(3, &[vec![0, 1, 0], vec![1, 1, 0]], &[2, 2, 2]);
        let t: ScoreTable<f64> = build_score_table(&d, &ScoreOptions::new(1)).unwrap();
        assert_eq!(t.len(), 9);
        for v in 0..3 {
            assert!(t.sets(v).iter().all(|s| s >> v & 1 == 0));
            assert_eq!(t.sets(v)[0], 0);
        }
    }

    #[test]
    fn table_matches_definition() {
        let rows: Vec<Vec<usize>> = (0..40).map(|i| vec![i % 2, (i / 2) % 3, (i * 7) % 2, i % 5 % 2]).collect();
        let d = data(4, &rows, &[2, 3, 2, 2]);
        let t: ScoreTable<f64> = build_score_table(&d, &ScoreOptions::new(2)).unwrap();
        for v in 0..4 {
            for (s, w) in t.entries(v) {
                let expect =
                    log_local_score(v, s, &d) + log_parent_prior(s.count_ones() as usize, 4);
                assert!((w - expect).abs() < 1e-10, "v={v} s={s:#b}");
            }
        }
        let again: ScoreTable<f64> = build_score_table(&d, &ScoreOptions::new(2)).unwrap();
        assert_eq!(t.to_cache_string(), again.to_cache_string());
    }

    #[test]
    fn table_errors() {
        let d = data(3, &[vec![0, 0, 0]], &[1, 1, 1]);
        assert!(matches!(
            build_score_table::<f64>(&d, &ScoreOptions::new(3)),
            Err(Error::Config(_))
        ));
        let opts = ScoreOptions {
            max_indegree: 2,
            memory_cap_bytes: 10,
        };
        assert!(matches!(
            build_score_table::<f64>(&d, &opts),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn cache_round_trip() {
        let rows: Vec<Vec<usize>> = (0..30).map(|i| vec![i % 3, (i / 3) % 2, i % 2]).collect();
        let d = data(3, &rows, &[3, 2, 2]);
        let t: ScoreTable<f64> = build_score_table(&d, &ScoreOptions::new(2)).unwrap();
        let text = t.to_cache_string();
        assert!(text.starts_with(&format!("# n=3 k=2 digest={}", d.digest())));
        let back = ScoreTable::<f64>::parse_cache(&text, Path::new("c")).unwrap();
        assert_eq!(back, t);
        let truncated: String = text.lines().take(4).map(|l| format!("{l}\n")).collect();
        assert!(ScoreTable::<f64>::parse_cache(&truncated, Path::new("c")).is_err());
    }

    #[test]
    fn permutation_relabels() {
        let t = ScoreTable::<f64>::from_fn(3, 2, |v, s| -(v as f64) - s as f64 * 0.1).unwrap();
        let p = t.permuted(&[2, 0, 1]);
        // node 0 with parent {1} becomes node 2 with parent {0}
        assert_eq!(p.get(2, 0b001), t.get(0, 0b010));
    }

    proptest! {
        #[test]
        fn k2_is_sequential_predictive(
            rows in prop::collection::vec(prop::collection::vec(0usize..3, 3), 1..25),
            v in 0usize..3,
            pmask in 0u64..8,
        ) {
            let pmask = pmask & !(1 << v);
            let d = data(3, &rows, &[3, 3, 3]);
            let got = log_local_score(v, pmask, &d);
            let parents: Vec<usize> = (0..3).filter(|&u| pmask >> u & 1 == 1).collect();
            let expect = sequential_oracle(v, &parents, &d);
            prop_assert!(got <= 0.0);
            prop_assert!((got - expect).abs() < 1e-9 * expect.abs().max(1.0));
        }
    }
}
