use super::order::{members, ParallelBucketOrder};
use crate::error::{Error, Result};

pub const MAX_EXTENSION_NODES: usize = 10;

/// All linear extensions of `order`, each exactly once, as node sequences.
pub fn linear_extensions(order: &ParallelBucketOrder) -> Result<Vec<Vec<usize>>> {
    let n = order.n();
    if n > MAX_EXTENSION_NODES {
        return Err(Error::Config(format!(
            "linear extension enumeration limited to {MAX_EXTENSION_NODES} nodes, got {n}"
        )));
    }
    let preds: Vec<u64> = (0..n).map(|v| order.predecessors(v)).collect();
    let mut out = Vec::new();
    let mut seq = Vec::with_capacity(n);
    fn go(n: usize, preds: &[u64], placed: u64, seq: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if seq.len() == n {
            out.push(seq.clone());
            return;
        }
        for v in 0..n {
            if placed >> v & 1 == 0 && preds[v] & !placed == 0 {
                seq.push(v);
                go(n, preds, placed | 1 << v, seq, out);
                seq.pop();
            }
        }
    }
    go(n, &preds, 0, &mut seq, &mut out);
    Ok(out)
}

/// True iff the arcs `(u, v)` together with the order relation have no
/// directed cycle, i.e. some partial order contains both.
pub fn is_compatible(arcs: &[(usize, usize)], order: &ParallelBucketOrder) -> bool {
    let n = order.n();
    let mut succ = vec![0u64; n];
    for &(u, v) in arcs {
        succ[u] |= 1 << v;
    }
    for part in order.parts() {
        for w in part.windows(2) {
            for u in members(w[0]) {
                succ[u] |= w[1];
            }
        }
    }
    // Kahn: acyclic iff every node can be removed
    let mut indeg = vec![0usize; n];
    for s in &succ {
        for v in members(*s) {
            indeg[v] += 1;
        }
    }
    let mut ready: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut removed = 0;
    while let Some(u) = ready.pop() {
        removed += 1;
        for v in members(succ[u]) {
            indeg[v] -= 1;
            if indeg[v] == 0 {
                ready.push(v);
            }
        }
    }
    removed == n
}
