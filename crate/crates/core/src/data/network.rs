use std::fs;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

/// A categorical Bayesian network used to generate synthetic data.
///
/// `cpt[v][j]` is the distribution of `v` under parent configuration `j`,
/// where `j` is the mixed-radix index of the parent values with the first
/// listed parent as the most significant digit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub nodes: Vec<String>,
    pub arities: Vec<usize>,
    pub parents: Vec<Vec<usize>>,
    pub cpt: Vec<Vec<Vec<f64>>>,
}

impl NetworkSpec {
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self =
            serde_json::from_str(text).map_err(|e| Error::InvalidNetwork(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if self.arities.len() != n || self.parents.len() != n || self.cpt.len() != n {
            return Err(Error::InvalidNetwork(
                "nodes, arities, parents and cpt must have equal length".into(),
            ));
        }
        for v in 0..n {
            if self.arities[v] == 0 {
                return Err(Error::InvalidNetwork(format!("node {v} has arity 0")));
            }
            for &u in &self.parents[v] {
                if u >= n || u == v {
                    return Err(Error::InvalidNetwork(format!("node {v} has bad parent {u}")));
                }
            }
            let configs: usize = self.parents[v].iter().map(|&u| self.arities[u]).product();
            if self.cpt[v].len() != configs {
                return Err(Error::InvalidNetwork(format!(
                    "node {v}: {} cpt rows, expected {configs}",
                    self.cpt[v].len()
                )));
            }
            for (j, row) in self.cpt[v].iter().enumerate() {
                if row.len() != self.arities[v] {
                    return Err(Error::InvalidNetwork(format!(
                        "node {v} row {j}: length {} != arity {}",
                        row.len(),
                        self.arities[v]
                    )));
                }
                let sum: f64 = row.iter().sum();
                if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidNetwork(format!(
                        "node {v} row {j} is not a distribution (sum {sum})"
                    )));
                }
            }
        }
        if self.topological_order().is_none() {
            return Err(Error::InvalidNetwork("parent graph has a cycle".into()));
        }
        Ok(())
    }

    /// Kahn's algorithm, smallest ready index first. `None` on a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.n();
        let mut indeg: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut children = vec![Vec::new(); n];
        for (v, ps) in self.parents.iter().enumerate() {
            for &u in ps {
                children[u].push(v);
            }
        }
        let mut ready: std::collections::BTreeSet<usize> =
            (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for &c in &children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    pub fn config_index(&self, v: usize, row: &[usize]) -> usize {
        self.parents[v]
            .iter()
            .fold(0, |acc, &u| acc * self.arities[u] + row[u])
    }
}

/// Draws `m` i.i.d. rows by ancestral sampling.
pub fn sample_network_data(spec: &NetworkSpec, m: usize, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let order = spec.topological_order().expect("validated acyclic");
    let samplers: Vec<Vec<WeightedIndex<f64>>> = spec
        .cpt
        .iter()
        .map(|rows| {
            rows.iter()
                .map(|r| WeightedIndex::new(r).expect("validated distribution"))
                .collect()
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(m);
    for _ in 0..m {
        let mut row = vec![0usize; spec.n()];
        for &v in &order {
            let j = spec.config_index(v, &row);
            row[v] = samplers[v][j].sample(&mut rng);
        }
        rows.push(row);
    }
    Dataset::from_indices(spec.nodes.clone(), &spec.arities, &rows)
}
