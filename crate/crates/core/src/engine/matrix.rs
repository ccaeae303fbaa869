use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// How the probabilities in a matrix were obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PosteriorMode {
    /// Unconditional, from the single-bucket order.
    Exact,
    /// Conditional on one order `P`.
    Conditional,
    /// Average of conditional matrices over sampled orders.
    Mcmc,
}

impl fmt::Display for PosteriorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Exact => "exact",
            Self::Conditional => "conditional",
            Self::Mcmc => "mcmc",
        })
    }
}

impl FromStr for PosteriorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Self::Exact),
            "conditional" => Ok(Self::Conditional),
            "mcmc" => Ok(Self::Mcmc),
            _ => Err(Error::Config(format!("unknown posterior mode {s:?}"))),
        }
    }
}

/// `n × n` arc probabilities; entry `(u, v)` is for the arc `u → v`.
#[derive(Clone, Debug, PartialEq)]
pub struct ArcPosteriorMatrix {
    n: usize,
    probs: Vec<f64>,
    pub labels: Vec<String>,
    pub mode: PosteriorMode,
    pub max_indegree: usize,
    /// Order descriptor, `None` when not tied to one order.
    pub order: Option<String>,
    pub chain: Option<usize>,
}

impl ArcPosteriorMatrix {
    pub fn zeros(n: usize, mode: PosteriorMode, max_indegree: usize) -> Self {
        Self {
            n,
            probs: vec![0.0; n * n],
            labels: (0..n).map(|v| v.to_string()).collect(),
            mode,
            max_indegree,
            order: None,
            chain: None,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.probs[u * self.n + v]
    }

    /// Sets entry `(u, v)`, clamped into `[0, 1]`; the diagonal stays 0.
    pub fn set(&mut self, u: usize, v: usize, p: f64) {
        if u != v {
            self.probs[u * self.n + v] = p.clamp(0.0, 1.0);
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.probs
    }

    pub fn with_labels(mut self, labels: &[String]) -> Self {
        assert_eq!(labels.len(), self.n, "label count");
        self.labels = labels.to_vec();
        self
    }

    /// Off-diagonal `(u, v, p)` triples in row-major order.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n;
        (0..n * n)
            .filter(move |i| i / n != i % n)
            .map(move |i| (i / n, i % n, self.probs[i]))
    }

    /// Elementwise mean. Metadata other than the matrix is taken from the
    /// first input and the mode becomes `mcmc`.
    pub fn mean(matrices: &[Self]) -> Result<Self> {
        let first = matrices
            .first()
            .ok_or_else(|| Error::Shape("mean of no matrices".into()))?;
        let mut out = first.clone();
        out.mode = PosteriorMode::Mcmc;
        out.order = None;
        for m in &matrices[1..] {
            if m.n != first.n {
                return Err(Error::Shape(format!("matrix sizes {} and {}", first.n, m.n)));
            }
            for (a, b) in out.probs.iter_mut().zip(&m.probs) {
                *a += b;
            }
        }
        let count = matrices.len() as f64;
        for a in &mut out.probs {
            *a /= count;
        }
        Ok(out)
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!(
            "# mode={} k={} order={} chain={}\n",
            self.mode,
            self.max_indegree,
            self.order.as_deref().unwrap_or("-"),
            self.chain.map_or("-".to_string(), |c| c.to_string())
        );
        s.push_str("tail\\head");
        for l in &self.labels {
            s.push(',');
            s.push_str(l);
        }
        s.push('\n');
        for u in 0..self.n {
            s.push_str(&self.labels[u]);
            for v in 0..self.n {
                write!(s, ",{:.6}", self.get(u, v)).unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text, path)
    }

    pub fn parse_csv(text: &str, path: &Path) -> Result<Self> {
        let bad = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, meta) = lines.next().ok_or_else(|| Error::EmptyInput(path.to_path_buf()))?;
        let meta = meta
            .strip_prefix('#')
            .ok_or_else(|| bad(1, "missing metadata line".into()))?;
        let mut mode = None;
        let mut k = None;
        let mut order = None;
        let mut chain = None;
        for field in meta.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| bad(1, format!("malformed field {field:?}")))?;
            let dash = value == "-";
            match key {
                "mode" => mode = Some(value.parse()?),
                "k" => k = Some(value.parse().map_err(|_| bad(1, format!("bad k {value:?}")))?),
                "order" => order = (!dash).then(|| value.to_string()),
                "chain" if !dash => {
                    chain = Some(value.parse().map_err(|_| bad(1, format!("bad chain {value:?}")))?)
                }
                _ => {}
            }
        }
        let (_, header) = lines.next().ok_or_else(|| bad(2, "missing header".into()))?;
        let labels: Vec<String> = header.split(',').skip(1).map(str::to_string).collect();
        let n = labels.len();
        let mut out = Self::zeros(
            n,
            mode.ok_or_else(|| bad(1, "missing mode".into()))?,
            k.ok_or_else(|| bad(1, "missing k".into()))?,
        );
        out.labels = labels;
        out.order = order;
        out.chain = chain;
        let mut rows = 0;
        for (line, text) in lines {
            if text.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = text.split(',').collect();
            if rows >= n || fields.len() != n + 1 {
                return Err(bad(line, "unexpected row shape".into()));
            }
            for (v, f) in fields[1..].iter().enumerate() {
                out.probs[rows * n + v] =
                    f.trim().parse().map_err(|_| bad(line, format!("bad probability {f:?}")))?;
            }
            rows += 1;
        }
        if rows != n {
            return Err(bad(n + 2, format!("expected {n} rows, found {rows}")));
        }
        Ok(out)
    }
}
