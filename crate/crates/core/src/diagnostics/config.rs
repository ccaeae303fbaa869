use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::engine::DEFAULT_EXACT_CAP;
use crate::error::{Error, Result};
use crate::poset::DEFAULT_IDEAL_CAP;

/// Default schedule: 10 000 burn-in steps, then 100 samples 100 steps apart.
pub const DEFAULT_BURN_IN: u64 = 10_000;
pub const DEFAULT_THINNING: u64 = 100;
pub const DEFAULT_SAMPLES: u64 = 100;
pub const MAX_AUTO_BUCKET: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Scores,
    Gen,
    Exact,
    Mcmc,
    Aggregate,
    Bench,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Scores => "scores",
            Self::Gen => "gen",
            Self::Exact => "exact",
            Self::Mcmc => "mcmc",
            Self::Aggregate => "aggregate",
            Self::Bench => "bench",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BucketSize {
    #[default]
    Auto,
    Fixed(usize),
}

impl FromStr for BucketSize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(Self::Auto);
        }
        s.parse()
            .map(Self::Fixed)
            .map_err(|_| Error::Config(format!("bucket size must be an integer or \"auto\", got {s:?}")))
    }
}

/// Everything a run needs; optional fields are filled by
/// [`resolve_defaults`].
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub data: Option<PathBuf>,
    pub has_header: bool,
    pub network: Option<PathBuf>,
    pub rows: Option<usize>,
    /// Precomputed score cache, used instead of data when given.
    pub scores: Option<PathBuf>,
    pub max_indegree: usize,
    pub bucket_size: BucketSize,
    pub parts: Option<usize>,
    pub iterations: Option<u64>,
    pub burn_in: Option<u64>,
    pub thinning: Option<u64>,
    pub samples: Option<u64>,
    pub chains: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub exact_cap: usize,
    pub ideal_cap: u128,
    /// Bucket sizes timed in bench mode.
    pub bench_sizes: Vec<usize>,
    pub bench_iterations: u64,
    /// In mcmc mode, also compute exact posteriors when `n <= exact_cap`
    /// and report errors against them.
    pub compare_exact: bool,
}

impl ExperimentConfig {
    pub fn new(mode: Mode, out: impl Into<PathBuf>) -> Self {
        Self {
            mode,
            data: None,
            has_header: true,
            network: None,
            rows: None,
            scores: None,
            max_indegree: 3,
            bucket_size: BucketSize::Auto,
            parts: None,
            iterations: None,
            burn_in: None,
            thinning: None,
            samples: None,
            chains: 1,
            seed: 0,
            out: out.into(),
            exact_cap: DEFAULT_EXACT_CAP,
            ideal_cap: DEFAULT_IDEAL_CAP,
            bench_sizes: Vec::new(),
            bench_iterations: 20,
            compare_exact: false,
        }
    }
}

/// A configuration with every run parameter decided.
#[derive(Clone, Debug, PartialEq)]
pub struct Resolved {
    pub config: ExperimentConfig,
    pub n: usize,
    pub bucket_size: usize,
    pub parts: usize,
    pub burn_in: u64,
    pub thinning: u64,
    pub samples: u64,
    /// Every part would be a single bucket: no move exists and the single
    /// sample would be the exact answer, so mcmc runs in exact mode.
    pub route_to_exact: bool,
}

impl Resolved {
    pub fn total_iterations(&self) -> u64 {
        self.burn_in + self.samples * self.thinning
    }
}

/// `round((k - 2) log2 n)` clamped to `[1, min(n, 20)]`.
pub fn auto_bucket_size(n: usize, k: usize) -> usize {
    let upper = n.clamp(1, MAX_AUTO_BUCKET);
    if n < 2 || k <= 2 {
        return 1;
    }
    let b = ((k - 2) as f64 * (n as f64).log2()).round() as usize;
    b.clamp(1, upper)
}

pub fn resolve_defaults(config: &ExperimentConfig, n: usize) -> Result<Resolved> {
    let c = config;
    if n == 0 {
        return Err(Error::Config("no variables".into()));
    }
    if c.data.is_some() && c.network.is_some() {
        return Err(Error::Config("give either --data or --network, not both".into()));
    }
    if c.rows.is_some() && c.network.is_none() {
        return Err(Error::Config("--rows only applies to data generated from --network".into()));
    }
    if c.max_indegree >= n {
        return Err(Error::Config(format!(
            "max indegree {} must be below the node count {n}",
            c.max_indegree
        )));
    }
    if c.chains == 0 {
        return Err(Error::Config("at least one chain is required".into()));
    }
    let parts = c.parts.unwrap_or(1);
    if parts == 0 || parts > n {
        return Err(Error::Config(format!("part count {parts} not in 1..={n}")));
    }
    let bucket_size = match c.bucket_size {
        BucketSize::Auto => auto_bucket_size(n, c.max_indegree),
        BucketSize::Fixed(b) if b == 0 || b > n => {
            return Err(Error::Config(format!("bucket size {b} not in 1..={n}")))
        }
        BucketSize::Fixed(b) => b,
    };
    let (burn_in, thinning, samples) = resolve_schedule(c)?;
    let smallest_part = n / parts;
    Ok(Resolved {
        config: c.clone(),
        n,
        bucket_size,
        parts,
        burn_in,
        thinning,
        samples,
        route_to_exact: bucket_size >= smallest_part + usize::from(!n.is_multiple_of(parts)),
    })
}

fn resolve_schedule(c: &ExperimentConfig) -> Result<(u64, u64, u64)> {
    let thinning = c.thinning.unwrap_or(DEFAULT_THINNING);
    if thinning == 0 {
        return Err(Error::Config("thinning interval must be at least 1".into()));
    }
    let (burn_in, samples) = match (c.iterations, c.burn_in, c.samples) {
        (None, b, t) => (b.unwrap_or(DEFAULT_BURN_IN), t.unwrap_or(DEFAULT_SAMPLES)),
        (Some(total), b, Some(t)) => {
            let b = b.unwrap_or_else(|| total.saturating_sub(t * thinning));
            if b + t * thinning != total {
                return Err(Error::Config(format!(
                    "--iters {total} contradicts burn-in {b} + {t} samples x {thinning}"
                )));
            }
            (b, t)
        }
        (Some(total), b, None) => {
            let b = b.unwrap_or(DEFAULT_BURN_IN.min(total / 2));
            let rest = total.saturating_sub(b);
            if rest % thinning != 0 || rest == 0 {
                return Err(Error::Config(format!(
                    "--iters {total} minus burn-in {b} is not a positive multiple of thinning {thinning}"
                )));
            }
            (b, rest / thinning)
        }
    };
    if samples == 0 {
        return Err(Error::Config("sample count must be at least 1".into()));
    }
    Ok((burn_in, thinning, samples))
}
