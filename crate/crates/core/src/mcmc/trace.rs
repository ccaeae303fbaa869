use std::fmt::Write as _;
use std::path::Path;

use crate::engine::ArcPosteriorMatrix;
use crate::error::{Error, Result};
use crate::poset::{Flip, ParallelBucketOrder};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub iteration: u64,
    /// Log score of the state after the step.
    pub log_score: f64,
    pub accepted: bool,
    pub flip: Flip,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub iteration: u64,
    pub order: ParallelBucketOrder,
    pub arcs: ArcPosteriorMatrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainTrace {
    pub chain: usize,
    pub burn_in: u64,
    pub thinning: u64,
    pub initial: ParallelBucketOrder,
    pub initial_log_score: f64,
    pub steps: Vec<StepRecord>,
    pub samples: Vec<Sample>,
}

fn ratio(steps: &[StepRecord]) -> f64 {
    if steps.is_empty() {
        return 0.0;
    }
    steps.iter().filter(|s| s.accepted).count() as f64 / steps.len() as f64
}

impl ChainTrace {
    /// Accepted proposals over all proposals.
    pub fn acceptance_ratio(&self) -> f64 {
        ratio(&self.steps)
    }

    /// Acceptance ratio over the steps after burn-in.
    pub fn acceptance_ratio_after_burn_in(&self) -> f64 {
        ratio(&self.steps[(self.burn_in as usize).min(self.steps.len())..])
    }

    pub fn final_log_score(&self) -> f64 {
        self.steps.last().map_or(self.initial_log_score, |s| s.log_score)
    }

    /// Mean of the retained conditional matrices.
    pub fn estimate(&self) -> Result<ArcPosteriorMatrix> {
        if self.samples.is_empty() {
            return Err(Error::Shape(format!("chain {} has no retained samples", self.chain)));
        }
        let ms: Vec<ArcPosteriorMatrix> = self.samples.iter().map(|s| s.arcs.clone()).collect();
        let mut m = ArcPosteriorMatrix::mean(&ms)?;
        m.chain = Some(self.chain);
        Ok(m)
    }

    /// `iteration  log_score  accepted` TSV, preceded by one `#` line with
    /// the chain, burn-in boundary and initial state.
    pub fn trace_tsv(&self) -> String {
        let mut s = format!(
            "# chain={} burn_in={} thinning={} initial={} initial_log_score={}\niteration\tlog_score\taccepted\n",
            self.chain, self.burn_in, self.thinning, self.initial, self.initial_log_score
        );
        for r in &self.steps {
            writeln!(s, "{}\t{}\t{}", r.iteration, r.log_score, u8::from(r.accepted)).unwrap();
        }
        s
    }

    /// `iteration  order` TSV of the retained states.
    pub fn samples_tsv(&self) -> String {
        let mut s = String::from("iteration\torder\n");
        for r in &self.samples {
            writeln!(s, "{}\t{}", r.iteration, r.order).unwrap();
        }
        s
    }
}

/// One row of a trace file.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub iteration: u64,
    pub log_score: f64,
    pub accepted: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceFile {
    pub chain: usize,
    pub burn_in: u64,
    pub rows: Vec<TraceRow>,
}

impl TraceFile {
    pub fn acceptance_ratio(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows.iter().filter(|r| r.accepted).count() as f64 / self.rows.len() as f64
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn header_field<'a>(meta: &'a str, key: &str) -> Option<&'a str> {
    meta.split_whitespace()
        .filter_map(|f| f.split_once('='))
        .find(|(k, _)| *k == key)
        .map(|(_, v)| v)
}

pub fn parse_trace_tsv(text: &str, path: &Path) -> Result<TraceFile> {
    let mut lines = text.lines();
    let meta = lines
        .next()
        .and_then(|l| l.strip_prefix('#'))
        .ok_or_else(|| parse_err(path, 1, "missing metadata line"))?;
    let num = |key: &str| {
        header_field(meta, key)
            .and_then(|v| v.parse::<u64>().ok())
            .ok_or_else(|| parse_err(path, 1, format!("missing or bad {key}")))
    };
    let chain = num("chain")? as usize;
    let burn_in = num("burn_in")?;
    if lines.next() != Some("iteration\tlog_score\taccepted") {
        return Err(parse_err(path, 2, "unexpected column header"));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let f: Vec<&str> = line.split('\t').collect();
        let bad = || parse_err(path, i + 3, format!("bad trace row {line:?}"));
        if f.len() != 3 {
            return Err(bad());
        }
        rows.push(TraceRow {
            iteration: f[0].parse().map_err(|_| bad())?,
            log_score: f[1].parse().map_err(|_| bad())?,
            accepted: match f[2] {
                "0" => false,
                "1" => true,
                _ => return Err(bad()),
            },
        });
    }
    Ok(TraceFile { chain, burn_in, rows })
}

pub fn parse_samples_tsv(text: &str, path: &Path) -> Result<Vec<(u64, ParallelBucketOrder)>> {
    let mut lines = text.lines();
    if lines.next() != Some("iteration\torder") {
        return Err(parse_err(path, 1, "unexpected column header"));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = || parse_err(path, i + 2, format!("bad sample row {line:?}"));
            let (it, order) = line.split_once('\t').ok_or_else(bad)?;
            Ok((it.parse().map_err(|_| bad())?, order.parse().map_err(|_| bad())?))
        })
        .collect()
}

pub fn read_trace_tsv(path: &Path) -> Result<TraceFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trace_tsv(&text, path)
}

pub fn read_samples_tsv(path: &Path) -> Result<Vec<(u64, ParallelBucketOrder)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_samples_tsv(&text, path)
}
