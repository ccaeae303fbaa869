use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::engine::ArcPosteriorMatrix;
use crate::error::{Error, Result};
use crate::mcmc::{ArcDeviation, ChainTrace};

pub(crate) fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Splits a TSV body after checking its header line; yields
/// `(line number, fields)`.
fn rows<'a>(text: &'a str, header: &str, path: &Path) -> Result<Vec<(usize, Vec<&'a str>)>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.starts_with('#'));
    match lines.next() {
        Some((_, h)) if h == header => {}
        Some((i, _)) => return Err(parse_err(path, i + 1, format!("expected header {header:?}"))),
        None => return Err(Error::EmptyInput(path.to_path_buf())),
    }
    let width = header.split('\t').count();
    lines
        .map(|(i, l)| {
            let f: Vec<&str> = l.split('\t').collect();
            if f.len() == width {
                Ok((i + 1, f))
            } else {
                Err(parse_err(path, i + 1, format!("expected {width} fields")))
            }
        })
        .collect()
}

fn field<T: std::str::FromStr>(path: &Path, line: usize, s: &str) -> Result<T> {
    s.parse().map_err(|_| parse_err(path, line, format!("bad value {s:?}")))
}

pub fn trace_path(dir: &Path, chain: usize) -> PathBuf {
    dir.join(format!("trace_{chain}.tsv"))
}

pub fn samples_path(dir: &Path, chain: usize) -> PathBuf {
    dir.join(format!("samples_{chain}.tsv"))
}

pub fn estimate_path(dir: &Path, chain: usize) -> PathBuf {
    dir.join(format!("estimate_{chain}.csv"))
}

const SUMMARY_HEADER: &str = "chain\tacceptance_ratio\tacceptance_ratio_after_burn_in\tfinal_log_score\tburn_in\tsteps";

#[derive(Clone, Debug, PartialEq)]
pub struct ChainSummary {
    pub chain: usize,
    pub acceptance_ratio: f64,
    pub acceptance_ratio_after_burn_in: f64,
    pub final_log_score: f64,
    pub burn_in: u64,
    pub steps: u64,
}

impl ChainSummary {
    pub fn of(t: &ChainTrace) -> Self {
        Self {
            chain: t.chain,
            acceptance_ratio: t.acceptance_ratio(),
            acceptance_ratio_after_burn_in: t.acceptance_ratio_after_burn_in(),
            final_log_score: t.final_log_score(),
            burn_in: t.burn_in,
            steps: t.steps.len() as u64,
        }
    }
}

/// Writes `trace_<c>.tsv` and `samples_<c>.tsv` per chain and one
/// `summary.tsv`; returns the paths written.
pub fn emit_convergence_report(traces: &[ChainTrace], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut summary = format!("{SUMMARY_HEADER}\n");
    for t in traces {
        let p = trace_path(dir, t.chain);
        write(&p, &t.trace_tsv())?;
        written.push(p);
        let p = samples_path(dir, t.chain);
        write(&p, &t.samples_tsv())?;
        written.push(p);
        let s = ChainSummary::of(t);
        writeln!(
            summary,
            "{}\t{}\t{}\t{}\t{}\t{}",
            s.chain, s.acceptance_ratio, s.acceptance_ratio_after_burn_in, s.final_log_score, s.burn_in, s.steps
        )
        .unwrap();
    }
    let p = dir.join("summary.tsv");
    write(&p, &summary)?;
    written.push(p);
    Ok(written)
}

pub fn parse_summary_tsv(text: &str, path: &Path) -> Result<Vec<ChainSummary>> {
    rows(text, SUMMARY_HEADER, path)?
        .into_iter()
        .map(|(l, f)| {
            Ok(ChainSummary {
                chain: field(path, l, f[0])?,
                acceptance_ratio: field(path, l, f[1])?,
                acceptance_ratio_after_burn_in: field(path, l, f[2])?,
                final_log_score: field(path, l, f[3])?,
                burn_in: field(path, l, f[4])?,
                steps: field(path, l, f[5])?,
            })
        })
        .collect()
}

/// Deviation report: a `# max_arc_deviation=` line, then one row per arc.
pub fn deviation_tsv(dev: &ArcDeviation, labels: &[String]) -> String {
    let n = labels.len();
    let mut s = format!("# max_arc_deviation={}\ntail\thead\tstd\n", dev.max);
    for u in 0..n {
        for v in 0..n {
            if u != v {
                writeln!(s, "{}\t{}\t{}", labels[u], labels[v], dev.per_arc[u * n + v]).unwrap();
            }
        }
    }
    s
}

/// Returns the maximum and the `(tail, head, std)` rows.
pub fn parse_deviation_tsv(text: &str, path: &Path) -> Result<(f64, Vec<(String, String, f64)>)> {
    let max = text
        .lines()
        .next()
        .and_then(|l| l.strip_prefix("# max_arc_deviation="))
        .ok_or_else(|| parse_err(path, 1, "missing max_arc_deviation line"))?;
    let max = field(path, 1, max)?;
    let arcs = rows(text, "tail\thead\tstd", path)?
        .into_iter()
        .map(|(l, f)| Ok((f[0].to_string(), f[1].to_string(), field(path, l, f[2])?)))
        .collect::<Result<_>>()?;
    Ok((max, arcs))
}

const ERRORS_HEADER: &str = "run\tlargest_absolute_error";

/// Largest absolute error per run; the pooled estimate is the run `pooled`.
pub fn errors_tsv(per_run: &[(String, f64)]) -> String {
    let mut s = format!("{ERRORS_HEADER}\n");
    for (run, e) in per_run {
        writeln!(s, "{run}\t{e}").unwrap();
    }
    s
}

pub fn parse_errors_tsv(text: &str, path: &Path) -> Result<Vec<(String, f64)>> {
    rows(text, ERRORS_HEADER, path)?
        .into_iter()
        .map(|(l, f)| Ok((f[0].to_string(), field(path, l, f[1])?)))
        .collect()
}

const BENCH_HEADER: &str = "bucket_size\tideals\titerations\tmean_seconds_full\tmean_seconds_incremental";

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub bucket_size: usize,
    pub ideals: u128,
    pub iterations: u64,
    /// Full rebuild of every alpha table per iteration.
    pub mean_seconds_full: f64,
    /// Reusing alpha tables of nodes outside the flipped range.
    pub mean_seconds_incremental: f64,
}

pub fn bench_tsv(rows: &[BenchRow]) -> String {
    let mut s = format!("{BENCH_HEADER}\n");
    for r in rows {
        writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}",
            r.bucket_size, r.ideals, r.iterations, r.mean_seconds_full, r.mean_seconds_incremental
        )
        .unwrap();
    }
    s
}

pub fn parse_bench_tsv(text: &str, path: &Path) -> Result<Vec<BenchRow>> {
    rows(text, BENCH_HEADER, path)?
        .into_iter()
        .map(|(l, f)| {
            Ok(BenchRow {
                bucket_size: field(path, l, f[0])?,
                ideals: field(path, l, f[1])?,
                iterations: field(path, l, f[2])?,
                mean_seconds_full: field(path, l, f[3])?,
                mean_seconds_incremental: field(path, l, f[4])?,
            })
        })
        .collect()
}

/// Reads `estimate_<c>.csv` files of a run directory, in chain order.
pub fn read_chain_estimates(dir: &Path) -> Result<Vec<ArcPosteriorMatrix>> {
    let mut found: Vec<(usize, PathBuf)> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().into_string().ok()?;
            let c = name.strip_prefix("estimate_")?.strip_suffix(".csv")?.parse().ok()?;
            Some((c, e.path()))
        })
        .collect();
    found.sort();
    found.iter().map(|(_, p)| ArcPosteriorMatrix::read_csv(p)).collect()
}
