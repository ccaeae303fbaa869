use std::path::{Path, PathBuf};

use super::bench::bench_iteration_time;
use super::config::{resolve_defaults, ExperimentConfig, Mode, Resolved};
use super::report::{
    bench_tsv, deviation_tsv, emit_convergence_report, errors_tsv, estimate_path, read, read_chain_estimates, write,
};
use crate::data::{build_score_table, load_dataset, sample_network_data, Dataset, LoadOptions, NetworkSpec, ScoreOptions, ScoreTable};
use crate::engine::{exact_posteriors, ArcPosteriorMatrix};
use crate::error::{Error, Result};
use crate::mcmc::{estimate_arc_posteriors, largest_absolute_error, max_arc_deviation, run_chains, McmcConfig};

/// What a run produced.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    /// The mcmc request had a single bucket per part and ran as exact.
    pub routed_to_exact: bool,
    pub log_evidence: Option<f64>,
    pub max_arc_deviation: Option<f64>,
    pub largest_absolute_errors: Vec<(String, f64)>,
}

struct Inputs {
    scores: ScoreTable<f64>,
    labels: Vec<String>,
}

fn dataset(c: &ExperimentConfig) -> Result<Option<Dataset>> {
    if let Some(path) = &c.data {
        let opts = LoadOptions {
            has_header: c.has_header,
            ..LoadOptions::default()
        };
        return load_dataset(path, &opts).map(Some);
    }
    if let Some(path) = &c.network {
        let rows = c
            .rows
            .ok_or_else(|| Error::Config("--network needs --rows".into()))?;
        return sample_network_data(&NetworkSpec::load(path)?, rows, c.seed).map(Some);
    }
    Ok(None)
}

fn inputs(c: &ExperimentConfig) -> Result<Inputs> {
    if c.data.is_some() && c.network.is_some() {
        return Err(Error::Config("give either --data or --network, not both".into()));
    }
    if let Some(path) = &c.scores {
        if c.data.is_some() || c.network.is_some() {
            return Err(Error::Config("give either a score cache or data, not both".into()));
        }
        let scores = ScoreTable::read_cache(path)?;
        if scores.max_indegree() != c.max_indegree {
            return Err(Error::Config(format!(
                "score cache has max indegree {}, run asks for {}",
                scores.max_indegree(),
                c.max_indegree
            )));
        }
        let labels = (0..scores.n()).map(|v| v.to_string()).collect();
        return Ok(Inputs { scores, labels });
    }
    let data = dataset(c)?.ok_or_else(|| Error::Config("no input: give --data, --network or --scores".into()))?;
    if c.max_indegree >= data.n() {
        return Err(Error::Config(format!(
            "max indegree {} must be below the node count {}",
            c.max_indegree,
            data.n()
        )));
    }
    let scores = build_score_table(&data, &ScoreOptions::new(c.max_indegree))?;
    Ok(Inputs {
        scores,
        labels: data.names().to_vec(),
    })
}

fn create_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn evidence_path(dir: &Path) -> PathBuf {
    dir.join("evidence.tsv")
}

pub fn parse_evidence_tsv(text: &str, path: &Path) -> Result<f64> {
    text.lines()
        .find_map(|l| l.strip_prefix("log_evidence\t"))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "missing log_evidence".into(),
        })
}

fn run_exact(inp: &Inputs, c: &ExperimentConfig, report: &mut RunReport) -> Result<ArcPosteriorMatrix> {
    let (log_ev, m) = exact_posteriors(&inp.scores, c.exact_cap)?;
    let m = m.with_labels(&inp.labels);
    let p = c.out.join("exact.csv");
    m.write_csv(&p)?;
    report.files.push(p);
    let p = evidence_path(&c.out);
    write(&p, &format!("log_evidence\t{log_ev}\nnodes\t{}\nmax_indegree\t{}\n", inp.scores.n(), c.max_indegree))?;
    report.files.push(p);
    report.log_evidence = Some(log_ev);
    Ok(m)
}

fn deviation_and_errors(
    per_chain: &[ArcPosteriorMatrix],
    pooled: &ArcPosteriorMatrix,
    exact: Option<&ArcPosteriorMatrix>,
    out: &Path,
    report: &mut RunReport,
) -> Result<()> {
    if per_chain.len() >= 2 {
        let dev = max_arc_deviation(per_chain)?;
        let p = out.join("deviation.tsv");
        write(&p, &deviation_tsv(&dev, &pooled.labels))?;
        report.files.push(p);
        report.max_arc_deviation = Some(dev.max);
    }
    if let Some(exact) = exact {
        let mut errs = per_chain
            .iter()
            .enumerate()
            .map(|(i, m)| Ok((m.chain.unwrap_or(i).to_string(), largest_absolute_error(m, exact)?)))
            .collect::<Result<Vec<_>>>()?;
        errs.push(("pooled".into(), largest_absolute_error(pooled, exact)?));
        let p = out.join("errors.tsv");
        write(&p, &errors_tsv(&errs))?;
        report.files.push(p);
        report.largest_absolute_errors = errs;
    }
    Ok(())
}

fn run_mcmc(inp: &Inputs, r: &Resolved, report: &mut RunReport) -> Result<()> {
    let c = &r.config;
    let mcmc = McmcConfig {
        bucket_size: r.bucket_size,
        parts: r.parts,
        burn_in: r.burn_in,
        thinning: r.thinning,
        samples: r.samples,
        chains: c.chains,
        base_seed: c.seed,
        hastings: false,
        incremental: true,
        ideal_cap: c.ideal_cap,
    };
    log::info!(
        "mcmc: n={} k={} b={} r={} burn-in={} samples={} thinning={} chains={}",
        r.n,
        c.max_indegree,
        r.bucket_size,
        r.parts,
        r.burn_in,
        r.samples,
        r.thinning,
        c.chains
    );
    let traces = run_chains(&inp.scores, &mcmc)?;
    report.files.extend(emit_convergence_report(&traces, &c.out)?);
    let est = estimate_arc_posteriors(&traces)?;
    let per_chain: Vec<ArcPosteriorMatrix> = est.per_chain.into_iter().map(|m| m.with_labels(&inp.labels)).collect();
    for m in &per_chain {
        let p = estimate_path(&c.out, m.chain.expect("chain estimate"));
        m.write_csv(&p)?;
        report.files.push(p);
    }
    let pooled = est.pooled.with_labels(&inp.labels);
    let p = c.out.join("estimate_pooled.csv");
    pooled.write_csv(&p)?;
    report.files.push(p);
    let exact = if c.compare_exact && r.n <= c.exact_cap {
        Some(run_exact(inp, c, report)?)
    } else {
        None
    };
    deviation_and_errors(&per_chain, &pooled, exact.as_ref(), &c.out, report)
}

fn run_aggregate(c: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let per_chain = read_chain_estimates(&c.out)?;
    if per_chain.is_empty() {
        return Err(Error::Config(format!("no estimate_<chain>.csv files in {}", c.out.display())));
    }
    let mut pooled = ArcPosteriorMatrix::mean(&per_chain)?;
    pooled.chain = None;
    let p = c.out.join("estimate_pooled.csv");
    pooled.write_csv(&p)?;
    report.files.push(p);
    let exact_path = c.out.join("exact.csv");
    let exact = if exact_path.exists() {
        Some(ArcPosteriorMatrix::read_csv(&exact_path)?)
    } else {
        None
    };
    deviation_and_errors(&per_chain, &pooled, exact.as_ref(), &c.out, report)
}

/// Runs one mode end to end, writing its files under `config.out`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport> {
    let c = config;
    let mut report = RunReport::default();
    create_out(&c.out)?;
    match c.mode {
        Mode::Gen => {
            let network = c
                .network
                .as_ref()
                .ok_or_else(|| Error::Config("gen needs --network".into()))?;
            let rows = c.rows.ok_or_else(|| Error::Config("gen needs --rows".into()))?;
            let data = sample_network_data(&NetworkSpec::load(network)?, rows, c.seed)?;
            let p = c.out.join("data.csv");
            data.write_csv(&p)?;
            report.files.push(p);
        }
        Mode::Scores => {
            let inp = inputs(c)?;
            resolve_defaults(c, inp.scores.n())?;
            let p = c.out.join("scores.txt");
            inp.scores.write_cache(&p)?;
            report.files.push(p);
        }
        Mode::Exact => {
            let inp = inputs(c)?;
            resolve_defaults(c, inp.scores.n())?;
            run_exact(&inp, c, &mut report)?;
        }
        Mode::Mcmc => {
            let inp = inputs(c)?;
            let r = resolve_defaults(c, inp.scores.n())?;
            if r.route_to_exact {
                log::warn!("bucket size {} leaves one bucket per part; computing exact posteriors", r.bucket_size);
                report.routed_to_exact = true;
                run_exact(&inp, c, &mut report)?;
            } else {
                run_mcmc(&inp, &r, &mut report)?;
            }
        }
        Mode::Aggregate => run_aggregate(c, &mut report)?,
        Mode::Bench => {
            let inp = inputs(c)?;
            let r = resolve_defaults(c, inp.scores.n())?;
            let sizes = if c.bench_sizes.is_empty() {
                vec![1, r.bucket_size]
            } else {
                c.bench_sizes.clone()
            };
            let rows = bench_iteration_time(&inp.scores, &sizes, c.bench_iterations, c.seed)?;
            let p = c.out.join("bench.tsv");
            write(&p, &bench_tsv(&rows))?;
            report.files.push(p);
        }
    }
    Ok(report)
}

/// Reads `evidence.tsv` of a run directory.
pub fn read_evidence(dir: &Path) -> Result<f64> {
    let p = evidence_path(dir);
    parse_evidence_tsv(&read(&p)?, &p)
}
