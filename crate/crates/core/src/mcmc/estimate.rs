use super::trace::ChainTrace;
use crate::engine::ArcPosteriorMatrix;
use crate::error::{Error, Result};

/// Per-chain estimates and their mean.
#[derive(Clone, Debug, PartialEq)]
pub struct PooledEstimate {
    pub per_chain: Vec<ArcPosteriorMatrix>,
    pub pooled: ArcPosteriorMatrix,
}

/// Mean of each chain's retained matrices, and the mean of those means.
pub fn estimate_arc_posteriors(traces: &[ChainTrace]) -> Result<PooledEstimate> {
    if traces.is_empty() {
        return Err(Error::Shape("no chains to estimate from".into()));
    }
    let per_chain = traces.iter().map(ChainTrace::estimate).collect::<Result<Vec<_>>>()?;
    let mut pooled = ArcPosteriorMatrix::mean(&per_chain)?;
    pooled.chain = None;
    Ok(PooledEstimate { per_chain, pooled })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArcDeviation {
    pub max: f64,
    /// Row-major `n × n` population standard deviations; diagonal 0.
    pub per_arc: Vec<f64>,
}

/// Per-arc standard deviation across runs (dividing by the run count) and
/// its maximum.
pub fn max_arc_deviation(runs: &[ArcPosteriorMatrix]) -> Result<ArcDeviation> {
    if runs.len() < 2 {
        return Err(Error::Shape(format!("deviation needs at least 2 runs, got {}", runs.len())));
    }
    let n = runs[0].n();
    if runs.iter().any(|r| r.n() != n) {
        return Err(Error::Shape("runs have different node counts".into()));
    }
    let count = runs.len() as f64;
    let per_arc: Vec<f64> = (0..n * n)
        .map(|i| {
            let mean = runs.iter().map(|r| r.values()[i]).sum::<f64>() / count;
            let var = runs.iter().map(|r| (r.values()[i] - mean).powi(2)).sum::<f64>() / count;
            var.sqrt()
        })
        .collect();
    Ok(ArcDeviation {
        max: per_arc.iter().cloned().fold(0.0, f64::max),
        per_arc,
    })
}

/// `max |estimate - exact|` over the off-diagonal entries.
pub fn largest_absolute_error(estimate: &ArcPosteriorMatrix, exact: &ArcPosteriorMatrix) -> Result<f64> {
    if estimate.n() != exact.n() {
        return Err(Error::Shape(format!("matrix sizes {} and {}", estimate.n(), exact.n())));
    }
    Ok(estimate
        .arcs()
        .map(|(u, v, p)| (p - exact.get(u, v)).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::PosteriorMode;

    fn with(n: usize, entries: &[(usize, usize, f64)]) -> ArcPosteriorMatrix {
        let mut m = ArcPosteriorMatrix::zeros(n, PosteriorMode::Conditional, 1);
        for &(u, v, p) in entries {
            m.set(u, v, p);
        }
        m
    }

    #[test]
    fn deviation_examples() {
        let a = with(3, &[(0, 1, 0.2), (1, 2, 0.7)]);
        let b = with(3, &[(0, 1, 0.4), (1, 2, 0.7)]);
        assert_eq!(max_arc_deviation(&[a.clone(), a.clone()]).unwrap().max, 0.0);
        let d = max_arc_deviation(&[a.clone(), b]).unwrap();
        assert!((d.max - 0.1).abs() < 1e-15);
        assert!((d.per_arc[1] - 0.1).abs() < 1e-15);
        assert!(max_arc_deviation(&[a]).is_err());
    }

    #[test]
    fn error_examples() {
        let exact = with(2, &[(0, 1, 0.35)]);
        let est = with(2, &[(0, 1, 0.50)]);
        assert_eq!(largest_absolute_error(&exact, &exact).unwrap(), 0.0);
        assert!((largest_absolute_error(&est, &exact).unwrap() - 0.15).abs() < 1e-15);
        assert!(largest_absolute_error(&with(3, &[]), &exact).is_err());
    }
}
