use serde::{Deserialize, Serialize};

use super::Trace;
use crate::error::{Error, Result};
use crate::numeric::quantile_sorted;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantitySummary {
    pub name: String,
    pub mean: f64,
    pub median: f64,
    pub q025: f64,
    pub q25: f64,
    pub q75: f64,
    pub q975: f64,
}

impl QuantitySummary {
    pub fn from_draws(name: impl Into<String>, draws: &[f64]) -> Result<Self> {
        if draws.is_empty() {
            return Err(Error::Contract("cannot summarise an empty sample".into()));
        }
        let mut sorted = draws.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(QuantitySummary {
            name: name.into(),
            mean: draws.iter().sum::<f64>() / draws.len() as f64,
            median: quantile_sorted(&sorted, 0.5),
            q025: quantile_sorted(&sorted, 0.025),
            q25: quantile_sorted(&sorted, 0.25),
            q75: quantile_sorted(&sorted, 0.75),
            q975: quantile_sorted(&sorted, 0.975),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub weights: Vec<QuantitySummary>,
    pub globals: Vec<QuantitySummary>,
    /// Number of times the first weight crosses 1/2 between successive draws.
    pub crossing_count: usize,
    /// Weight-move acceptance rate (MH only).
    pub acceptance_rate: Option<f64>,
    /// Shared-parameter acceptance rate (MH only).
    pub globals_acceptance_rate: Option<f64>,
    pub draws: usize,
}

impl PosteriorSummary {
    /// Posterior median of the first weight, the recommended point estimate.
    pub fn alpha_median(&self) -> f64 {
        self.weights[0].median
    }

    pub fn alpha_mean(&self) -> f64 {
        self.weights[0].mean
    }
}

/// Number of `t` with `(αₜ − ½)(αₜ₊₁ − ½) < 0`.
pub fn crossing_count(alpha: &[f64]) -> usize {
    alpha.windows(2).filter(|w| (w[0] - 0.5) * (w[1] - 0.5) < 0.0).count()
}

pub fn summarize(trace: &Trace) -> Result<PosteriorSummary> {
    if trace.is_empty() {
        return Err(Error::Contract("trace has no draws after burn-in".into()));
    }
    let k = trace.weights[0].len();
    let weights = (0..k)
        .map(|j| QuantitySummary::from_draws(format!("w{}", j + 1), &trace.weight(j)))
        .collect::<Result<Vec<_>>>()?;
    let globals = trace
        .global_names
        .iter()
        .enumerate()
        .map(|(s, name)| QuantitySummary::from_draws(name.clone(), &trace.global(s)))
        .collect::<Result<Vec<_>>>()?;
    let rate = |flags: &[bool]| flags.iter().filter(|a| **a).count() as f64 / flags.len() as f64;
    Ok(PosteriorSummary {
        weights,
        globals,
        crossing_count: crossing_count(&trace.alpha()),
        acceptance_rate: trace.is_mh.then(|| rate(&trace.accepted)),
        globals_acceptance_rate: (trace.is_mh && !trace.global_names.is_empty())
            .then(|| rate(&trace.accepted_globals)),
        draws: trace.len(),
    })
}
