//! MCMC engines for the mixture weights and shared parameters.
//!
//! Two samplers target the same posterior:
//!
//! * [`run_gibbs`] completes the sample with allocations and alternates
//!   allocations, weights (Dirichlet) and shared parameters. It is valid but
//!   sticks near the boundary of the simplex once the sample is moderately
//!   large: moving from `α ≈ 1` to `α ≈ 0` requires relabelling almost every
//!   observation at once.
//! * [`run_mh`] works on the observed-data likelihood. The weights move by a
//!   random walk on the logit (additive log-ratio) scale or by prior draws;
//!   the shared parameters are proposed from the posteriors of the individual
//!   models, each fitted to the whole sample.
//!
//! Both engines run on anything implementing [`MixtureTarget`], so the
//! regression and survival examples reuse them.

mod bootstrap;
mod gibbs;
mod mh;
mod summary;

pub use bootstrap::calibrate_bootstrap;
pub use gibbs::{run_gibbs, run_gibbs_target, GibbsState, GlobalsConditional};
pub use mh::{run_mh, run_mh_target, GlobalsProposal};
pub use summary::{crossing_count, summarize, PosteriorSummary, QuantitySummary};

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixture::{component_log_densities, Dataset, LogDensityTable, MixtureSpec, WeightPrior};

/// Random stream used by every chain.
pub type ChainRng = ChaCha8Rng;

pub fn chain_rng(seed: u64) -> ChainRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// How the MH sampler proposes new weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaProposal {
    /// Independent draws from the weight prior.
    FromPrior,
    /// Gaussian random walk with the given step on the logit scale.
    LogitRandomWalk { step: f64 },
    /// Each iteration, a prior draw with probability `prior_probability`,
    /// otherwise a logit random-walk step. The prior draws let the chain
    /// jump between the two ends of a U-shaped weight posterior.
    Mixture { step: f64, prior_probability: f64 },
}

impl AlphaProposal {
    /// Random-walk step, zero for pure prior draws.
    pub fn step(&self) -> f64 {
        match self {
            AlphaProposal::FromPrior => 0.0,
            AlphaProposal::LogitRandomWalk { step } | AlphaProposal::Mixture { step, .. } => *step,
        }
    }
}

/// How the MH sampler picks which model posterior proposes the shared
/// parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThetaProposal {
    /// Uniformly at random among the model posteriors.
    ModelPosteriorIndependence,
    /// With probability equal to the current weight of that model.
    ComponentConditional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub alpha_proposal: AlphaProposal,
    pub theta_proposal: ThetaProposal,
    /// Tune the weight random-walk step during burn-in towards an
    /// acceptance rate of 0.44. The step is frozen once burn-in ends.
    pub adapt_step: bool,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            iterations: 10_000,
            burn_in: 1_000,
            seed: 0,
            alpha_proposal: AlphaProposal::Mixture { step: 0.5, prior_probability: 0.2 },
            theta_proposal: ThetaProposal::ModelPosteriorIndependence,
            adapt_step: true,
        }
    }
}

impl ChainConfig {
    /// Default chain with `iterations` steps and a 10% burn-in.
    pub fn with_iterations(iterations: usize, seed: u64) -> Self {
        ChainConfig { iterations, burn_in: iterations / 10, seed, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Configuration("iterations must be positive".into()));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::Configuration(format!(
                "burn-in {} must be smaller than iterations {}",
                self.burn_in, self.iterations
            )));
        }
        match self.alpha_proposal {
            AlphaProposal::FromPrior => {}
            AlphaProposal::LogitRandomWalk { step } | AlphaProposal::Mixture { step, .. }
                if !(step > 0.0) || !step.is_finite() =>
            {
                return Err(Error::Configuration(format!("random-walk step {step} must be positive")));
            }
            AlphaProposal::Mixture { prior_probability: p, .. } if !(0.0..=1.0).contains(&p) => {
                return Err(Error::Configuration(format!("prior-draw probability {p} outside [0, 1]")));
            }
            _ => {}
        }
        Ok(())
    }
}

/// Recorded post-burn-in states of a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub weights: Vec<Vec<f64>>,
    pub globals: Vec<Vec<f64>>,
    pub global_names: Vec<String>,
    /// Weight move accepted (always true for Gibbs draws).
    pub accepted: Vec<bool>,
    /// Shared-parameter move accepted.
    pub accepted_globals: Vec<bool>,
    pub allocation_counts: Option<Vec<Vec<usize>>>,
    /// Iteration index of the first recorded draw.
    pub first_draw: usize,
    /// Whether `accepted` carries MH decisions.
    pub is_mh: bool,
}

impl Trace {
    pub(crate) fn empty(global_names: Vec<String>, first_draw: usize, is_mh: bool, with_counts: bool) -> Self {
        Trace {
            weights: Vec::new(),
            globals: Vec::new(),
            global_names,
            accepted: Vec::new(),
            accepted_globals: Vec::new(),
            allocation_counts: with_counts.then(Vec::new),
            first_draw,
            is_mh,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// The first component's weight, draw by draw.
    pub fn alpha(&self) -> Vec<f64> {
        self.weight(0)
    }

    pub fn weight(&self, j: usize) -> Vec<f64> {
        self.weights.iter().map(|w| w[j]).collect()
    }

    pub fn global(&self, s: usize) -> Vec<f64> {
        self.globals.iter().map(|g| g[s]).collect()
    }

    /// CSV with columns `draw, w1..wK, <global names>, accepted`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let k = self.weights.first().map_or(0, Vec::len);
        let mut header = vec!["draw".to_string()];
        header.extend((1..=k).map(|j| format!("w{j}")));
        header.extend(self.global_names.iter().cloned());
        header.push("accepted".into());
        w.write_record(&header)?;
        for t in 0..self.len() {
            let mut row = vec![(self.first_draw + t).to_string()];
            row.extend(self.weights[t].iter().map(|x| x.to_string()));
            row.extend(self.globals[t].iter().map(|x| x.to_string()));
            row.push(u8::from(self.accepted[t]).to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A mixture posterior the samplers can explore: per-observation component
/// log densities as a function of the shared parameters, plus priors.
pub trait MixtureTarget {
    fn k(&self) -> usize;
    fn n_obs(&self) -> usize;
    fn global_names(&self) -> Vec<String>;
    fn weight_prior(&self) -> &WeightPrior;
    fn ln_global_prior(&self, globals: &[f64]) -> f64;
    /// Component log densities at every observation. A
    /// [`Error::ParameterDomain`] means `globals` lies outside the parameter
    /// space; samplers treat that as zero posterior density.
    fn log_densities(&self, globals: &[f64]) -> Result<LogDensityTable>;
    /// Fails when the posterior would be improper for this data.
    fn check_propriety(&self) -> Result<()> {
        Ok(())
    }
}

/// [`MixtureTarget`] for an i.i.d. [`MixtureSpec`].
pub struct IidTarget<'a> {
    pub spec: &'a MixtureSpec,
    pub data: &'a Dataset,
}

impl MixtureTarget for IidTarget<'_> {
    fn k(&self) -> usize {
        self.spec.k()
    }

    fn n_obs(&self) -> usize {
        self.data.len()
    }

    fn global_names(&self) -> Vec<String> {
        self.spec.global_names.clone()
    }

    fn weight_prior(&self) -> &WeightPrior {
        &self.spec.weight_prior
    }

    fn ln_global_prior(&self, globals: &[f64]) -> f64 {
        self.spec.ln_global_prior(globals)
    }

    fn log_densities(&self, globals: &[f64]) -> Result<LogDensityTable> {
        let components = self.spec.resolve(globals)?;
        component_log_densities(&components, self.data)
    }

    fn check_propriety(&self) -> Result<()> {
        self.spec.check_propriety(self.data)
    }
}

/// Log weights from additive log-ratio coordinates (last component is the
/// reference).
pub(crate) fn ln_weights_from_alr(eta: &[f64]) -> Vec<f64> {
    let mut full: Vec<f64> = eta.to_vec();
    full.push(0.0);
    let norm = crate::numeric::log_sum_exp(&full);
    full.iter().map(|e| e - norm).collect()
}

pub(crate) fn alr_from_ln_weights(ln_w: &[f64]) -> Vec<f64> {
    let last = ln_w[ln_w.len() - 1];
    ln_w[..ln_w.len() - 1].iter().map(|l| l - last).collect()
}
