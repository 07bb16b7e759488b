//! Three-way survival model choice on the `y = -log(time)` scale: normal,
//! Gumbel and logistic components moment-matched to a common location `φ`
//! and variance `σ²`, with right censoring and the prior `π(φ, σ²) = 1/σ²`.
//!
//! `ζ` always denotes allocations in this crate. The logistic scale, often
//! written with the same letter, is the second entry of its [`Params`].
//!
//! [`Params`]: crate::distributions::Params

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as NormalDist};
use statrs::function::gamma::ln_gamma;

use crate::distributions::{Component, Family};
use crate::error::{Error, Result};
use crate::mixture::{check_simplex, ComponentBinding, Dataset, GlobalPrior, MixtureSpec, Propriety, WeightPrior};
use crate::numeric::{log_sum_exp, LN_2PI};
use crate::samplers::{run_gibbs, summarize, ChainConfig, GibbsState, GlobalsConditional, PosteriorSummary, Trace};

pub const SURVIVAL_FAMILIES: [Family; 3] = [Family::Normal, Family::Gumbel, Family::Logistic];

/// A point in the survival mixture's parameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalSpec {
    pub a0: f64,
    pub phi: f64,
    pub sigma2: f64,
    pub weights: [f64; 3],
}

impl SurvivalSpec {
    pub fn new(a0: f64, phi: f64, sigma2: f64, weights: [f64; 3]) -> Result<Self> {
        let spec = SurvivalSpec { a0, phi, sigma2, weights };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a0 > 0.0) {
            return Err(Error::ParameterDomain(format!("a0 = {} must be positive", self.a0)));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) || !self.phi.is_finite() {
            return Err(Error::ParameterDomain(format!(
                "need finite φ and σ² > 0, got ({}, {})",
                self.phi, self.sigma2
            )));
        }
        check_simplex(&self.weights, 3)
    }

    /// The three moment-matched components.
    pub fn components(&self) -> Result<Vec<Component>> {
        survival_mixture(self.a0)?.resolve(&[self.phi, self.sigma2])
    }
}

/// Log of the censored three-component mixture density at `y`. Censored
/// observations contribute each component's cdf at `y`.
pub fn survival_mixture_log_density(spec: &SurvivalSpec, y: f64, censored: bool) -> Result<f64> {
    spec.validate()?;
    let terms = spec
        .components()?
        .iter()
        .zip(spec.weights)
        .map(|(c, w)| {
            let f = if censored { c.ln_censored_factor(y)? } else { c.ln_pdf(y) };
            Ok(if w == 0.0 { f64::NEG_INFINITY } else { w.ln() + f })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(log_sum_exp(&terms))
}

fn uncensored(data: &Dataset) -> impl Iterator<Item = f64> + '_ {
    data.y.iter().enumerate().filter(|(i, _)| !data.is_censored(*i)).map(|(_, y)| *y)
}

/// True when the posterior under `1/σ²` is proper: at least two
/// observations, of which at least two distinct uncensored values.
pub fn propriety_check(data: &Dataset) -> bool {
    if data.len() < 2 {
        return false;
    }
    let mut values = uncensored(data);
    match values.next() {
        Some(first) => values.any(|y| y != first),
        None => false,
    }
}

/// Mixture with slots `phi` (flat prior) and `sigma2` (prior `1/σ²`) and a
/// symmetric Dirichlet(a0) weight prior.
pub fn survival_mixture(a0: f64) -> Result<MixtureSpec> {
    if !(a0 > 0.0 && a0.is_finite()) {
        return Err(Error::ParameterDomain(format!("a0 = {a0} must be positive")));
    }
    MixtureSpec::new(
        SURVIVAL_FAMILIES.iter().map(|f| ComponentBinding::moment_matched(*f, 0, 1)).collect(),
        WeightPrior::symmetric(3, a0)?,
        vec![GlobalPrior::Flat, GlobalPrior::Reciprocal],
        vec!["phi".into(), "sigma2".into()],
        Propriety::DistinctUncensored,
    )
}

/// Metropolis-within-Gibbs update of `(φ, σ²)` given the allocation: an
/// independence step from the normal-inverse-gamma posterior of the
/// uncensored points currently allocated to the normal component, then a
/// random-walk step on `(φ, log σ²)`.
pub struct LocationScaleConditional<'a> {
    spec: &'a MixtureSpec,
    data: &'a Dataset,
    start: [f64; 2],
    step: [f64; 2],
}

impl<'a> LocationScaleConditional<'a> {
    pub fn new(spec: &'a MixtureSpec, data: &'a Dataset) -> Result<Self> {
        let ys: Vec<f64> = uncensored(data).collect();
        if ys.len() < 2 {
            return Err(Error::Propriety("at least two distinct uncensored observations are required".into()));
        }
        let m = ys.len() as f64;
        let mean = ys.iter().sum::<f64>() / m;
        let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (m - 1.0);
        if !(var > 0.0) {
            return Err(Error::Propriety("uncensored observations are all equal".into()));
        }
        let n = data.len() as f64;
        Ok(LocationScaleConditional {
            spec,
            data,
            start: [mean, var],
            step: [(var / n).sqrt(), (2.0 / n).sqrt()],
        })
    }

    /// `ln π(φ, σ²) + Σᵢ ln f_{ζᵢ}(yᵢ | φ, σ²)`.
    fn ln_target(&self, globals: &[f64], labels: &[usize]) -> f64 {
        let prior = self.spec.ln_global_prior(globals);
        if prior == f64::NEG_INFINITY {
            return prior;
        }
        let Ok(components) = self.spec.resolve(globals) else {
            return f64::NEG_INFINITY;
        };
        let mut total = prior;
        for (i, (&l, &y)) in labels.iter().zip(&self.data.y).enumerate() {
            let c = &components[l];
            total += if self.data.is_censored(i) {
                match c.ln_censored_factor(y) {
                    Ok(v) => v,
                    Err(_) => return f64::NEG_INFINITY,
                }
            } else {
                c.ln_pdf(y)
            };
        }
        total
    }
}

/// Normal-inverse-gamma posterior of `(φ, σ²)` from normal data under
/// `1/σ²`: `σ² ~ IG((m-1)/2, SS/2)`, `φ | σ² ~ N(ȳ, σ²/m)`.
struct NigFit {
    m: f64,
    mean: f64,
    shape: f64,
    rate: f64,
}

impl NigFit {
    fn new(ys: &[f64]) -> Option<Self> {
        if ys.len() < 2 {
            return None;
        }
        let m = ys.len() as f64;
        let mean = ys.iter().sum::<f64>() / m;
        let ss: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
        (ss > 0.0).then_some(NigFit { m, mean, shape: 0.5 * (m - 1.0), rate: 0.5 * ss })
    }

    fn sample(&self, rng: &mut dyn RngCore) -> [f64; 2] {
        let g: f64 = Gamma::new(self.shape, 1.0).expect("positive shape").sample(rng);
        let sigma2 = self.rate / g;
        let phi = self.mean + (sigma2 / self.m).sqrt() * rng.sample::<f64, _>(StandardNormal);
        [phi, sigma2]
    }

    fn ln_density(&self, g: &[f64]) -> f64 {
        let (phi, s2) = (g[0], g[1]);
        if !(s2 > 0.0) {
            return f64::NEG_INFINITY;
        }
        let ig = self.shape * self.rate.ln() - ln_gamma(self.shape) - (self.shape + 1.0) * s2.ln() - self.rate / s2;
        let v = s2 / self.m;
        ig - 0.5 * (LN_2PI + v.ln()) - 0.5 * (phi - self.mean).powi(2) / v
    }
}

fn metropolis(log_ratio: f64, rng: &mut dyn RngCore) -> bool {
    log_ratio.is_finite() && (log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio)
}

impl GlobalsConditional for LocationScaleConditional<'_> {
    fn slots(&self) -> Vec<usize> {
        vec![0, 1]
    }

    fn initial(&self) -> Result<Vec<f64>> {
        Ok(self.start.to_vec())
    }

    fn draw(&self, state: &GibbsState<'_>, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        let labels = &state.alloc.labels;
        let mut current = state.globals.to_vec();
        let mut ln_current = self.ln_target(&current, labels);

        let normal_points: Vec<f64> = labels
            .iter()
            .enumerate()
            .filter(|(i, &l)| l == 0 && !self.data.is_censored(*i))
            .map(|(i, _)| self.data.y[i])
            .collect();
        if let Some(fit) = NigFit::new(&normal_points) {
            let proposal = fit.sample(rng).to_vec();
            let ln_new = self.ln_target(&proposal, labels);
            let log_ratio = ln_new - fit.ln_density(&proposal) - ln_current + fit.ln_density(&current);
            if metropolis(log_ratio, rng) {
                current = proposal;
                ln_current = ln_new;
            }
        }

        // Random walk on (φ, log σ²); the log map contributes a σ² Jacobian.
        let phi = current[0] + self.step[0] * rng.sample::<f64, _>(StandardNormal);
        let sigma2 = current[1] * (self.step[1] * rng.sample::<f64, _>(StandardNormal)).exp();
        let proposal = vec![phi, sigma2];
        let ln_new = self.ln_target(&proposal, labels);
        let log_ratio = ln_new + sigma2.ln() - ln_current - current[1].ln();
        if metropolis(log_ratio, rng) {
            current = proposal;
        }
        Ok(current)
    }
}

#[derive(Debug, Clone)]
pub struct SurvivalRun {
    pub trace: Trace,
    pub summary: PosteriorSummary,
}

/// Gibbs sampler over the weights, allocations and `(φ, σ²)`.
pub fn run_survival_test(data: &Dataset, a0: f64, config: &ChainConfig) -> Result<SurvivalRun> {
    let spec = survival_mixture(a0)?;
    spec.check_propriety(data)?;
    let conditional = LocationScaleConditional::new(&spec, data)?;
    let trace = run_gibbs(&spec, data, config, &conditional)?;
    let summary = summarize(&trace)?;
    Ok(SurvivalRun { trace, summary })
}

/// Simulated cohort on the `-log(time)` scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortDesign {
    /// Index of the generating family in [`SURVIVAL_FAMILIES`].
    pub truth: usize,
    pub n: usize,
    pub phi: f64,
    pub sigma2: f64,
    /// Approximate fraction of right-censored observations.
    pub censoring_rate: f64,
}

impl CohortDesign {
    pub fn new(truth: usize, n: usize) -> Self {
        CohortDesign { truth, n, phi: 0.0, sigma2: 1.0, censoring_rate: 0.0 }
    }
}

/// Draws event values from the chosen moment-matched family and independent
/// normal censoring values; an observation is censored when its censoring
/// value exceeds the event value on this scale (the censoring time came
/// first), and the larger value is recorded.
pub fn simulate_cohort(design: &CohortDesign, rng: &mut dyn RngCore) -> Result<Dataset> {
    if design.truth >= 3 {
        return Err(Error::Configuration(format!("survival truth index {} outside 0..3", design.truth)));
    }
    if !(0.0..1.0).contains(&design.censoring_rate) {
        return Err(Error::ParameterDomain(format!(
            "censoring rate {} outside [0, 1)",
            design.censoring_rate
        )));
    }
    let spec = SurvivalSpec { a0: 1.0, phi: design.phi, sigma2: design.sigma2, weights: [1.0, 0.0, 0.0] };
    spec.validate()?;
    let component = spec.components()?[design.truth];
    let sd = design.sigma2.sqrt();
    let shift = if design.censoring_rate > 0.0 {
        let z = NormalDist::standard().inverse_cdf(design.censoring_rate);
        Some(design.phi + std::f64::consts::SQRT_2 * sd * z)
    } else {
        None
    };
    let mut y = Vec::with_capacity(design.n);
    let mut censored = Vec::with_capacity(design.n);
    for _ in 0..design.n {
        let event = component.sample_one(rng);
        match shift {
            Some(centre) => {
                let c = centre + sd * rng.sample::<f64, _>(StandardNormal);
                censored.push(c > event);
                y.push(c.max(event));
            }
            None => {
                censored.push(false);
                y.push(event);
            }
        }
    }
    Dataset::censored(y, censored)
}
