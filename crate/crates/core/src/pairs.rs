//! The four ready-made i.i.d. tests: Poisson against geometric, two normal
//! variances, a point-null normal mean, and normal against Laplace.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Gamma, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::distributions::Family;
use crate::error::{Error, Result};
use crate::mixture::{
    allocation_stats, AllocationStats, ComponentBinding, Dataset, GlobalPrior, MixtureSpec, ParamSource,
    Propriety, WeightPrior,
};
use crate::numeric::LN_2PI;
use crate::oracles::LaplaceLocationPosterior;
use crate::samplers::{GibbsState, GlobalsConditional, GlobalsProposal};

/// Laplace scale of the normal-versus-Laplace pair. With `b = 1/√2` the
/// Laplace variance `2b²` equals the unit variance of the normal component.
pub const LAPLACE_PAIR_SCALE: f64 = FRAC_1_SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairKind {
    #[serde(rename = "poisson-geometric")]
    PoissonVsGeometric,
    #[serde(rename = "normal-variance")]
    NormalVar1VsVar2,
    PointNullMean,
    #[serde(rename = "normal-laplace")]
    NormalVsLaplace,
}

impl PairKind {
    pub const ALL: [PairKind; 4] =
        [PairKind::PoissonVsGeometric, PairKind::NormalVar1VsVar2, PairKind::PointNullMean, PairKind::NormalVsLaplace];

    pub fn name(self) -> &'static str {
        match self {
            PairKind::PoissonVsGeometric => "poisson-geometric",
            PairKind::NormalVar1VsVar2 => "normal-variance",
            PairKind::PointNullMean => "point-null-mean",
            PairKind::NormalVsLaplace => "normal-laplace",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        PairKind::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| {
                let known: Vec<_> = PairKind::ALL.iter().map(|k| k.name()).collect();
                Error::Configuration(format!("unknown pair {name:?}; expected one of {}", known.join(", ")))
            })
    }

    /// Shared-parameter values used when simulating from this pair.
    pub fn default_globals(self) -> Vec<f64> {
        match self {
            PairKind::PoissonVsGeometric => vec![4.0],
            PairKind::NormalVar1VsVar2 => vec![0.0],
            PairKind::PointNullMean => vec![1.0],
            PairKind::NormalVsLaplace => vec![0.0],
        }
    }

    /// Model-posterior independence proposals for the MH sampler, fitted to
    /// the whole sample.
    pub fn proposal(self, data: &Dataset) -> Result<Box<dyn GlobalsProposal>> {
        let n = data.len();
        let sum: f64 = data.y.iter().sum();
        match self {
            PairKind::PoissonVsGeometric => {
                if n == 0 || sum <= 0.0 {
                    return Err(Error::Propriety("rate proposals need a positive count total".into()));
                }
                Ok(Box::new(PoissonGeometricProposal::new(sum, n as f64)?))
            }
            PairKind::NormalVar1VsVar2 => {
                require_obs(n)?;
                let xbar = sum / n as f64;
                Ok(Box::new(NormalProposals {
                    candidates: vec![(0, xbar, (1.0 / n as f64).sqrt()), (1, xbar, (2.0 / n as f64).sqrt())],
                }))
            }
            PairKind::PointNullMean => {
                // under the null the mean keeps its N(0, 1) prior
                let m = n as f64 + 1.0;
                Ok(Box::new(NormalProposals { candidates: vec![(0, 0.0, 1.0), (1, sum / m, (1.0 / m).sqrt())] }))
            }
            PairKind::NormalVsLaplace => {
                require_obs(n)?;
                let xbar = sum / n as f64;
                Ok(Box::new(NormalLaplaceProposal {
                    normal: (xbar, (1.0 / n as f64).sqrt()),
                    laplace: LaplaceLocationPosterior::new(&data.y, LAPLACE_PAIR_SCALE)?,
                }))
            }
        }
    }

    /// Full conditional of the shared parameter for the Gibbs sampler.
    pub fn conditional<'a>(self, spec: &'a MixtureSpec, data: &'a Dataset) -> Result<Box<dyn GlobalsConditional + 'a>> {
        let n = data.len();
        let xbar = if n == 0 { 0.0 } else { data.y.iter().sum::<f64>() / n as f64 };
        Ok(match self {
            PairKind::PoissonVsGeometric => Box::new(LambdaConditional { data, start: xbar.max(0.5) }),
            PairKind::NormalVar1VsVar2 => Box::new(NormalVarConditional { data, start: xbar }),
            PairKind::PointNullMean => Box::new(PointNullConditional { data, start: xbar }),
            PairKind::NormalVsLaplace => Box::new(IndependenceWithinGibbs {
                spec,
                data,
                proposal: self.proposal(data)?,
                start: vec![xbar],
            }),
        })
    }
}

impl std::fmt::Display for PairKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PairKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PairKind::parse(s)
    }
}

fn require_obs(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Propriety("a flat location prior needs at least one observation".into()));
    }
    Ok(())
}

/// Two-component mixture for one of the i.i.d. tests with a symmetric
/// `Beta(a0, a0)` prior on the weights.
pub fn build_pair(kind: PairKind, a0: f64) -> Result<MixtureSpec> {
    if !(a0 > 0.0 && a0.is_finite()) {
        return Err(Error::ParameterDomain(format!("a0 = {a0} must be positive")));
    }
    let weights = WeightPrior::symmetric(2, a0)?;
    let (components, prior, name, propriety) = match kind {
        PairKind::PoissonVsGeometric => (
            vec![
                ComponentBinding::direct(Family::Poisson, vec![ParamSource::Slot(0)]),
                ComponentBinding::direct(Family::GeometricFailures, vec![ParamSource::GeometricFromMean(0)]),
            ],
            GlobalPrior::Reciprocal,
            "lambda",
            Propriety::PositiveSum,
        ),
        PairKind::NormalVar1VsVar2 => (
            vec![
                ComponentBinding::direct(Family::Normal, vec![ParamSource::Slot(0), ParamSource::Fixed(1.0)]),
                ComponentBinding::direct(Family::Normal, vec![ParamSource::Slot(0), ParamSource::Fixed(SQRT_2)]),
            ],
            GlobalPrior::Flat,
            "theta",
            Propriety::NonEmpty,
        ),
        PairKind::PointNullMean => (
            vec![
                ComponentBinding::direct(Family::Normal, vec![ParamSource::Fixed(0.0), ParamSource::Fixed(1.0)]),
                ComponentBinding::direct(Family::Normal, vec![ParamSource::Slot(0), ParamSource::Fixed(1.0)]),
            ],
            GlobalPrior::Normal { mean: 0.0, sd: 1.0 },
            "mu",
            Propriety::Always,
        ),
        PairKind::NormalVsLaplace => (
            vec![
                ComponentBinding::direct(Family::Normal, vec![ParamSource::Slot(0), ParamSource::Fixed(1.0)]),
                ComponentBinding::direct(
                    Family::Laplace,
                    vec![ParamSource::Slot(0), ParamSource::Fixed(LAPLACE_PAIR_SCALE)],
                ),
            ],
            GlobalPrior::Flat,
            "mu",
            Propriety::NonEmpty,
        ),
    };
    MixtureSpec::new(components, weights, vec![prior], vec![name.to_string()], propriety)
}

/// Log kernel of the rate given an allocation, under the `1/λ` prior:
/// `-n₁λ + (S-1) ln λ - (n₂+s₂) ln(1+λ)` with `S = n·x̄` the total count.
/// Component 0 is the Poisson, component 1 the geometric.
pub fn lambda_conditional_log_kernel(lambda: f64, stats: &AllocationStats, n_xbar: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::ParameterDomain(format!("rate {lambda} must be positive")));
    }
    let n1 = stats.counts[0] as f64;
    let tail = stats.counts[1] as f64 + stats.sums[1];
    Ok(-n1 * lambda + (n_xbar - 1.0) * lambda.ln() - tail * lambda.ln_1p())
}

/// Whether the rate kernel has a finite integral. It always decays at
/// infinity once there is an observation; at zero it behaves like
/// `λ^{S-1}`, which needs `S > 0`.
pub fn lambda_kernel_is_integrable(stats: &AllocationStats, n_xbar: f64) -> bool {
    stats.counts.iter().sum::<usize>() > 0 && n_xbar > 0.0
}

/// Outcome of one Metropolis-within-Gibbs update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MwgStep {
    pub value: f64,
    pub accepted: bool,
}

/// Independent MH update of the rate with the whole-sample Poisson
/// posterior `Gamma(S, n)` as proposal.
pub fn lambda_mwg_step(current: f64, stats: &AllocationStats, rng: &mut dyn RngCore) -> Result<MwgStep> {
    if !(current > 0.0 && current.is_finite()) {
        return Err(Error::ParameterDomain(format!("rate {current} must be positive")));
    }
    let n = stats.counts.iter().sum::<usize>() as f64;
    let s: f64 = stats.sums.iter().sum();
    if !lambda_kernel_is_integrable(stats, s) {
        return Err(Error::Propriety("rate conditional is not integrable for an all-zero sample".into()));
    }
    let gamma = Gamma::new(s, 1.0 / n).map_err(|e| Error::ParameterDomain(e.to_string()))?;
    let proposal: f64 = gamma.sample(rng);
    if !(proposal > 0.0 && proposal.is_finite()) {
        return Ok(MwgStep { value: current, accepted: false });
    }
    // target/proposal ratio: the λ^{S-1} factors cancel, leaving
    // (n - n₁)λ - (n₂+s₂) ln(1+λ).
    let n2 = n - stats.counts[0] as f64;
    let tail = stats.counts[1] as f64 + stats.sums[1];
    let log_ratio = n2 * (proposal - current) - tail * (proposal.ln_1p() - current.ln_1p());
    let accepted = log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio;
    Ok(MwgStep { value: if accepted { proposal } else { current }, accepted })
}

/// Draw of θ given an allocation for the two-variance normal test:
/// `N((s₁ + s₂/2)/(n₁ + n₂/2), 1/(n₁ + n₂/2))` where `sᵢ` are the
/// per-component sums.
pub fn theta_conditional_normalvar(stats: &AllocationStats, rng: &mut dyn RngCore) -> Result<f64> {
    let (mean, sd) = theta_conditional_moments(stats)?;
    Ok(mean + sd * rng.sample::<f64, _>(StandardNormal))
}

/// Mean and standard deviation of [`theta_conditional_normalvar`].
pub fn theta_conditional_moments(stats: &AllocationStats) -> Result<(f64, f64)> {
    let precision = stats.counts[0] as f64 + 0.5 * stats.counts[1] as f64;
    if precision == 0.0 {
        return Err(Error::Contract("θ conditional needs at least one allocated observation".into()));
    }
    Ok(((stats.sums[0] + 0.5 * stats.sums[1]) / precision, (1.0 / precision).sqrt()))
}

struct PoissonGeometricProposal {
    shape: f64,
    n: f64,
    gamma_shape: Gamma<f64>,
    gamma_n: Gamma<f64>,
    ln_norm_beta: f64,
}

impl PoissonGeometricProposal {
    fn new(shape: f64, n: f64) -> Result<Self> {
        let g = |a: f64| Gamma::new(a, 1.0).map_err(|e| Error::ParameterDomain(e.to_string()));
        Ok(PoissonGeometricProposal {
            shape,
            n,
            gamma_shape: g(shape)?,
            gamma_n: g(n)?,
            ln_norm_beta: ln_gamma(shape) + ln_gamma(n) - ln_gamma(shape + n),
        })
    }
}

impl GlobalsProposal for PoissonGeometricProposal {
    fn candidates(&self) -> usize {
        2
    }

    fn component(&self, candidate: usize) -> usize {
        candidate
    }

    fn sample(&self, candidate: usize, rng: &mut dyn RngCore) -> Vec<f64> {
        let a: f64 = self.gamma_shape.sample(rng);
        if candidate == 0 {
            vec![a / self.n]
        } else {
            // beta-prime(S, n) as a ratio of gammas
            let b: f64 = self.gamma_n.sample(rng);
            vec![a / b]
        }
    }

    fn ln_density(&self, candidate: usize, globals: &[f64]) -> f64 {
        let l = globals[0];
        if !(l > 0.0) {
            return f64::NEG_INFINITY;
        }
        let (s, n) = (self.shape, self.n);
        if candidate == 0 {
            s * n.ln() - ln_gamma(s) + (s - 1.0) * l.ln() - n * l
        } else {
            (s - 1.0) * l.ln() - (s + n) * l.ln_1p() - self.ln_norm_beta
        }
    }
}

/// Normal independence proposals `(component, mean, sd)`.
struct NormalProposals {
    candidates: Vec<(usize, f64, f64)>,
}

fn normal_ln_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - 0.5 * LN_2PI
}

impl GlobalsProposal for NormalProposals {
    fn candidates(&self) -> usize {
        self.candidates.len()
    }

    fn component(&self, candidate: usize) -> usize {
        self.candidates[candidate].0
    }

    fn sample(&self, candidate: usize, rng: &mut dyn RngCore) -> Vec<f64> {
        let (_, mean, sd) = self.candidates[candidate];
        vec![mean + sd * rng.sample::<f64, _>(StandardNormal)]
    }

    fn ln_density(&self, candidate: usize, globals: &[f64]) -> f64 {
        let (_, mean, sd) = self.candidates[candidate];
        normal_ln_pdf(globals[0], mean, sd)
    }
}

struct NormalLaplaceProposal {
    normal: (f64, f64),
    laplace: LaplaceLocationPosterior,
}

impl GlobalsProposal for NormalLaplaceProposal {
    fn candidates(&self) -> usize {
        2
    }

    fn component(&self, candidate: usize) -> usize {
        candidate
    }

    fn sample(&self, candidate: usize, rng: &mut dyn RngCore) -> Vec<f64> {
        if candidate == 0 {
            vec![self.normal.0 + self.normal.1 * rng.sample::<f64, _>(StandardNormal)]
        } else {
            vec![self.laplace.sample(rng)]
        }
    }

    fn ln_density(&self, candidate: usize, globals: &[f64]) -> f64 {
        if candidate == 0 {
            normal_ln_pdf(globals[0], self.normal.0, self.normal.1)
        } else {
            self.laplace.ln_density(globals[0])
        }
    }
}

struct LambdaConditional<'a> {
    data: &'a Dataset,
    start: f64,
}

impl GlobalsConditional for LambdaConditional<'_> {
    fn slots(&self) -> Vec<usize> {
        vec![0]
    }

    fn initial(&self) -> Result<Vec<f64>> {
        Ok(vec![self.start])
    }

    fn draw(&self, state: &GibbsState<'_>, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        let stats = allocation_stats(state.alloc, self.data, 2);
        Ok(vec![lambda_mwg_step(state.globals[0], &stats, rng)?.value])
    }
}

struct NormalVarConditional<'a> {
    data: &'a Dataset,
    start: f64,
}

impl GlobalsConditional for NormalVarConditional<'_> {
    fn slots(&self) -> Vec<usize> {
        vec![0]
    }

    fn initial(&self) -> Result<Vec<f64>> {
        Ok(vec![self.start])
    }

    fn draw(&self, state: &GibbsState<'_>, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        let stats = allocation_stats(state.alloc, self.data, 2);
        Ok(vec![theta_conditional_normalvar(&stats, rng)?])
    }
}

struct PointNullConditional<'a> {
    data: &'a Dataset,
    start: f64,
}

impl GlobalsConditional for PointNullConditional<'_> {
    fn slots(&self) -> Vec<usize> {
        vec![0]
    }

    fn initial(&self) -> Result<Vec<f64>> {
        Ok(vec![self.start])
    }

    fn draw(&self, state: &GibbsState<'_>, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        // conjugate update from the N(μ,1)-allocated points and the N(0,1) prior
        let stats = allocation_stats(state.alloc, self.data, 2);
        let m = stats.counts[1] as f64 + 1.0;
        let normal = Normal::new(stats.sums[1] / m, (1.0 / m).sqrt()).map_err(|e| Error::Numeric(e.to_string()))?;
        Ok(vec![normal.sample(rng)])
    }
}

/// Independence Metropolis-within-Gibbs on the shared parameters, targeting
/// their conditional given the allocation.
pub struct IndependenceWithinGibbs<'a> {
    pub spec: &'a MixtureSpec,
    pub data: &'a Dataset,
    pub proposal: Box<dyn GlobalsProposal>,
    pub start: Vec<f64>,
}

impl IndependenceWithinGibbs<'_> {
    fn ln_conditional(&self, globals: &[f64], labels: &[usize]) -> f64 {
        let prior = self.spec.ln_global_prior(globals);
        if prior == f64::NEG_INFINITY {
            return prior;
        }
        let Ok(components) = self.spec.resolve(globals) else {
            return f64::NEG_INFINITY;
        };
        prior + labels.iter().zip(&self.data.y).map(|(&l, &y)| components[l].ln_pdf(y)).sum::<f64>()
    }

    fn ln_q(&self, globals: &[f64]) -> f64 {
        let m = self.proposal.candidates();
        let terms: Vec<f64> = (0..m).map(|c| self.proposal.ln_density(c, globals)).collect();
        crate::numeric::log_sum_exp(&terms) - (m as f64).ln()
    }
}

impl GlobalsConditional for IndependenceWithinGibbs<'_> {
    fn slots(&self) -> Vec<usize> {
        (0..self.spec.n_globals()).collect()
    }

    fn initial(&self) -> Result<Vec<f64>> {
        Ok(self.start.clone())
    }

    fn draw(&self, state: &GibbsState<'_>, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        let c = rng.random_range(0..self.proposal.candidates());
        let candidate = self.proposal.sample(c, rng);
        let labels = &state.alloc.labels;
        let log_ratio = self.ln_conditional(&candidate, labels) - self.ln_q(&candidate)
            - self.ln_conditional(state.globals, labels)
            + self.ln_q(state.globals);
        let accept = log_ratio.is_finite() && (log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio);
        Ok(if accept { candidate } else { state.globals.to_vec() })
    }
}
