//! Regression tests: logit against probit with a shared, rescaled
//! coefficient vector, and variable selection as a mixture over every
//! non-empty subset of the design columns.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, RngCore};
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::mixture::{sample_ln_dirichlet, Allocation, Dataset, LogDensityTable, WeightPrior};
use crate::numeric::{ln_normal_cdf, log_sum_exp, sigmoid, softplus, LN_2PI};
use crate::samplers::{
    chain_rng, run_mh_target, summarize, ChainConfig, GlobalsProposal, MixtureTarget, PosteriorSummary, Trace,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Link {
    Logit,
    Probit,
}

impl Link {
    /// `(ln P(y=1), ln P(y=0))` at linear predictor `eta`.
    pub fn ln_probs(self, eta: f64) -> (f64, f64) {
        match self {
            Link::Logit => (-softplus(-eta), -softplus(eta)),
            Link::Probit => (ln_normal_cdf(eta), ln_normal_cdf(-eta)),
        }
    }

    pub fn mean(self, eta: f64) -> f64 {
        match self {
            Link::Logit => sigmoid(eta),
            Link::Probit => crate::numeric::normal_cdf(eta),
        }
    }
}

fn design(data: &Dataset) -> Result<&DMatrix<f64>> {
    data.design
        .as_ref()
        .ok_or_else(|| Error::Design("regression needs a design matrix".into()))
}

fn check_binary(data: &Dataset) -> Result<()> {
    if let Some(bad) = data.y.iter().find(|y| **y != 0.0 && **y != 1.0) {
        return Err(Error::ParameterDomain(format!("binary response expected, found {bad}")));
    }
    Ok(())
}

/// Maximum likelihood fit of a binary regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlmFit {
    pub link: Link,
    pub coefficients: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Inverse Fisher information at the estimate, row-major.
    pub covariance: Vec<f64>,
}

impl GlmFit {
    pub fn covariance_matrix(&self) -> DMatrix<f64> {
        let p = self.coefficients.len();
        DMatrix::from_row_slice(p, p, &self.covariance)
    }
}

fn bernoulli_log_likelihood(x: &DMatrix<f64>, y: &[f64], beta: &DVector<f64>, link: Link) -> f64 {
    let eta = x * beta;
    eta.iter()
        .zip(y)
        .map(|(e, yi)| {
            let (l1, l0) = link.ln_probs(*e);
            if *yi == 1.0 {
                l1
            } else {
                l0
            }
        })
        .sum()
}

/// Score vector and Fisher information.
fn score_and_information(x: &DMatrix<f64>, y: &[f64], beta: &DVector<f64>, link: Link) -> (DVector<f64>, DMatrix<f64>) {
    let eta = x * beta;
    let n = x.nrows();
    let mut u = DVector::zeros(n);
    let mut w = DVector::zeros(n);
    for i in 0..n {
        let e = eta[i];
        match link {
            Link::Logit => {
                let p = sigmoid(e);
                u[i] = y[i] - p;
                w[i] = p * (1.0 - p);
            }
            Link::Probit => {
                let ln_phi = -0.5 * e * e - 0.5 * LN_2PI;
                let (l1, l0) = link.ln_probs(e);
                u[i] = if y[i] == 1.0 { (ln_phi - l1).exp() } else { -(ln_phi - l0).exp() };
                w[i] = (2.0 * ln_phi - l1 - l0).exp();
            }
        }
    }
    let score = x.transpose() * u;
    let weighted = DMatrix::from_fn(n, x.ncols(), |i, j| x[(i, j)] * w[i]);
    (score, x.transpose() * weighted)
}

/// Fisher scoring with step halving. Converged when the score's max norm
/// falls below 1e-8; otherwise stops after 100 iterations and returns the
/// current coefficients flagged as not converged. A fit whose probabilities
/// reproduce every label (perfect separation, no finite maximiser) is also
/// flagged as not converged.
pub fn fit_glm_mle(data: &Dataset, link: Link) -> Result<GlmFit> {
    let x = design(data)?;
    check_binary(data)?;
    let p = x.ncols();
    let mut beta = DVector::zeros(p);
    let mut ll = bernoulli_log_likelihood(x, &data.y, &beta, link);
    let mut converged = false;
    let mut iterations = 0;
    let mut info = DMatrix::identity(p, p);
    while iterations < 100 {
        let (score, fisher) = score_and_information(x, &data.y, &beta, link);
        info = fisher;
        if score.amax() < 1e-8 {
            converged = true;
            break;
        }
        iterations += 1;
        let Some(chol) = Cholesky::new(info.clone()) else {
            break;
        };
        let step = chol.solve(&score);
        let mut scale = 1.0;
        loop {
            let candidate = &beta + &step * scale;
            let ll_new = bernoulli_log_likelihood(x, &data.y, &candidate, link);
            if ll_new >= ll - 1e-10 * (1.0 + ll.abs()) || scale < 1e-10 {
                beta = candidate;
                ll = ll_new;
                break;
            }
            scale *= 0.5;
        }
    }
    let eta = x * &beta;
    let separated = eta.iter().zip(&data.y).all(|(e, yi)| {
        let (l1, l0) = link.ln_probs(*e);
        let ln_miss = if *yi == 1.0 { l0 } else { l1 };
        ln_miss < (1e-8f64).ln()
    });
    converged &= !separated && beta.iter().all(|b| b.is_finite());
    let covariance = match Cholesky::new(info) {
        Some(c) => c.inverse(),
        None => DMatrix::from_element(p, p, f64::NAN),
    };
    Ok(GlmFit {
        link,
        coefficients: beta.iter().copied().collect(),
        converged,
        iterations,
        covariance: covariance.transpose().iter().copied().collect(),
    })
}

/// Elementwise ratio of logit to probit coefficients.
pub fn rescale_ratio(fit_logit: &GlmFit, fit_probit: &GlmFit) -> Result<Vec<f64>> {
    if fit_logit.coefficients.len() != fit_probit.coefficients.len() {
        return Err(Error::Contract("fits have different dimensions".into()));
    }
    fit_logit
        .coefficients
        .iter()
        .zip(&fit_probit.coefficients)
        .enumerate()
        .map(|(i, (a, b))| {
            if *b == 0.0 || !b.is_finite() {
                Err(Error::ParameterDomain(format!("probit coefficient {i} is {b}; cannot rescale")))
            } else {
                Ok(a / b)
            }
        })
        .collect()
}

/// The logit–probit mixture with shared coefficients `θ`: the probit
/// component uses `θ / k` elementwise. Coefficients get the g-prior
/// `N(0, n (XᵀX)⁻¹)` and the logit weight a `Beta(a0, a0)` prior.
pub struct LogitProbitTarget<'a> {
    data: &'a Dataset,
    x: &'a DMatrix<f64>,
    k: Vec<f64>,
    weight_prior: WeightPrior,
    prior_precision: DMatrix<f64>,
    ln_prior_norm: f64,
}

impl<'a> LogitProbitTarget<'a> {
    pub fn new(data: &'a Dataset, k: &[f64], a0: f64) -> Result<Self> {
        let x = design(data)?;
        check_binary(data)?;
        if k.len() != x.ncols() || k.iter().any(|v| *v == 0.0 || !v.is_finite()) {
            return Err(Error::ParameterDomain(format!("invalid rescaling vector {k:?}")));
        }
        if !(a0 > 0.0) {
            return Err(Error::ParameterDomain(format!("a0 = {a0} must be positive")));
        }
        let n = x.nrows() as f64;
        let prior_precision = x.transpose() * x / n;
        let chol = Cholesky::new(prior_precision.clone())
            .ok_or_else(|| Error::Design("XᵀX is not positive definite".into()))?;
        let ln_det: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
        let p = x.ncols() as f64;
        Ok(LogitProbitTarget {
            data,
            x,
            k: k.to_vec(),
            weight_prior: WeightPrior::symmetric(2, a0)?,
            prior_precision,
            ln_prior_norm: 0.5 * ln_det - 0.5 * p * LN_2PI,
        })
    }

    fn ln_g_prior(&self, theta: &[f64]) -> f64 {
        let t = DVector::from_column_slice(theta);
        self.ln_prior_norm - 0.5 * (t.transpose() * &self.prior_precision * &t)[(0, 0)]
    }
}

impl MixtureTarget for LogitProbitTarget<'_> {
    fn k(&self) -> usize {
        2
    }

    fn n_obs(&self) -> usize {
        self.data.len()
    }

    fn global_names(&self) -> Vec<String> {
        (0..self.x.ncols()).map(|j| format!("theta{j}")).collect()
    }

    fn weight_prior(&self) -> &WeightPrior {
        &self.weight_prior
    }

    fn ln_global_prior(&self, globals: &[f64]) -> f64 {
        if globals.iter().any(|g| !g.is_finite()) {
            return f64::NEG_INFINITY;
        }
        self.ln_g_prior(globals)
    }

    fn log_densities(&self, globals: &[f64]) -> Result<LogDensityTable> {
        let theta = DVector::from_column_slice(globals);
        let scaled = DVector::from_iterator(globals.len(), globals.iter().zip(&self.k).map(|(t, k)| t / k));
        let eta_logit = self.x * theta;
        let eta_probit = self.x * scaled;
        let mut values = Vec::with_capacity(2 * self.data.len());
        for (i, y) in self.data.y.iter().enumerate() {
            for (link, eta) in [(Link::Logit, eta_logit[i]), (Link::Probit, eta_probit[i])] {
                let (l1, l0) = link.ln_probs(eta);
                values.push(if *y == 1.0 { l1 } else { l0 });
            }
        }
        Ok(LogDensityTable { n: self.data.len(), k: 2, values })
    }
}

/// Log posterior density (up to the marginal likelihood) of `(θ, α)` in the
/// logit–probit mixture with allocations integrated out.
pub fn logit_probit_mixture_log_posterior(theta: &[f64], alpha: f64, data: &Dataset, k: &[f64], a0: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::ParameterDomain(format!("α = {alpha} outside (0, 1)")));
    }
    let target = LogitProbitTarget::new(data, k, a0)?;
    if theta.len() != k.len() {
        return Err(Error::Contract(format!("θ has {} entries, expected {}", theta.len(), k.len())));
    }
    let ln_w = [alpha.ln(), (-alpha).ln_1p()];
    let ln_beta = (a0 - 1.0) * (ln_w[0] + ln_w[1]) - (2.0 * ln_gamma(a0) - ln_gamma(2.0 * a0));
    let table = target.log_densities(theta)?;
    Ok(ln_beta + target.ln_global_prior(theta) + table.mixture_log_likelihood(&ln_w))
}

/// Multivariate normal with a Cholesky factor of its covariance.
#[derive(Debug, Clone)]
struct Mvn {
    mean: DVector<f64>,
    chol_l: DMatrix<f64>,
    ln_norm: f64,
}

impl Mvn {
    fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let chol = Cholesky::new(covariance).ok_or_else(|| Error::Numeric("covariance is not positive definite".into()))?;
        let l = chol.l();
        let ln_det: f64 = l.diagonal().iter().map(|d| 2.0 * d.ln()).sum();
        let p = mean.len() as f64;
        Ok(Mvn { mean, chol_l: l, ln_norm: -0.5 * (p * LN_2PI + ln_det) })
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let z = DVector::from_fn(self.mean.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
        (&self.mean + &self.chol_l * z).iter().copied().collect()
    }

    fn ln_density(&self, x: &[f64]) -> f64 {
        let d = DVector::from_column_slice(x) - &self.mean;
        let Some(z) = self.chol_l.solve_lower_triangular(&d) else {
            return f64::NEG_INFINITY;
        };
        self.ln_norm - 0.5 * z.norm_squared()
    }
}

/// Normal approximations of the two single-model posteriors, on the shared
/// `θ` scale, with covariances inflated by `inflation`.
pub struct LogitProbitProposal {
    candidates: [Mvn; 2],
}

impl LogitProbitProposal {
    pub fn new(logit: &GlmFit, probit: &GlmFit, k: &[f64], inflation: f64) -> Result<Self> {
        let p = k.len();
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(k));
        let logit_mvn = Mvn::new(
            DVector::from_column_slice(&logit.coefficients),
            logit.covariance_matrix() * inflation,
        )?;
        let probit_mean = DVector::from_iterator(p, probit.coefficients.iter().zip(k).map(|(b, k)| b * k));
        let probit_mvn = Mvn::new(probit_mean, &d * probit.covariance_matrix() * &d * inflation)?;
        Ok(LogitProbitProposal { candidates: [logit_mvn, probit_mvn] })
    }
}

impl GlobalsProposal for LogitProbitProposal {
    fn candidates(&self) -> usize {
        2
    }

    fn component(&self, candidate: usize) -> usize {
        candidate
    }

    fn sample(&self, candidate: usize, rng: &mut dyn RngCore) -> Vec<f64> {
        self.candidates[candidate].sample(rng)
    }

    fn ln_density(&self, candidate: usize, globals: &[f64]) -> f64 {
        self.candidates[candidate].ln_density(globals)
    }
}

#[derive(Debug, Clone)]
pub struct LogitProbitRun {
    pub logit: GlmFit,
    pub probit: GlmFit,
    pub k: Vec<f64>,
    pub trace: Trace,
    pub summary: PosteriorSummary,
}

impl LogitProbitRun {
    /// Posterior medians of `θ / k`, the probit-scale coefficients.
    pub fn probit_scale_medians(&self) -> Vec<f64> {
        self.summary.globals.iter().zip(&self.k).map(|(g, k)| g.median / k).collect()
    }
}

/// Fits both links, rescales, and runs the marginal MH sampler over `(α, θ)`.
pub fn run_logit_probit(data: &Dataset, a0: f64, config: &ChainConfig) -> Result<LogitProbitRun> {
    let logit = fit_glm_mle(data, Link::Logit)?;
    let probit = fit_glm_mle(data, Link::Probit)?;
    if !logit.converged || !probit.converged {
        return Err(Error::Numeric("maximum likelihood fit did not converge".into()));
    }
    let k = rescale_ratio(&logit, &probit)?;
    let target = LogitProbitTarget::new(data, &k, a0)?;
    let proposal = LogitProbitProposal::new(&logit, &probit, &k, 1.5)?;
    let trace = run_mh_target(&target, config, &proposal)?;
    let summary = summarize(&trace)?;
    Ok(LogitProbitRun { logit, probit, k, trace, summary })
}

/// Binary responses from an intercept-plus-one-covariate model with
/// covariate `x ~ N(covariate_mean, covariate_sd²)`.
pub fn simulate_binary_regression(
    link: Link,
    coefficients: [f64; 2],
    n: usize,
    covariate: (f64, f64),
    rng: &mut dyn RngCore,
) -> Result<Dataset> {
    let mut x = DMatrix::from_element(n, 2, 1.0);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let xi = covariate.0 + covariate.1 * rng.sample::<f64, _>(StandardNormal);
        x[(i, 1)] = xi;
        let p = link.mean(coefficients[0] + coefficients[1] * xi);
        y.push(if rng.random::<f64>() < p { 1.0 } else { 0.0 });
    }
    Dataset::regression(y, x)
}

/// A subset of design columns, numbered by the integer whose binary digits
/// (least significant first) select the columns; bit 0 is the intercept.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelIndex {
    pub j: usize,
    pub mask: Vec<bool>,
}

impl ModelIndex {
    pub fn new(j: usize, columns: usize) -> Result<Self> {
        if j == 0 || j >= (1 << columns) {
            return Err(Error::Configuration(format!("model index {j} outside 1..{}", (1usize << columns) - 1)));
        }
        Ok(ModelIndex { j, mask: (0..columns).map(|b| (j >> b) & 1 == 1).collect() })
    }

    pub fn columns(&self) -> Vec<usize> {
        self.mask.iter().enumerate().filter(|(_, m)| **m).map(|(c, _)| c).collect()
    }

    pub fn size(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }
}

/// Every non-empty column subset, in increasing `j`.
pub fn enumerate_models(columns: usize) -> Vec<ModelIndex> {
    (1..(1usize << columns)).map(|j| ModelIndex { j, mask: (0..columns).map(|b| (j >> b) & 1 == 1).collect() }).collect()
}

pub const MAX_REGRESSION_COLUMNS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegressionCase {
    /// One coefficient vector; each model uses the entries its mask keeps.
    SharedBeta,
    /// Independent coefficients for every model.
    SeparateBeta,
}

fn columns_of(x: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), cols.len(), |i, j| x[(i, cols[j])])
}

/// Mixture of Gaussian regressions over all column subsets, with a
/// Dirichlet(a0) weight prior, g-priors `N(M, cσ²(XᵀX)⁻¹)` on the
/// coefficients and `π(σ²) ∝ 1/σ²`.
#[derive(Debug, Clone)]
pub struct RegressionMixture {
    pub case: RegressionCase,
    pub a0: f64,
    pub g: f64,
    pub prior_mean: DVector<f64>,
    pub models: Vec<ModelIndex>,
    columns: usize,
    /// Per model: the full-data Gram matrix of its columns.
    grams: Vec<DMatrix<f64>>,
}

impl RegressionMixture {
    pub fn k(&self) -> usize {
        self.models.len()
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    /// Position of model `j` in the component list.
    pub fn component_of(&self, j: usize) -> Option<usize> {
        self.models.iter().position(|m| m.j == j)
    }

    fn gram_full(&self) -> &DMatrix<f64> {
        self.grams.last().expect("the full model is always enumerated")
    }

    fn prior_mean_of(&self, model: &ModelIndex) -> DVector<f64> {
        let cols = model.columns();
        DVector::from_iterator(cols.len(), cols.iter().map(|c| self.prior_mean[*c]))
    }
}

/// Builds the variable-selection mixture. With zero observations the
/// coefficient and variance blocks are left out (only the weights are
/// sampled), which is how prior recovery is checked.
pub fn build_regression_mixture(
    data: &Dataset,
    a0: f64,
    case: RegressionCase,
    g: f64,
    prior_mean: Option<DVector<f64>>,
) -> Result<RegressionMixture> {
    let x = design(data)?;
    let p = x.ncols();
    if p == 0 || p > MAX_REGRESSION_COLUMNS {
        return Err(Error::Design(format!("between 1 and {MAX_REGRESSION_COLUMNS} columns supported, got {p}")));
    }
    if !(a0 > 0.0) || !(g > 0.0) {
        return Err(Error::ParameterDomain(format!("a0 = {a0} and g = {g} must be positive")));
    }
    let prior_mean = prior_mean.unwrap_or_else(|| DVector::zeros(p));
    if prior_mean.len() != p {
        return Err(Error::Contract(format!("prior mean has {} entries for {p} columns", prior_mean.len())));
    }
    if x.nrows() > 0 {
        let rank = x.clone().svd(false, false).rank(1e-10 * x.amax().max(1.0));
        if rank < p {
            return Err(Error::Design(format!("design has rank {rank} < {p} columns")));
        }
    }
    let models = enumerate_models(p);
    let grams = models
        .iter()
        .map(|m| {
            let xj = columns_of(x, &m.columns());
            xj.transpose() * xj
        })
        .collect();
    Ok(RegressionMixture { case, a0, g, prior_mean, models, columns: p, grams })
}

/// Gibbs state of the regression mixture. In the shared case `beta` holds
/// one full-length vector; otherwise one vector per model.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionState {
    pub ln_weights: Vec<f64>,
    pub beta: Vec<DVector<f64>>,
    pub sigma2: f64,
    pub alloc: Allocation,
}

fn mvn_from_precision(
    precision: &DMatrix<f64>,
    linear: &DVector<f64>,
    rng: &mut dyn RngCore,
) -> Result<DVector<f64>> {
    // mean = Q⁻¹ b, draw = mean + L⁻ᵀ z with Q = LLᵀ
    let chol = Cholesky::new(precision.clone())
        .ok_or_else(|| Error::Numeric("conditional precision is not positive definite".into()))?;
    let mean = chol.solve(linear);
    let z = DVector::from_fn(linear.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
    let shift = chol
        .l()
        .transpose()
        .solve_upper_triangular(&z)
        .ok_or_else(|| Error::Numeric("singular Cholesky factor".into()))?;
    Ok(mean + shift)
}

fn inverse_gamma(shape: f64, rate: f64, rng: &mut dyn RngCore) -> Result<f64> {
    let g: f64 = Gamma::new(shape, 1.0)
        .map_err(|e| Error::Numeric(format!("inverse gamma shape {shape}: {e}")))?
        .sample(rng);
    Ok(rate / g)
}

impl RegressionMixture {
    /// Mean of `y_i` under component `j`.
    fn fitted(&self, state: &RegressionState, x: &DMatrix<f64>, i: usize, j: usize) -> f64 {
        let model = &self.models[j];
        match self.case {
            RegressionCase::SharedBeta => model.columns().iter().map(|&c| x[(i, c)] * state.beta[0][c]).sum(),
            RegressionCase::SeparateBeta => {
                model.columns().iter().zip(state.beta[j].iter()).map(|(&c, b)| x[(i, c)] * b).sum()
            }
        }
    }

    fn log_density_table(&self, state: &RegressionState, data: &Dataset) -> Result<LogDensityTable> {
        let x = design(data)?;
        let k = self.k();
        let sd = state.sigma2.sqrt();
        let norm = -0.5 * LN_2PI - sd.ln();
        let mut values = Vec::with_capacity(data.len() * k);
        for (i, y) in data.y.iter().enumerate() {
            for j in 0..k {
                let z = (y - self.fitted(state, x, i, j)) / sd;
                values.push(norm - 0.5 * z * z);
            }
        }
        Ok(LogDensityTable { n: data.len(), k, values })
    }

    /// Starting point: least-squares coefficients, residual variance, equal
    /// weights and every observation on the full model.
    pub fn initial_state(&self, data: &Dataset) -> Result<RegressionState> {
        let x = design(data)?;
        let n = data.len();
        let k = self.k();
        let ols = |cols: &[usize]| -> DVector<f64> {
            if n == 0 {
                return DVector::zeros(cols.len());
            }
            let xj = columns_of(x, cols);
            let y = DVector::from_column_slice(&data.y);
            Cholesky::new(xj.transpose() * &xj)
                .map(|c| c.solve(&(xj.transpose() * y)))
                .unwrap_or_else(|| DVector::zeros(cols.len()))
        };
        let full: Vec<usize> = (0..self.columns).collect();
        let beta_full = ols(&full);
        let sigma2 = if n > self.columns {
            let r = DVector::from_column_slice(&data.y) - x * &beta_full;
            (r.norm_squared() / (n - self.columns) as f64).max(1e-8)
        } else {
            1.0
        };
        let beta = match self.case {
            RegressionCase::SharedBeta => vec![beta_full],
            RegressionCase::SeparateBeta => self.models.iter().map(|m| ols(&m.columns())).collect(),
        };
        Ok(RegressionState {
            ln_weights: vec![-(k as f64).ln(); k],
            beta,
            sigma2,
            alloc: Allocation { labels: vec![k - 1; n] },
        })
    }
}

fn draw_weights(mix: &RegressionMixture, alloc: &Allocation, rng: &mut dyn RngCore) -> Vec<f64> {
    let shapes: Vec<f64> = alloc.counts(mix.k()).iter().map(|c| *c as f64 + mix.a0).collect();
    sample_ln_dirichlet(&shapes, rng)
}

fn refresh_allocation(
    mix: &RegressionMixture,
    state: &RegressionState,
    data: &Dataset,
    rng: &mut dyn RngCore,
) -> Result<Allocation> {
    let table = mix.log_density_table(state, data)?;
    crate::mixture::sample_allocations_from_table(&table, &state.ln_weights, rng)
}

/// One sweep with a shared coefficient vector: weights, `β`, `σ²`, then the
/// allocation.
pub fn regression_gibbs_step_case1(
    mix: &RegressionMixture,
    state: RegressionState,
    data: &Dataset,
    rng: &mut dyn RngCore,
) -> Result<RegressionState> {
    if mix.case != RegressionCase::SharedBeta {
        return Err(Error::Contract("case 1 step on a separate-coefficient mixture".into()));
    }
    let mut state = state;
    state.ln_weights = draw_weights(mix, &state.alloc, rng);
    let n = data.len();
    if n > 0 {
        let x = design(data)?;
        let p = mix.columns;
        let c = mix.g;
        // masked rows X(i)·mask(ζᵢ)
        let mut xz = DMatrix::zeros(n, p);
        for i in 0..n {
            let mask = &mix.models[state.alloc.labels[i]].mask;
            for col in 0..p {
                if mask[col] {
                    xz[(i, col)] = x[(i, col)];
                }
            }
        }
        let y = DVector::from_column_slice(&data.y);
        let xtx = mix.gram_full();
        let s2 = state.sigma2;
        let precision = xtx / (c * s2) + xz.transpose() * &xz / s2;
        let linear = xtx * &mix.prior_mean / (c * s2) + xz.transpose() * &y / s2;
        let beta = mvn_from_precision(&precision, &linear, rng)?;
        let resid = &y - &xz * &beta;
        let dev = &beta - &mix.prior_mean;
        let quad = (dev.transpose() * xtx * &dev)[(0, 0)];
        let shape = 0.5 * (n + p) as f64;
        let rate = 0.5 * resid.norm_squared() + quad / (2.0 * c);
        state.sigma2 = inverse_gamma(shape, rate, rng)?;
        state.beta = vec![beta];
        state.alloc = refresh_allocation(mix, &state, data, rng)?;
    }
    Ok(state)
}

/// One sweep with independent coefficients per model.
pub fn regression_gibbs_step_case2(
    mix: &RegressionMixture,
    state: RegressionState,
    data: &Dataset,
    rng: &mut dyn RngCore,
) -> Result<RegressionState> {
    if mix.case != RegressionCase::SeparateBeta {
        return Err(Error::Contract("case 2 step on a shared-coefficient mixture".into()));
    }
    let mut state = state;
    state.ln_weights = draw_weights(mix, &state.alloc, rng);
    let n = data.len();
    if n > 0 {
        let x = design(data)?;
        let c = mix.g;
        let s2 = state.sigma2;
        let mut rate = 0.0;
        let mut total_coefficients = 0;
        let mut betas = Vec::with_capacity(mix.k());
        for (j, model) in mix.models.iter().enumerate() {
            let cols = model.columns();
            let rows: Vec<usize> = (0..n).filter(|i| state.alloc.labels[*i] == j).collect();
            let xj = DMatrix::from_fn(rows.len(), cols.len(), |r, q| x[(rows[r], cols[q])]);
            let yj = DVector::from_iterator(rows.len(), rows.iter().map(|i| data.y[*i]));
            let gram = &mix.grams[j];
            let mj = mix.prior_mean_of(model);
            let precision = gram / (c * s2) + xj.transpose() * &xj / s2;
            let linear = gram * &mj / (c * s2) + xj.transpose() * &yj / s2;
            let beta = mvn_from_precision(&precision, &linear, rng)?;
            let resid = &yj - &xj * &beta;
            let dev = &beta - &mj;
            rate += resid.norm_squared() + (dev.transpose() * gram * &dev)[(0, 0)] / c;
            total_coefficients += cols.len();
            betas.push(beta);
        }
        state.sigma2 = inverse_gamma(0.5 * (n + total_coefficients) as f64, 0.5 * rate, rng)?;
        state.beta = betas;
        state.alloc = refresh_allocation(mix, &state, data, rng)?;
    }
    Ok(state)
}

/// Runs the variable-selection Gibbs sampler. The trace records the weights
/// and `σ²`, plus the shared coefficients in the shared case.
pub fn run_regression_mixture(mix: &RegressionMixture, data: &Dataset, config: &ChainConfig) -> Result<Trace> {
    config.validate()?;
    let mut rng = chain_rng(config.seed);
    let mut state = mix.initial_state(data)?;
    let mut names = vec!["sigma2".to_string()];
    if mix.case == RegressionCase::SharedBeta {
        names.extend((0..mix.columns).map(|c| format!("beta{c}")));
    }
    let mut trace = Trace::empty(names, config.burn_in, false, true);
    for t in 0..config.iterations {
        state = match mix.case {
            RegressionCase::SharedBeta => regression_gibbs_step_case1(mix, state, data, &mut rng)?,
            RegressionCase::SeparateBeta => regression_gibbs_step_case2(mix, state, data, &mut rng)?,
        };
        if t >= config.burn_in {
            trace.weights.push(state.ln_weights.iter().map(|l| l.exp()).collect());
            let mut g = vec![state.sigma2];
            if mix.case == RegressionCase::SharedBeta {
                g.extend(state.beta[0].iter());
            }
            trace.globals.push(g);
            trace.accepted.push(true);
            trace.accepted_globals.push(true);
            if let Some(c) = trace.allocation_counts.as_mut() {
                c.push(state.alloc.counts(mix.k()));
            }
        }
    }
    Ok(trace)
}

/// Log marginal likelihood of one model under `β ~ N(0, gσ²(XⱼᵀXⱼ)⁻¹)` and
/// `π(σ²) ∝ 1/σ²`:
/// `ln Γ(n/2) - (n/2) ln π - (pⱼ/2) ln(1+g) - (n/2) ln(yᵀy - g/(1+g) yᵀPⱼy)`.
pub fn gprior_log_marginal(data: &Dataset, model: &ModelIndex, g: f64) -> Result<f64> {
    let x = design(data)?;
    if model.mask.len() != x.ncols() {
        return Err(Error::Contract(format!("model mask covers {} columns, design has {}", model.mask.len(), x.ncols())));
    }
    let n = data.len() as f64;
    let xj = columns_of(x, &model.columns());
    let y = DVector::from_column_slice(&data.y);
    let chol = Cholesky::new(xj.transpose() * &xj)
        .ok_or_else(|| Error::Design(format!("columns of model {} are rank deficient", model.j)))?;
    let xty = xj.transpose() * &y;
    let explained = xty.dot(&chol.solve(&xty));
    let s = y.norm_squared() - g / (1.0 + g) * explained;
    if !(s > 0.0) {
        return Err(Error::Numeric("degenerate residual sum of squares".into()));
    }
    Ok(ln_gamma(0.5 * n) - 0.5 * n * std::f64::consts::PI.ln() - 0.5 * model.size() as f64 * g.ln_1p() - 0.5 * n * s.ln())
}

/// Posterior model probabilities under equal prior model weights.
pub fn gprior_model_posterior(data: &Dataset, models: &[ModelIndex], g: f64) -> Result<Vec<f64>> {
    let logs = models.iter().map(|m| gprior_log_marginal(data, m, g)).collect::<Result<Vec<_>>>()?;
    let norm = log_sum_exp(&logs);
    Ok(logs.iter().map(|l| (l - norm).exp()).collect())
}

/// Design used for the variable-selection experiments: intercept,
/// `X₁ ~ N(0,1)`, `X₂ ~ Bernoulli(½)`, `X₃ ~ U(10, 11)`, and
/// `y = Xβ + N(0, σ²)`.
pub fn simulate_selection_design(n: usize, beta: &[f64; 4], sigma: f64, rng: &mut dyn RngCore) -> Result<Dataset> {
    let mut x = DMatrix::from_element(n, 4, 1.0);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        x[(i, 1)] = rng.sample::<f64, _>(StandardNormal);
        x[(i, 2)] = if rng.random::<f64>() < 0.5 { 1.0 } else { 0.0 };
        x[(i, 3)] = 10.0 + rng.random::<f64>();
        let mean: f64 = (0..4).map(|c| x[(i, c)] * beta[c]).sum();
        y.push(mean + sigma * rng.sample::<f64, _>(StandardNormal));
    }
    if n < 4 {
        return Ok(Dataset { y, censored: None, design: Some(x) });
    }
    Dataset::regression(y, x)
}
