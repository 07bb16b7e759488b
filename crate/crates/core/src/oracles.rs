//! Classical Bayes-factor baselines and the quadrature engine used to check
//! every closed form.
//!
//! All marginals are carried on the log scale: with a thousand observations
//! the raw values under- or overflow.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::numeric::{log1m_exp_neg, log_sum_exp, sigmoid, LN_2PI};

/// Log Bayes factor of model 1 against model 2 and the posterior
/// probability of model 1 under equal prior model weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BayesFactorResult {
    pub log_bf: f64,
    pub posterior_prob_m1: f64,
}

impl BayesFactorResult {
    pub fn from_log_bf(log_bf: f64) -> Self {
        BayesFactorResult { log_bf, posterior_prob_m1: sigmoid(log_bf) }
    }

    pub fn bayes_factor(&self) -> f64 {
        self.log_bf.exp()
    }
}

fn require_nonempty(x: &[f64], at_least: usize) -> Result<()> {
    if x.len() < at_least {
        return Err(Error::ParameterDomain(format!(
            "at least {at_least} observation(s) required, got {}",
            x.len()
        )));
    }
    Ok(())
}

/// Poisson versus geometric (failures) with the shared-mean
/// parameterisation `p = 1/(1+λ)` and the Jeffreys prior `1/λ`:
///
/// ```text
/// m₁ = Γ(S) / (n^S Πxᵢ!)        m₂ = Γ(S) Γ(n) / Γ(n+S)
/// B₁₂ = Γ(n+S) / (n^S Πxᵢ! Γ(n))
/// ```
///
/// with `S = Σxᵢ`. For `S = 0` both marginals diverge; their common
/// `Γ(S)` factor cancels and the ratio is reported as its limit.
pub fn bf_poisson_geometric(x: &[f64]) -> Result<BayesFactorResult> {
    require_nonempty(x, 1)?;
    check_counts(x)?;
    let n = x.len() as f64;
    let s: f64 = x.iter().sum();
    let ln_fact: f64 = x.iter().map(|xi| ln_gamma(xi + 1.0)).sum();
    let log_bf = ln_gamma(n + s) - s * n.ln() - ln_fact - ln_gamma(n);
    Ok(BayesFactorResult::from_log_bf(log_bf))
}

/// The Bayes factor as printed alongside the Poisson–geometric example,
/// `n^{S} Πxᵢ! Γ(n+2+S) / Γ(n+2)`. Kept for comparison only: it does not
/// agree with the marginal likelihoods of the two models (see
/// [`bf_poisson_geometric`]).
pub fn bf_poisson_geometric_as_printed(x: &[f64]) -> Result<BayesFactorResult> {
    require_nonempty(x, 1)?;
    check_counts(x)?;
    let n = x.len() as f64;
    let s: f64 = x.iter().sum();
    let ln_fact: f64 = x.iter().map(|xi| ln_gamma(xi + 1.0)).sum();
    let log_bf = if s == 0.0 { 0.0 } else { s * n.ln() } + ln_fact + ln_gamma(n + 2.0 + s) - ln_gamma(n + 2.0);
    Ok(BayesFactorResult::from_log_bf(log_bf))
}

fn check_counts(x: &[f64]) -> Result<()> {
    if let Some(bad) = x.iter().find(|v| **v < 0.0 || v.fract() != 0.0 || !v.is_finite()) {
        return Err(Error::ParameterDomain(format!("{bad} is not a count")));
    }
    Ok(())
}

fn sum_sq_dev(x: &[f64]) -> f64 {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - mean).powi(2)).sum()
}

/// `N(θ,1)` versus `N(θ,2)` under a flat prior on θ:
/// `B₁₂ = 2^{(n-1)/2} exp(-¼ Σ(xᵢ-x̄)²)`.
pub fn bf_normal_var(x: &[f64]) -> Result<BayesFactorResult> {
    require_nonempty(x, 1)?;
    let n = x.len() as f64;
    let log_bf = 0.5 * (n - 1.0) * std::f64::consts::LN_2 - 0.25 * sum_sq_dev(x);
    Ok(BayesFactorResult::from_log_bf(log_bf))
}

/// `N(0,1)` against `N(μ,1)` with `μ ~ N(0,1)`:
/// `B₀₁ = √(n+1) exp(-S²/(2(n+1)))`, `S = Σxᵢ`.
pub fn bf_point_null_mean(x: &[f64]) -> Result<BayesFactorResult> {
    require_nonempty(x, 1)?;
    let n = x.len() as f64;
    let s: f64 = x.iter().sum();
    Ok(BayesFactorResult::from_log_bf(0.5 * (n + 1.0).ln() - s * s / (2.0 * (n + 1.0))))
}

/// `ln ∫ Πᵢ N(xᵢ; μ, 1) dμ = -Σ(xᵢ-x̄)²/2 - (n-1)/2 ln 2π - ½ ln n`.
pub fn normal_log_marginal_flat_prior(x: &[f64]) -> Result<f64> {
    require_nonempty(x, 1)?;
    let n = x.len() as f64;
    Ok(-0.5 * sum_sq_dev(x) - 0.5 * (n - 1.0) * LN_2PI - 0.5 * n.ln())
}

/// Posterior of a Laplace location under a flat prior. Between consecutive
/// order statistics the log likelihood is linear in the location, so the
/// posterior is piecewise exponential and both its normalising constant and
/// exact draws are available segment by segment.
#[derive(Debug, Clone)]
pub struct LaplaceLocationPosterior {
    sorted: Vec<f64>,
    scale: f64,
    segments: Vec<Segment>,
    ln_kernel_integral: f64,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    slope: f64,
    ln_mass: f64,
}

impl LaplaceLocationPosterior {
    pub fn new(x: &[f64], scale: f64) -> Result<Self> {
        require_nonempty(x, 1)?;
        if !(scale > 0.0) {
            return Err(Error::ParameterDomain(format!("Laplace scale {scale} must be positive")));
        }
        let mut sorted = x.to_vec();
        if sorted.iter().any(|v| !v.is_finite()) {
            return Err(Error::ParameterDomain("observations must be finite".into()));
        }
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let total: f64 = sorted.iter().sum();
        let mut segments = Vec::with_capacity(n + 1);
        let mut below = 0.0;
        for i in 0..=n {
            // i observations lie below the segment
            if i > 0 {
                below += sorted[i - 1];
            }
            let lo = if i == 0 { f64::NEG_INFINITY } else { sorted[i - 1] };
            let hi = if i == n { f64::INFINITY } else { sorted[i] };
            let above = total - below;
            let slope = (n as f64 - 2.0 * i as f64) / scale;
            let intercept = -(above - below) / scale;
            let ln_mass = segment_ln_mass(lo, hi, slope, intercept);
            segments.push(Segment { lo, hi, slope, ln_mass });
        }
        let masses: Vec<f64> = segments.iter().map(|s| s.ln_mass).collect();
        let ln_kernel_integral = log_sum_exp(&masses);
        Ok(LaplaceLocationPosterior { sorted, scale, segments, ln_kernel_integral })
    }

    /// `ln ∫ exp(-Σ|xᵢ-μ|/b) dμ`.
    pub fn ln_kernel_integral(&self) -> f64 {
        self.ln_kernel_integral
    }

    /// Log marginal likelihood of the Laplace model under a flat prior.
    pub fn ln_marginal(&self) -> f64 {
        let n = self.sorted.len() as f64;
        self.ln_kernel_integral - n * (2.0 * self.scale).ln()
    }

    pub fn ln_kernel(&self, mu: f64) -> f64 {
        -self.sorted.iter().map(|x| (x - mu).abs()).sum::<f64>() / self.scale
    }

    pub fn ln_density(&self, mu: f64) -> f64 {
        if !mu.is_finite() {
            return f64::NEG_INFINITY;
        }
        self.ln_kernel(mu) - self.ln_kernel_integral
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        let mut u: f64 = rng.random();
        let mut chosen = self.segments[self.segments.len() - 1];
        for s in &self.segments {
            let p = (s.ln_mass - self.ln_kernel_integral).exp();
            if u < p {
                chosen = *s;
                break;
            }
            u -= p;
        }
        let v: f64 = crate::distributions::open01(rng);
        let Segment { lo, hi, slope, .. } = chosen;
        if slope == 0.0 {
            lo + v * (hi - lo)
        } else if slope > 0.0 {
            // density ∝ e^{slope (μ - hi)} on (lo, hi]
            let width = hi - lo;
            let tail = if width.is_finite() { (-slope * width).exp() } else { 0.0 };
            hi + (1.0 - v * (1.0 - tail)).ln() / slope
        } else {
            let rate = -slope;
            let width = hi - lo;
            let tail = if width.is_finite() { (-rate * width).exp() } else { 0.0 };
            lo - (1.0 - v * (1.0 - tail)).ln() / rate
        }
    }

    pub fn median_observation(&self) -> f64 {
        crate::numeric::quantile_sorted(&self.sorted, 0.5)
    }

    #[cfg(test)]
    fn segment_count(&self) -> usize {
        self.segments.iter().filter(|s| s.ln_mass > f64::NEG_INFINITY).count()
    }
}

fn segment_ln_mass(lo: f64, hi: f64, slope: f64, intercept: f64) -> f64 {
    if hi <= lo {
        return f64::NEG_INFINITY;
    }
    let width = hi - lo;
    if slope == 0.0 {
        intercept + width.ln()
    } else if slope > 0.0 {
        let tail = if width.is_finite() { log1m_exp_neg(slope * width) } else { 0.0 };
        intercept + slope * hi + tail - slope.ln()
    } else {
        let tail = if width.is_finite() { log1m_exp_neg(-slope * width) } else { 0.0 };
        intercept + slope * lo + tail - (-slope).ln()
    }
}

/// Natural log of `∫ exp{-Σ|xᵢ-μ|/√2} dμ` over the real line, the
/// order-statistics closed form for a Laplace sample with scale √2; with
/// `with_prefactor` the `(2√2)^{-n}` density normalisation is included,
/// giving the log marginal likelihood.
pub fn laplace_marginal_flat_prior(x: &[f64], with_prefactor: bool) -> Result<f64> {
    laplace_log_marginal(x, std::f64::consts::SQRT_2, with_prefactor)
}

/// [`laplace_marginal_flat_prior`] for an arbitrary Laplace scale.
pub fn laplace_log_marginal(x: &[f64], scale: f64, with_prefactor: bool) -> Result<f64> {
    require_nonempty(x, 2)?;
    let posterior = LaplaceLocationPosterior::new(x, scale)?;
    Ok(if with_prefactor { posterior.ln_marginal() } else { posterior.ln_kernel_integral() })
}

/// `N(μ,1)` versus Laplace `L(μ, b)` with a shared flat prior on μ, where
/// `b` is the pair's variance-matched scale `1/√2`.
pub fn bf_normal_laplace(x: &[f64]) -> Result<BayesFactorResult> {
    bf_normal_laplace_with_scale(x, crate::pairs::LAPLACE_PAIR_SCALE)
}

pub fn bf_normal_laplace_with_scale(x: &[f64], laplace_scale: f64) -> Result<BayesFactorResult> {
    require_nonempty(x, 2)?;
    let log_m1 = normal_log_marginal_flat_prior(x)?;
    let log_m2 = laplace_log_marginal(x, laplace_scale, true)?;
    Ok(BayesFactorResult::from_log_bf(log_m1 - log_m2))
}

/// Integration range, with optional interior points where the integrand is
/// not smooth (they become panel boundaries).
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub lower: f64,
    pub upper: f64,
    pub breakpoints: Vec<f64>,
}

impl Domain {
    pub fn new(lower: f64, upper: f64) -> Self {
        Domain { lower, upper, breakpoints: Vec::new() }
    }

    pub fn real_line() -> Self {
        Self::new(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn positive() -> Self {
        Self::new(0.0, f64::INFINITY)
    }

    pub fn with_breakpoints(mut self, points: impl IntoIterator<Item = f64>) -> Self {
        self.breakpoints.extend(points);
        self
    }
}

const QUAD_REL_TOL: f64 = 1e-9;
const QUAD_MAX_PANELS: usize = 4000;

// Gauss–Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Maps a finite parameter `t` onto the domain; returns `(x, dx/dt)`.
#[derive(Clone, Copy)]
enum Map {
    Finite,
    // x = a + t/(1-t), t ∈ [0,1)
    Upper(f64),
    // x = b - t/(1-t), t ∈ [0,1)
    Lower(f64),
}

impl Map {
    fn apply(self, t: f64) -> (f64, f64) {
        match self {
            Map::Finite => (t, 1.0),
            Map::Upper(a) => (a + t / (1.0 - t), 1.0 / ((1.0 - t) * (1.0 - t))),
            Map::Lower(b) => (b - t / (1.0 - t), 1.0 / ((1.0 - t) * (1.0 - t))),
        }
    }
}

struct Panel {
    map: Map,
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15(f: &dyn Fn(f64) -> f64, map: Map, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |t: f64| {
        let (x, jac) = map.apply(t);
        let v = f(x) * jac;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let fc = eval(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = eval(center - dx) + eval(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Natural log of `∫ exp(log_integrand(x)) dx` over `domain`, by globally
/// adaptive Gauss–Kronrod quadrature with relative tolerance 1e-9.
/// Infinite ends are mapped onto finite intervals; the integrand is shifted
/// by its largest probed value before exponentiation.
pub fn log_quadrature_marginal(log_integrand: &dyn Fn(f64) -> f64, domain: &Domain) -> Result<f64> {
    let Domain { lower, upper, .. } = *domain;
    if !(lower < upper) {
        return Err(Error::ParameterDomain(format!("empty integration range ({lower}, {upper})")));
    }
    let mut cuts: Vec<f64> = domain
        .breakpoints
        .iter()
        .copied()
        .filter(|p| *p > lower && *p < upper && p.is_finite())
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    // Finite pieces, plus up to two semi-infinite tails.
    let mut pieces: Vec<(Map, f64, f64)> = Vec::new();
    let inner_lo = if lower.is_finite() { lower } else { cuts.first().copied().unwrap_or(0.0).min(upper) };
    let inner_hi = if upper.is_finite() { upper } else { cuts.last().copied().unwrap_or(0.0).max(inner_lo) };
    if !lower.is_finite() {
        pieces.push((Map::Lower(inner_lo), 0.0, 1.0));
    }
    let mut knots = vec![inner_lo];
    knots.extend(cuts.iter().copied().filter(|c| *c > inner_lo && *c < inner_hi));
    knots.push(inner_hi);
    for w in knots.windows(2) {
        if w[1] > w[0] {
            // start each finite piece with several panels
            let m = 8;
            for j in 0..m {
                let a = w[0] + (w[1] - w[0]) * j as f64 / m as f64;
                let b = w[0] + (w[1] - w[0]) * (j + 1) as f64 / m as f64;
                pieces.push((Map::Finite, a, b));
            }
        }
    }
    if !upper.is_finite() {
        pieces.push((Map::Upper(inner_hi), 0.0, 1.0));
    }
    let mut initial: Vec<(Map, f64, f64)> = Vec::new();
    for (map, a, b) in pieces {
        match map {
            Map::Finite => initial.push((map, a, b)),
            _ => {
                // geometric refinement towards the mapped infinity
                let edges = [0.0, 0.5, 0.75, 0.875, 0.9375, 0.97, 0.99, 0.999, 1.0];
                for e in edges.windows(2) {
                    initial.push((map, a + (b - a) * e[0], a + (b - a) * e[1]));
                }
            }
        }
    }

    // Shift by the largest probed log integrand.
    let mut shift = f64::NEG_INFINITY;
    for &(map, a, b) in &initial {
        for j in 0..=16 {
            let t = a + (b - a) * j as f64 / 16.0;
            let t = if matches!(map, Map::Finite) { t } else { t.min(1.0 - 1e-12) };
            let (x, _) = map.apply(t);
            let v = log_integrand(x);
            if v.is_finite() {
                shift = shift.max(v);
            }
        }
    }
    if shift == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let f = |x: f64| (log_integrand(x) - shift).exp();

    let mut panels: Vec<Panel> = initial
        .into_iter()
        .map(|(map, a, b)| {
            let (value, error) = gk15(&f, map, a, b);
            Panel { map, a, b, value, error }
        })
        .collect();
    loop {
        let total: f64 = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.error).sum();
        if !total.is_finite() || !err.is_finite() {
            return Err(Error::Accuracy { achieved: f64::INFINITY, requested: QUAD_REL_TOL });
        }
        if err <=QUAD_REL_TOL * total.abs() || (total == 0.0 && err == 0.0) {
            if total <= 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            return Ok(shift + total.ln());
        }
        if panels.len() >= QUAD_MAX_PANELS {
            return Err(Error::Accuracy { achieved: err / total.abs(), requested: QUAD_REL_TOL });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .map(|(i, _)| i)
            .expect("panels are never empty");
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            return Err(Error::Accuracy { achieved: err / total.abs(), requested: QUAD_REL_TOL });
        }
        for (a, b) in [(p.a, mid), (mid, p.b)] {
            let (value, error) = gk15(&f, p.map, a, b);
            panels.push(Panel { map: p.map, a, b, value, error });
        }
    }
}

/// `∫ exp(log_integrand(x)) dx` over `domain`; see [`log_quadrature_marginal`].
pub fn quadrature_marginal(log_integrand: &dyn Fn(f64) -> f64, domain: &Domain) -> Result<f64> {
    log_quadrature_marginal(log_integrand, domain).map(f64::exp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_basics() {
        let one = quadrature_marginal(&|l| -l, &Domain::positive()).unwrap();
        assert!((one - 1.0).abs() < 1e-10);
        let phi = quadrature_marginal(&|x| -0.5 * x * x - 0.5 * LN_2PI, &Domain::real_line()).unwrap();
        assert!((phi - 1.0).abs() < 1e-10);
        let g5 = quadrature_marginal(&|l: f64| 4.0 * l.ln() - l, &Domain::positive()).unwrap();
        assert!((g5 / 24.0 - 1.0).abs() < 1e-9);
        // narrow peak far from the origin, away from [0, 1]
        let peak = log_quadrature_marginal(&|x| -0.5 * ((x - 40.0) / 0.01).powi(2), &Domain::new(f64::NEG_INFINITY, 40.0))
            .unwrap();
        assert!((peak - (0.5 * (2.0 * std::f64::consts::PI).sqrt() * 0.01).ln()).abs() < 1e-8, "{peak}");
    }

    #[test]
    fn quadrature_reports_failure() {
        // Non-integrable singularity at 0.
        let r = log_quadrature_marginal(&|l: f64| -l.ln() - l, &Domain::positive());
        assert!(matches!(r, Err(Error::Accuracy { .. })), "{r:?}");
    }

    #[test]
    fn normal_var_examples() {
        assert!((bf_normal_var(&[3.2]).unwrap().bayes_factor() - 1.0).abs() < 1e-15);
        let b = bf_normal_var(&[1.0, -1.0]).unwrap().bayes_factor();
        assert!((b - 0.857_763_884_960_706_8).abs() < 1e-12, "{b}");
    }

    #[test]
    fn poisson_geometric_at_zero() {
        assert!((bf_poisson_geometric(&[0.0]).unwrap().bayes_factor() - 1.0).abs() < 1e-15);
        assert!((bf_poisson_geometric_as_printed(&[0.0]).unwrap().bayes_factor() - 1.0).abs() < 1e-15);
        assert!(bf_poisson_geometric(&[1.5]).is_err());
    }

    #[test]
    fn posterior_probability_invariant() {
        for l in [-800.0, -3.0, 0.0, 2.5, 900.0] {
            let r = BayesFactorResult::from_log_bf(l);
            assert!((0.0..=1.0).contains(&r.posterior_prob_m1));
            assert!((r.posterior_prob_m1 - 1.0 / (1.0 + (-l as f64).exp())).abs() < 1e-15);
        }
    }

    #[test]
    fn laplace_ties_merge() {
        let p = LaplaceLocationPosterior::new(&[1.0, 1.0, 2.0, 2.0, 2.0], 1.0).unwrap();
        assert_eq!(p.segment_count(), 3);
        assert!(laplace_marginal_flat_prior(&[1.0], false).is_err());
    }
}
