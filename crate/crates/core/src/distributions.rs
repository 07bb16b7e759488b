//! Parametric families used as mixture components.
//!
//! Every density is evaluated on the log scale. Points outside a family's
//! support evaluate to [`LOG_ZERO`] instead of failing, so that allocation
//! sampling can compare components with different supports.
//!
//! Parameter conventions (`Params` holds the values in this order):
//!
//! | family              | parameters                         |
//! |---------------------|------------------------------------|
//! | `Poisson`           | rate λ > 0                         |
//! | `GeometricFailures` | success probability p ∈ (0, 1)     |
//! | `Normal`            | location, scale > 0                |
//! | `Laplace`           | location, scale > 0                |
//! | `Gumbel`            | location μ, scale β > 0            |
//! | `Logistic`          | location ξ, scale s > 0            |
//! | `BernoulliLogit`    | success probability ∈ (0, 1)       |
//! | `BernoulliProbit`   | success probability ∈ (0, 1)       |
//!
//! The geometric family counts failures before the first success, so its
//! support starts at zero like the Poisson.

use rand::Rng;
use rand_distr::{Distribution, Gumbel, Normal, Poisson};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::numeric::{ln_normal_cdf, normal_cdf, softplus, LN_SQRT_2PI};

/// Euler–Mascheroni constant, the mean of the standard Gumbel law.
#[allow(clippy::excessive_precision)]
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;

/// Log-density returned outside the support.
pub const LOG_ZERO: f64 = f64::NEG_INFINITY;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Poisson,
    GeometricFailures,
    Normal,
    Laplace,
    Gumbel,
    Logistic,
    BernoulliLogit,
    BernoulliProbit,
}

impl Family {
    pub fn arity(self) -> usize {
        match self {
            Family::Poisson
            | Family::GeometricFailures
            | Family::BernoulliLogit
            | Family::BernoulliProbit => 1,
            Family::Normal | Family::Laplace | Family::Gumbel | Family::Logistic => 2,
        }
    }

    pub fn is_discrete(self) -> bool {
        matches!(
            self,
            Family::Poisson
                | Family::GeometricFailures
                | Family::BernoulliLogit
                | Family::BernoulliProbit
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Poisson => "poisson",
            Family::GeometricFailures => "geometric-failures",
            Family::Normal => "normal",
            Family::Laplace => "laplace",
            Family::Gumbel => "gumbel",
            Family::Logistic => "logistic",
            Family::BernoulliLogit => "bernoulli-logit",
            Family::BernoulliProbit => "bernoulli-probit",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        let family = match name.to_ascii_lowercase().as_str() {
            "poisson" => Family::Poisson,
            "geometric" | "geometric-failures" => Family::GeometricFailures,
            "normal" => Family::Normal,
            "laplace" | "double-exponential" => Family::Laplace,
            "gumbel" => Family::Gumbel,
            "logistic" => Family::Logistic,
            "bernoulli-logit" => Family::BernoulliLogit,
            "bernoulli-probit" => Family::BernoulliProbit,
            other => return Err(Error::ParameterDomain(format!("unknown family `{other}`"))),
        };
        Ok(family)
    }
}

/// Parameter values of one family member, in the order of the table above.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params(pub Vec<f64>);

impl Params {
    pub fn new(values: impl Into<Vec<f64>>) -> Self {
        Params(values.into())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Params {
    fn from(v: Vec<f64>) -> Self {
        Params(v)
    }
}

/// A validated family member. Construct once, evaluate many times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    family: Family,
    a: f64,
    b: f64,
    // ln of the scale (or of the rate / probability for one-parameter families)
    ln_b: f64,
}

impl Component {
    pub fn new(family: Family, params: &Params) -> Result<Self> {
        let v = params.values();
        if v.len() != family.arity() {
            return Err(Error::ParameterDomain(format!(
                "{} takes {} parameter(s), got {}",
                family.name(),
                family.arity(),
                v.len()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::ParameterDomain(format!(
                "{} parameters must be finite: {v:?}",
                family.name()
            )));
        }
        match family {
            Family::Poisson => {
                if v[0] <= 0.0 {
                    return Err(Error::ParameterDomain(format!("Poisson rate {} <= 0", v[0])));
                }
                Ok(Component { family, a: v[0], b: 0.0, ln_b: v[0].ln() })
            }
            Family::GeometricFailures | Family::BernoulliLogit | Family::BernoulliProbit => {
                let p = v[0];
                if !(p > 0.0 && p < 1.0) {
                    return Err(Error::ParameterDomain(format!(
                        "{} probability {p} outside (0, 1)",
                        family.name()
                    )));
                }
                Ok(Component { family, a: p, b: (-p).ln_1p(), ln_b: p.ln() })
            }
            Family::Normal | Family::Laplace | Family::Gumbel | Family::Logistic => {
                if v[1] <= 0.0 {
                    return Err(Error::ParameterDomain(format!(
                        "{} scale {} <= 0",
                        family.name(),
                        v[1]
                    )));
                }
                Ok(Component { family, a: v[0], b: v[1], ln_b: v[1].ln() })
            }
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn params(&self) -> Params {
        match self.family.arity() {
            1 => Params(vec![self.a]),
            _ => Params(vec![self.a, self.b]),
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        match self.family {
            Family::Poisson => {
                if x < 0.0 || x.fract() != 0.0 || !x.is_finite() {
                    return LOG_ZERO;
                }
                x * self.ln_b - self.a - ln_gamma(x + 1.0)
            }
            Family::GeometricFailures => {
                if x < 0.0 || x.fract() != 0.0 || !x.is_finite() {
                    return LOG_ZERO;
                }
                // b holds ln(1 - p)
                self.ln_b + x * self.b
            }
            Family::BernoulliLogit | Family::BernoulliProbit => {
                if x == 1.0 {
                    self.ln_b
                } else if x == 0.0 {
                    self.b
                } else {
                    LOG_ZERO
                }
            }
            Family::Normal => {
                let z = (x - self.a) / self.b;
                -LN_SQRT_2PI - self.ln_b - 0.5 * z * z
            }
            Family::Laplace => -std::f64::consts::LN_2 - self.ln_b - (x - self.a).abs() / self.b,
            Family::Gumbel => {
                let z = (x - self.a) / self.b;
                -self.ln_b - z - (-z).exp()
            }
            Family::Logistic => {
                let z = (x - self.a) / self.b;
                -self.ln_b - z - 2.0 * softplus(-z)
            }
        }
    }

    /// Cumulative distribution function.
    pub fn cdf(&self, x: f64) -> f64 {
        match self.family {
            Family::Normal => normal_cdf((x - self.a) / self.b),
            Family::Laplace => {
                let z = (x - self.a) / self.b;
                if z < 0.0 {
                    0.5 * z.exp()
                } else {
                    1.0 - 0.5 * (-z).exp()
                }
            }
            Family::Gumbel => (-(-(x - self.a) / self.b).exp()).exp(),
            Family::Logistic => crate::numeric::sigmoid((x - self.a) / self.b),
            Family::Poisson | Family::GeometricFailures => {
                if x < 0.0 {
                    return 0.0;
                }
                let top = x.floor() as u64;
                (0..=top).map(|k| self.ln_pdf(k as f64).exp()).sum::<f64>().min(1.0)
            }
            Family::BernoulliLogit | Family::BernoulliProbit => {
                if x < 0.0 {
                    0.0
                } else if x < 1.0 {
                    1.0 - self.a
                } else {
                    1.0
                }
            }
        }
    }

    /// Log of the factor a right-censored observation contributes on the
    /// `y = -log(time)` scale. On that scale a censored time `T > t` is the
    /// event `Y < y`, so the factor is the component's cdf at `y`.
    pub fn ln_censored_factor(&self, y: f64) -> Result<f64> {
        match self.family {
            Family::Normal => Ok(ln_normal_cdf((y - self.a) / self.b)),
            Family::Gumbel => Ok(-(-(y - self.a) / self.b).exp()),
            Family::Logistic => Ok(-softplus(-(y - self.a) / self.b)),
            other => Err(Error::Unsupported(format!(
                "censoring is only defined for normal, gumbel and logistic components, not {}",
                other.name()
            ))),
        }
    }

    pub fn mean(&self) -> f64 {
        match self.family {
            Family::Poisson => self.a,
            Family::GeometricFailures => (1.0 - self.a) / self.a,
            Family::BernoulliLogit | Family::BernoulliProbit => self.a,
            Family::Normal | Family::Laplace | Family::Logistic => self.a,
            Family::Gumbel => self.a + EULER_GAMMA * self.b,
        }
    }

    pub fn variance(&self) -> f64 {
        use std::f64::consts::PI;
        match self.family {
            Family::Poisson => self.a,
            Family::GeometricFailures => (1.0 - self.a) / (self.a * self.a),
            Family::BernoulliLogit | Family::BernoulliProbit => self.a * (1.0 - self.a),
            Family::Normal => self.b * self.b,
            Family::Laplace => 2.0 * self.b * self.b,
            Family::Gumbel => PI * PI * self.b * self.b / 6.0,
            Family::Logistic => PI * PI * self.b * self.b / 3.0,
        }
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.family {
            Family::Poisson => Poisson::new(self.a).expect("validated rate").sample(rng),
            Family::GeometricFailures => {
                rand_distr::Geometric::new(self.a).expect("validated probability").sample(rng) as f64
            }
            Family::BernoulliLogit | Family::BernoulliProbit => {
                if rng.random::<f64>() < self.a {
                    1.0
                } else {
                    0.0
                }
            }
            Family::Normal => Normal::new(self.a, self.b).expect("validated scale").sample(rng),
            Family::Laplace => {
                let u: f64 = rng.random::<f64>() - 0.5;
                self.a - self.b * u.signum() * (-2.0 * u.abs()).ln_1p()
            }
            Family::Gumbel => Gumbel::new(self.a, self.b).expect("validated scale").sample(rng),
            Family::Logistic => {
                let u: f64 = open01(rng);
                self.a + self.b * (u / (1.0 - u)).ln()
            }
        }
    }
}

pub(crate) fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Natural-log density (or mass) of `x`.
pub fn log_density(family: Family, params: &Params, x: f64) -> Result<f64> {
    Ok(Component::new(family, params)?.ln_pdf(x))
}

/// `count` independent draws.
pub fn sample<R: Rng + ?Sized>(
    family: Family,
    params: &Params,
    count: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let component = Component::new(family, params)?;
    Ok((0..count).map(|_| component.sample_one(rng)).collect())
}

/// Log density for an uncensored observation, or the log censoring factor
/// when `censored` is set. Only defined for the three survival families.
pub fn censored_log_density(family: Family, params: &Params, x: f64, censored: bool) -> Result<f64> {
    if !matches!(family, Family::Normal | Family::Gumbel | Family::Logistic) {
        return Err(Error::Unsupported(format!(
            "censored density is not defined for {}",
            family.name()
        )));
    }
    let component = Component::new(family, params)?;
    if censored {
        component.ln_censored_factor(x)
    } else {
        Ok(component.ln_pdf(x))
    }
}

/// Normal, Gumbel and Logistic parameters sharing one mean and variance.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchedParams {
    pub normal: Params,
    pub gumbel: Params,
    pub logistic: Params,
}

/// Parameters of the three survival families with mean `location` and
/// variance `variance`.
pub fn moment_match(location: f64, variance: f64) -> Result<MatchedParams> {
    use std::f64::consts::PI;
    if !(variance > 0.0) || !variance.is_finite() || !location.is_finite() {
        return Err(Error::ParameterDomain(format!(
            "moment matching needs a finite location and a positive variance, got ({location}, {variance})"
        )));
    }
    let gumbel_scale = (6.0 * variance).sqrt() / PI;
    let logistic_scale = (3.0 * variance).sqrt() / PI;
    Ok(MatchedParams {
        normal: Params(vec![location, variance.sqrt()]),
        gumbel: Params(vec![location - EULER_GAMMA * gumbel_scale, gumbel_scale]),
        logistic: Params(vec![location, logistic_scale]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(v: &[f64]) -> Params {
        Params(v.to_vec())
    }

    #[test]
    fn closed_form_points() {
        let ln = |f, v: &[f64], x| log_density(f, &p(v), x).unwrap();
        assert!((ln(Family::Normal, &[0.0, 1.0], 0.0) + 0.918_938_533_204_672_7).abs() < 1e-15);
        assert!((ln(Family::GeometricFailures, &[0.2], 0.0) - 0.2f64.ln()).abs() < 1e-15);
        assert!((ln(Family::Gumbel, &[0.0, 1.0], 0.0) + 1.0).abs() < 1e-15);
        assert!((ln(Family::Poisson, &[4.0], 2.0) - (8.0f64 * (-4.0f64).exp()).ln()).abs() < 1e-13);
        assert!((ln(Family::Laplace, &[0.0, 2.0], 0.0) + 4.0f64.ln()).abs() < 1e-15);
        assert!((ln(Family::Logistic, &[0.0, 1.0], 0.0) + 4.0f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn out_of_support_is_log_zero() {
        assert_eq!(log_density(Family::Poisson, &p(&[4.0]), -1.0).unwrap(), LOG_ZERO);
        assert_eq!(log_density(Family::Poisson, &p(&[4.0]), 1.5).unwrap(), LOG_ZERO);
        assert_eq!(log_density(Family::GeometricFailures, &p(&[0.3]), 0.5).unwrap(), LOG_ZERO);
        assert_eq!(log_density(Family::BernoulliLogit, &p(&[0.3]), 2.0).unwrap(), LOG_ZERO);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        for (f, v) in [
            (Family::Poisson, vec![0.0]),
            (Family::GeometricFailures, vec![1.0]),
            (Family::Normal, vec![0.0, 0.0]),
            (Family::Gumbel, vec![0.0, -1.0]),
            (Family::Normal, vec![0.0]),
            (Family::Laplace, vec![f64::NAN, 1.0]),
        ] {
            assert!(matches!(log_density(f, &p(&v), 0.0), Err(Error::ParameterDomain(_))));
        }
    }

    #[test]
    fn censoring_factors() {
        let c = |f, x| censored_log_density(f, &p(&[0.0, 1.0]), x, true).unwrap();
        assert!((c(Family::Gumbel, 0.0) + 1.0).abs() < 1e-15);
        assert!((c(Family::Logistic, 0.0) + std::f64::consts::LN_2).abs() < 1e-15);
        assert!((c(Family::Normal, 0.0) - 0.5f64.ln()).abs() < 1e-15);
        assert!(matches!(
            censored_log_density(Family::Poisson, &p(&[1.0]), 0.0, true),
            Err(Error::Unsupported(_))
        ));
        for f in [Family::Normal, Family::Gumbel, Family::Logistic] {
            for x in [-3.0, -0.2, 0.0, 1.7] {
                assert_eq!(
                    censored_log_density(f, &p(&[0.3, 1.4]), x, false).unwrap(),
                    log_density(f, &p(&[0.3, 1.4]), x).unwrap()
                );
            }
        }
    }

    #[test]
    fn moment_match_values() {
        let m = moment_match(0.0, 1.0).unwrap();
        assert!((m.gumbel.0[1] - 0.779_696_801_233_676).abs() < 1e-12);
        assert!((m.gumbel.0[0] + 0.450_053_207_545_694_6).abs() < 1e-12);
        assert!((m.logistic.0[1] - 0.551_328_895_421_792).abs() < 1e-12);
        assert_eq!(m.logistic.0[0], 0.0);
        assert!(moment_match(5.0, 0.0).is_err());
        assert!(moment_match(5.0, -1.0).is_err());
    }

    #[test]
    fn sample_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = sample(Family::Poisson, &p(&[4.0]), 100_000, &mut rng).unwrap();
        assert!((crate::numeric::mean(&draws) - 4.0).abs() < 0.05);
        let draws = sample(Family::Logistic, &p(&[0.0, 1.0]), 100_000, &mut rng).unwrap();
        assert!(crate::numeric::median(&draws).abs() < 0.02);
        let draws = sample(Family::Gumbel, &p(&[0.0, 1.0]), 100_000, &mut rng).unwrap();
        assert!((crate::numeric::mean(&draws) - EULER_GAMMA).abs() < 0.02);
        let draws = sample(Family::GeometricFailures, &p(&[0.1]), 100_000, &mut rng).unwrap();
        assert!((crate::numeric::mean(&draws) - 9.0).abs() < 0.15);
        let draws = sample(Family::Laplace, &p(&[1.0, 0.5]), 100_000, &mut rng).unwrap();
        let m = crate::numeric::mean(&draws);
        let v = draws.iter().map(|x| (x - m).powi(2)).sum::<f64>() / draws.len() as f64;
        assert!((m - 1.0).abs() < 0.01 && (v - 0.5).abs() < 0.02);
    }
}
