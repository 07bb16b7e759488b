//! The encompassing mixture: component bindings onto shared global
//! parameters, weight priors, datasets, allocations and the two likelihoods.
//!
//! Components are indexed from zero. The scalar weight called α in the
//! two-model setting is `weights[0]`, the weight of the first component.
//!
//! Note on naming: latent component labels live in [`Allocation`]; the
//! Logistic scale parameter is an ordinary entry of [`Params`]. The two are
//! unrelated even though the usual notation writes both with the same letter.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::distributions::{moment_match, open01, Component, Family, Params};
use crate::error::{Error, Result};
use crate::numeric::log_sum_exp;

/// Where a single component parameter comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ParamSource {
    /// Global slot `i`, shared by every component that names it.
    Slot(usize),
    /// A constant.
    Fixed(f64),
    /// `slot * factor`.
    Scaled { slot: usize, factor: f64 },
    /// Geometric success probability `1 / (1 + mean)` matching a mean slot.
    GeometricFromMean(usize),
}

impl ParamSource {
    fn value(&self, globals: &[f64]) -> f64 {
        match *self {
            ParamSource::Slot(i) => globals[i],
            ParamSource::Fixed(v) => v,
            ParamSource::Scaled { slot, factor } => globals[slot] * factor,
            ParamSource::GeometricFromMean(slot) => 1.0 / (1.0 + globals[slot]),
        }
    }

    fn slot(&self) -> Option<usize> {
        match *self {
            ParamSource::Slot(i) => Some(i),
            ParamSource::Fixed(_) => None,
            ParamSource::Scaled { slot, .. } => Some(slot),
            ParamSource::GeometricFromMean(slot) => Some(slot),
        }
    }
}

/// How a component's parameters are obtained from the global slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Binding {
    /// One source per family parameter.
    Direct(Vec<ParamSource>),
    /// Normal, Gumbel or Logistic member whose mean and variance are the
    /// given slots.
    MomentMatched { location: usize, variance: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentBinding {
    pub family: Family,
    pub binding: Binding,
}

impl ComponentBinding {
    pub fn direct(family: Family, sources: Vec<ParamSource>) -> Self {
        ComponentBinding { family, binding: Binding::Direct(sources) }
    }

    pub fn moment_matched(family: Family, location: usize, variance: usize) -> Self {
        ComponentBinding { family, binding: Binding::MomentMatched { location, variance } }
    }

    /// Global slots this component reads.
    pub fn slots(&self) -> Vec<usize> {
        match &self.binding {
            Binding::Direct(sources) => sources.iter().filter_map(ParamSource::slot).collect(),
            Binding::MomentMatched { location, variance } => vec![*location, *variance],
        }
    }

    pub fn params(&self, globals: &[f64]) -> Result<Params> {
        match &self.binding {
            Binding::Direct(sources) => Ok(Params(sources.iter().map(|s| s.value(globals)).collect())),
            Binding::MomentMatched { location, variance } => {
                let matched = moment_match(globals[*location], globals[*variance])?;
                match self.family {
                    Family::Normal => Ok(matched.normal),
                    Family::Gumbel => Ok(matched.gumbel),
                    Family::Logistic => Ok(matched.logistic),
                    other => Err(Error::Configuration(format!(
                        "{} cannot be moment matched",
                        other.name()
                    ))),
                }
            }
        }
    }

    pub fn resolve(&self, globals: &[f64]) -> Result<Component> {
        Component::new(self.family, &self.params(globals)?)
    }
}

/// Dirichlet prior on the weights (Beta when there are two components).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightPrior {
    concentration: Vec<f64>,
}

impl WeightPrior {
    pub fn new(concentration: Vec<f64>) -> Result<Self> {
        if concentration.is_empty() || concentration.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
            return Err(Error::ParameterDomain(format!(
                "weight prior concentrations must be positive, got {concentration:?}"
            )));
        }
        Ok(WeightPrior { concentration })
    }

    pub fn symmetric(k: usize, a0: f64) -> Result<Self> {
        Self::new(vec![a0; k])
    }

    pub fn concentration(&self) -> &[f64] {
        &self.concentration
    }

    pub fn len(&self) -> usize {
        self.concentration.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concentration.is_empty()
    }

    /// Unnormalised log density at log weights.
    pub fn ln_kernel(&self, ln_weights: &[f64]) -> f64 {
        self.concentration
            .iter()
            .zip(ln_weights)
            .map(|(a, lw)| if *a == 1.0 { 0.0 } else { (a - 1.0) * lw })
            .sum()
    }
}

/// Prior on one global slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GlobalPrior {
    /// Improper uniform on the real line.
    Flat,
    /// Improper `1/x` on `(0, ∞)`: Jeffreys for a rate, or `1/σ²` on a variance.
    Reciprocal,
    Normal { mean: f64, sd: f64 },
}

impl GlobalPrior {
    pub fn ln_density(&self, x: f64) -> f64 {
        match *self {
            GlobalPrior::Flat => {
                if x.is_finite() {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            GlobalPrior::Reciprocal => {
                if x > 0.0 && x.is_finite() {
                    -x.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            GlobalPrior::Normal { mean, sd } => {
                let z = (x - mean) / sd;
                -crate::numeric::LN_SQRT_2PI - sd.ln() - 0.5 * z * z
            }
        }
    }

    pub fn is_proper(&self) -> bool {
        matches!(self, GlobalPrior::Normal { .. })
    }
}

/// Data condition under which the posterior with improper global priors is
/// proper.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Propriety {
    /// All global priors are proper.
    Always,
    /// At least one observation.
    NonEmpty,
    /// Count data with a positive total (Jeffreys prior on a Poisson rate).
    PositiveSum,
    /// At least two distinct uncensored responses.
    DistinctUncensored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub components: Vec<ComponentBinding>,
    pub weight_prior: WeightPrior,
    pub global_priors: Vec<GlobalPrior>,
    pub global_names: Vec<String>,
    pub propriety: Propriety,
}

impl MixtureSpec {
    pub fn new(
        components: Vec<ComponentBinding>,
        weight_prior: WeightPrior,
        global_priors: Vec<GlobalPrior>,
        global_names: Vec<String>,
        propriety: Propriety,
    ) -> Result<Self> {
        let spec = MixtureSpec { components, weight_prior, global_priors, global_names, propriety };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.components.len();
        if k < 2 {
            return Err(Error::Configuration(format!("a mixture test needs at least two components, got {k}")));
        }
        if self.weight_prior.len() != k {
            return Err(Error::Configuration(format!(
                "{k} components but {} weight concentrations",
                self.weight_prior.len()
            )));
        }
        if self.global_names.len() != self.global_priors.len() {
            return Err(Error::Configuration("one name per global slot is required".into()));
        }
        let slots = self.global_priors.len();
        for (j, c) in self.components.iter().enumerate() {
            if let Binding::Direct(sources) = &c.binding {
                if sources.len() != c.family.arity() {
                    return Err(Error::Configuration(format!(
                        "component {j} ({}) binds {} parameters, family takes {}",
                        c.family.name(),
                        sources.len(),
                        c.family.arity()
                    )));
                }
            }
            if let Some(bad) = c.slots().into_iter().find(|s| *s >= slots) {
                return Err(Error::Configuration(format!("component {j} reads missing global slot {bad}")));
            }
        }
        let improper = self.global_priors.iter().any(|p| !p.is_proper());
        if improper && self.propriety == Propriety::Always {
            return Err(Error::Configuration(
                "improper global prior declared without a propriety condition".into(),
            ));
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn n_globals(&self) -> usize {
        self.global_priors.len()
    }

    pub fn resolve(&self, globals: &[f64]) -> Result<Vec<Component>> {
        if globals.len() != self.n_globals() {
            return Err(Error::Contract(format!(
                "expected {} global values, got {}",
                self.n_globals(),
                globals.len()
            )));
        }
        self.components.iter().map(|c| c.resolve(globals)).collect()
    }

    pub fn ln_global_prior(&self, globals: &[f64]) -> f64 {
        self.global_priors.iter().zip(globals).map(|(p, g)| p.ln_density(*g)).sum()
    }

    /// Fails when the data do not make the posterior proper.
    pub fn check_propriety(&self, data: &Dataset) -> Result<()> {
        match self.propriety {
            Propriety::Always => Ok(()),
            Propriety::NonEmpty if data.len() > 0 => Ok(()),
            Propriety::NonEmpty => {
                Err(Error::Propriety("an improper location prior needs at least one observation".into()))
            }
            Propriety::PositiveSum if data.y.iter().sum::<f64>() >= 1.0 => Ok(()),
            Propriety::PositiveSum => Err(Error::Propriety(
                "the Jeffreys prior on the rate needs a positive count total; \
                 with all-zero data the conditional on the rate is not integrable at 0"
                    .into(),
            )),
            Propriety::DistinctUncensored if crate::survival::propriety_check(data) => Ok(()),
            Propriety::DistinctUncensored => Err(Error::Propriety(
                "at least two distinct uncensored observations are required".into(),
            )),
        }
    }
}

/// Observations, optional right-censoring flags and optional design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub y: Vec<f64>,
    pub censored: Option<Vec<bool>>,
    pub design: Option<DMatrix<f64>>,
}

impl Dataset {
    pub fn iid(y: Vec<f64>) -> Self {
        Dataset { y, censored: None, design: None }
    }

    pub fn censored(y: Vec<f64>, censored: Vec<bool>) -> Result<Self> {
        if censored.len() != y.len() {
            return Err(Error::Contract(format!(
                "{} observations but {} censoring flags",
                y.len(),
                censored.len()
            )));
        }
        Ok(Dataset { y, censored: Some(censored), design: None })
    }

    /// Regression data; `design` must include the intercept column.
    pub fn regression(y: Vec<f64>, design: DMatrix<f64>) -> Result<Self> {
        if design.nrows() != y.len() {
            return Err(Error::Design(format!(
                "{} responses but {} design rows",
                y.len(),
                design.nrows()
            )));
        }
        if y.len() > 0 {
            let rank = design.clone().svd(false, false).rank(1e-10 * design.norm().max(1.0));
            if rank < design.ncols() {
                return Err(Error::Design(format!(
                    "design has rank {rank} < {} columns",
                    design.ncols()
                )));
            }
        }
        Ok(Dataset { y, censored: None, design: Some(design) })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn is_censored(&self, i: usize) -> bool {
        self.censored.as_ref().is_some_and(|c| c[i])
    }
}

/// Latent component label of every observation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    pub labels: Vec<usize>,
}

impl Allocation {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if let Some((i, l)) = labels.iter().enumerate().find(|(_, l)| **l >= k) {
            return Err(Error::Contract(format!("label {l} of observation {i} outside 0..{k}")));
        }
        Ok(Allocation { labels })
    }

    pub fn counts(&self, k: usize) -> Vec<usize> {
        let mut counts = vec![0; k];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationStats {
    pub counts: Vec<usize>,
    pub sums: Vec<f64>,
}

/// Per-component observation counts and sums.
pub fn allocation_stats(alloc: &Allocation, data: &Dataset, k: usize) -> AllocationStats {
    let mut counts = vec![0; k];
    let mut sums = vec![0.0; k];
    for (&l, &y) in alloc.labels.iter().zip(&data.y) {
        counts[l] += 1;
        sums[l] += y;
    }
    AllocationStats { counts, sums }
}

pub(crate) fn check_simplex(weights: &[f64], k: usize) -> Result<()> {
    if weights.len() != k {
        return Err(Error::Contract(format!("{} weights for {k} components", weights.len())));
    }
    let sum: f64 = weights.iter().sum();
    if weights.iter().any(|w| !(*w >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
        return Err(Error::Contract(format!("weights {weights:?} are not on the simplex")));
    }
    Ok(())
}

/// Row-major `n × K` table of per-observation component log densities.
#[derive(Debug, Clone, PartialEq)]
pub struct LogDensityTable {
    pub n: usize,
    pub k: usize,
    pub values: Vec<f64>,
}

impl LogDensityTable {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.k..(i + 1) * self.k]
    }

    /// `Σᵢ log Σⱼ wⱼ fⱼ(xᵢ)` from log weights.
    pub fn mixture_log_likelihood(&self, ln_weights: &[f64]) -> f64 {
        let mut total = 0.0;
        let mut buf = vec![0.0; self.k];
        for i in 0..self.n {
            for (j, (b, lf)) in buf.iter_mut().zip(self.row(i)).enumerate() {
                let lw = ln_weights[j];
                *b = if lw == f64::NEG_INFINITY { f64::NEG_INFINITY } else { lw + lf };
            }
            total += log_sum_exp(&buf);
        }
        total
    }

    /// `Σᵢ log f_{ζᵢ}(xᵢ)`.
    pub fn allocated_log_likelihood(&self, alloc: &Allocation) -> f64 {
        alloc.labels.iter().enumerate().map(|(i, &l)| self.values[i * self.k + l]).sum()
    }
}

/// Evaluate every component at every observation, honouring censoring.
pub fn component_log_densities(components: &[Component], data: &Dataset) -> Result<LogDensityTable> {
    let k = components.len();
    let n = data.len();
    let mut values = Vec::with_capacity(n * k);
    match &data.censored {
        None => {
            for &y in &data.y {
                values.extend(components.iter().map(|c| c.ln_pdf(y)));
            }
        }
        Some(flags) => {
            for (&y, &c) in data.y.iter().zip(flags) {
                for comp in components {
                    values.push(if c { comp.ln_censored_factor(y)? } else { comp.ln_pdf(y) });
                }
            }
        }
    }
    Ok(LogDensityTable { n, k, values })
}

/// Observed-data log likelihood of the mixture.
pub fn mixture_log_likelihood(
    spec: &MixtureSpec,
    globals: &[f64],
    weights: &[f64],
    data: &Dataset,
) -> Result<f64> {
    check_simplex(weights, spec.k())?;
    let components = spec.resolve(globals)?;
    let table = component_log_densities(&components, data)?;
    let ln_w: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
    Ok(table.mixture_log_likelihood(&ln_w))
}

/// Completed log likelihood given an allocation.
pub fn completed_log_likelihood(
    spec: &MixtureSpec,
    globals: &[f64],
    weights: &[f64],
    data: &Dataset,
    alloc: &Allocation,
) -> Result<f64> {
    check_simplex(weights, spec.k())?;
    if alloc.labels.len() != data.len() {
        return Err(Error::Contract(format!(
            "allocation has {} labels for {} observations",
            alloc.labels.len(),
            data.len()
        )));
    }
    let components = spec.resolve(globals)?;
    let table = component_log_densities(&components, data)?;
    let counts = Allocation::new(alloc.labels.clone(), spec.k())?.counts(spec.k());
    let weight_term: f64 = counts
        .iter()
        .zip(weights)
        .map(|(&n, &w)| if n == 0 { 0.0 } else { n as f64 * w.ln() })
        .sum();
    Ok(weight_term + table.allocated_log_likelihood(alloc))
}

/// Draw every label independently from its conditional given weights and
/// component densities.
pub fn sample_allocations_from_table<R: Rng + ?Sized>(
    table: &LogDensityTable,
    ln_weights: &[f64],
    rng: &mut R,
) -> Result<Allocation> {
    let mut labels = Vec::with_capacity(table.n);
    let mut probs = vec![0.0; table.k];
    for i in 0..table.n {
        let row = table.row(i);
        let mut max = f64::NEG_INFINITY;
        for (p, (lf, lw)) in probs.iter_mut().zip(row.iter().zip(ln_weights)) {
            *p = if *lw == f64::NEG_INFINITY { f64::NEG_INFINITY } else { lf + lw };
            max = max.max(*p);
        }
        if max == f64::NEG_INFINITY || max.is_nan() {
            return Err(Error::DegenerateSupport { index: i });
        }
        let mut total = 0.0;
        for p in probs.iter_mut() {
            *p = (*p - max).exp();
            total += *p;
        }
        let mut u = rng.random::<f64>() * total;
        let mut label = table.k - 1;
        for (j, p) in probs.iter().enumerate() {
            if u < *p {
                label = j;
                break;
            }
            u -= p;
        }
        // Guard against landing on a zero-probability tail through rounding.
        if probs[label] == 0.0 {
            label = probs.iter().rposition(|p| *p > 0.0).expect("max is finite");
        }
        labels.push(label);
    }
    Ok(Allocation { labels })
}

pub fn sample_allocations<R: Rng + ?Sized>(
    spec: &MixtureSpec,
    globals: &[f64],
    weights: &[f64],
    data: &Dataset,
    rng: &mut R,
) -> Result<Allocation> {
    check_simplex(weights, spec.k())?;
    let components = spec.resolve(globals)?;
    let table = component_log_densities(&components, data)?;
    let ln_w: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
    sample_allocations_from_table(&table, &ln_w, rng)
}

/// `ln G` for `G ~ Gamma(shape, 1)`, safe for tiny shapes where `G` itself
/// underflows.
pub(crate) fn ln_gamma_draw<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape >= 1.0 {
        Gamma::new(shape, 1.0).expect("positive shape").sample(rng).ln()
    } else {
        let g = Gamma::new(shape + 1.0, 1.0).expect("positive shape").sample(rng);
        g.ln() + open01(rng).ln() / shape
    }
}

/// Log weights of one Dirichlet draw with the given concentrations.
pub fn sample_ln_dirichlet<R: Rng + ?Sized>(concentration: &[f64], rng: &mut R) -> Vec<f64> {
    let mut draws: Vec<f64> = concentration.iter().map(|&a| ln_gamma_draw(a, rng)).collect();
    let norm = log_sum_exp(&draws);
    for d in draws.iter_mut() {
        *d -= norm;
    }
    draws
}

/// One draw from the weight conditional `Dirichlet(counts + concentration)`.
pub fn sample_weights_conditional<R: Rng + ?Sized>(
    counts: &[usize],
    prior: &WeightPrior,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if counts.len() != prior.len() {
        return Err(Error::Contract(format!(
            "{} counts for a {}-component weight prior",
            counts.len(),
            prior.len()
        )));
    }
    let shapes: Vec<f64> =
        counts.iter().zip(prior.concentration()).map(|(&n, &a)| n as f64 + a).collect();
    Ok(sample_ln_dirichlet(&shapes, rng).into_iter().map(f64::exp).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pois_geo(a0: f64) -> MixtureSpec {
        MixtureSpec::new(
            vec![
                ComponentBinding::direct(Family::Poisson, vec![ParamSource::Slot(0)]),
                ComponentBinding::direct(Family::GeometricFailures, vec![ParamSource::GeometricFromMean(0)]),
            ],
            WeightPrior::symmetric(2, a0).unwrap(),
            vec![GlobalPrior::Reciprocal],
            vec!["lambda".into()],
            Propriety::PositiveSum,
        )
        .unwrap()
    }

    fn twin_normals() -> MixtureSpec {
        let c = ComponentBinding::direct(Family::Normal, vec![ParamSource::Slot(0), ParamSource::Fixed(1.0)]);
        MixtureSpec::new(
            vec![c.clone(), c],
            WeightPrior::symmetric(2, 0.5).unwrap(),
            vec![GlobalPrior::Normal { mean: 0.0, sd: 1.0 }],
            vec!["mu".into()],
            Propriety::Always,
        )
        .unwrap()
    }

    #[test]
    fn boundary_weight_reduces_to_first_component() {
        let spec = pois_geo(0.5);
        let data = Dataset::iid(vec![0.0, 3.0, 7.0, 2.0]);
        let mix = mixture_log_likelihood(&spec, &[4.0], &[1.0, 0.0], &data).unwrap();
        let direct: f64 = data
            .y
            .iter()
            .map(|&y| crate::distributions::log_density(Family::Poisson, &Params(vec![4.0]), y).unwrap())
            .sum();
        assert_eq!(mix, direct);
        let completed = completed_log_likelihood(
            &spec,
            &[4.0],
            &[1.0, 0.0],
            &data,
            &Allocation::new(vec![0; 4], 2).unwrap(),
        )
        .unwrap();
        assert_eq!(completed, direct);
    }

    #[test]
    fn identical_components_ignore_weights() {
        let spec = twin_normals();
        let data = Dataset::iid(vec![0.3, -1.2, 2.5]);
        let a = mixture_log_likelihood(&spec, &[0.1], &[0.2, 0.8], &data).unwrap();
        let b = mixture_log_likelihood(&spec, &[0.1], &[0.9, 0.1], &data).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn scalar_oracle_for_poisson_geometric() {
        // Independent scalar evaluation of log(α e^{-λ}λ^x/x! + (1-α) p (1-p)^x).
        let spec = pois_geo(0.5);
        let data = Dataset::iid(vec![0.0, 1.0, 2.0]);
        let lam: f64 = 4.0;
        let p = 1.0 / (1.0 + lam);
        let fact = [1.0, 1.0, 2.0];
        let expected: f64 = (0..3)
            .map(|x| {
                let pois = (-lam).exp() * lam.powi(x) / fact[x as usize];
                let geo = p * (1.0 - p).powi(x);
                (0.5 * pois + 0.5 * geo).ln()
            })
            .sum();
        let got = mixture_log_likelihood(&spec, &[lam], &[0.5, 0.5], &data).unwrap();
        assert!((got - expected).abs() < 1e-13, "{got} vs {expected}");
    }

    #[test]
    fn off_simplex_weights_rejected() {
        let spec = pois_geo(0.5);
        let data = Dataset::iid(vec![1.0]);
        assert!(matches!(
            mixture_log_likelihood(&spec, &[1.0], &[0.5, 0.6], &data),
            Err(Error::Contract(_))
        ));
        assert!(mixture_log_likelihood(&spec, &[1.0], &[0.5 + 5e-13, 0.5], &data).is_ok());
    }

    #[test]
    fn weight_factor_arithmetic() {
        let spec = twin_normals();
        let data = Dataset::iid(vec![0.0; 4]);
        let alloc = Allocation::new(vec![0, 0, 0, 1], 2).unwrap();
        let completed = completed_log_likelihood(&spec, &[0.0], &[0.5, 0.5], &data, &alloc).unwrap();
        let lf = 4.0 * crate::distributions::log_density(Family::Normal, &Params(vec![0.0, 1.0]), 0.0).unwrap();
        assert!((completed - (lf + 4.0 * 0.5f64.ln())).abs() < 1e-13);
    }

    #[test]
    fn stats_partition() {
        let data = Dataset::iid(vec![3.0, 0.0, 5.0]);
        let alloc = Allocation::new(vec![0, 0, 1], 2).unwrap();
        let s = allocation_stats(&alloc, &data, 2);
        assert_eq!(s.counts, vec![2, 1]);
        assert_eq!(s.sums, vec![3.0, 5.0]);
        let s = allocation_stats(&Allocation::new(vec![1; 3], 2).unwrap(), &data, 2);
        assert_eq!(s.counts, vec![0, 3]);
        assert!(Allocation::new(vec![0, 2], 2).is_err());
    }

    #[test]
    fn allocation_probabilities() {
        let spec = pois_geo(0.5);
        let data = Dataset::iid(vec![0.0; 20_000]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let alloc = sample_allocations(&spec, &[4.0], &[0.5, 0.5], &data, &mut rng).unwrap();
        let freq = alloc.counts(2)[0] as f64 / 20_000.0;
        let a = 0.5 * (-4.0f64).exp();
        let expected = a / (a + 0.5 * 0.2);
        assert!((freq - expected).abs() < 0.01, "{freq} vs {expected}");

        let alloc = sample_allocations(&spec, &[4.0], &[1.0, 0.0], &data, &mut rng).unwrap();
        assert!(alloc.labels.iter().all(|&l| l == 0));

        let spec = twin_normals();
        let data = Dataset::iid(vec![0.4; 100_000]);
        let alloc = sample_allocations(&spec, &[0.0], &[0.5, 0.5], &data, &mut rng).unwrap();
        let freq = alloc.counts(2)[0] as f64 / 100_000.0;
        assert!((freq - 0.5).abs() < 0.01);
    }

    #[test]
    fn degenerate_observation_is_an_error() {
        let spec = pois_geo(0.5);
        let data = Dataset::iid(vec![1.0, 2.5]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let err = sample_allocations(&spec, &[4.0], &[0.5, 0.5], &data, &mut rng).unwrap_err();
        assert!(matches!(err, Error::DegenerateSupport { index: 1 }));
    }

    #[test]
    fn weight_conditional_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let draws = 100_000;
        let check = |counts: &[usize], a0: f64, expected: &[f64], tol: f64, rng: &mut ChaCha8Rng| {
            let prior = WeightPrior::symmetric(counts.len(), a0).unwrap();
            let mut sums = vec![0.0; counts.len()];
            for _ in 0..draws {
                let w = sample_weights_conditional(counts, &prior, rng).unwrap();
                for (s, x) in sums.iter_mut().zip(w) {
                    *s += x;
                }
            }
            for (s, e) in sums.iter().zip(expected) {
                assert!((s / draws as f64 - e).abs() < tol, "{} vs {e}", s / draws as f64);
            }
        };
        check(&[0, 0], 0.5, &[0.5, 0.5], 0.005, &mut rng);
        check(&[7, 3], 0.5, &[7.5 / 11.0, 3.5 / 11.0], 0.005, &mut rng);
        check(&[2, 0, 1], 1.0, &[0.5, 1.0 / 6.0, 2.0 / 6.0], 0.01, &mut rng);
    }

    #[test]
    fn tiny_concentrations_stay_on_simplex() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let prior = WeightPrior::symmetric(15, 0.01).unwrap();
        for _ in 0..1000 {
            let w = sample_weights_conditional(&[0; 15], &prior, &mut rng).unwrap();
            let s: f64 = w.iter().sum();
            assert!((s - 1.0).abs() < 1e-12 && w.iter().all(|x| *x >= 0.0));
        }
    }

    #[test]
    fn spec_validation() {
        let c = ComponentBinding::direct(Family::Normal, vec![ParamSource::Slot(0), ParamSource::Fixed(1.0)]);
        assert!(MixtureSpec::new(
            vec![c.clone()],
            WeightPrior::symmetric(1, 1.0).unwrap(),
            vec![GlobalPrior::Flat],
            vec!["mu".into()],
            Propriety::NonEmpty
        )
        .is_err());
        assert!(MixtureSpec::new(
            vec![c.clone(), c.clone()],
            WeightPrior::symmetric(3, 1.0).unwrap(),
            vec![GlobalPrior::Flat],
            vec!["mu".into()],
            Propriety::NonEmpty
        )
        .is_err());
        assert!(MixtureSpec::new(
            vec![c.clone(), c],
            WeightPrior::symmetric(2, 1.0).unwrap(),
            vec![GlobalPrior::Flat],
            vec!["mu".into()],
            Propriety::Always
        )
        .is_err());
        assert!(WeightPrior::symmetric(2, 0.0).is_err());
    }
}
