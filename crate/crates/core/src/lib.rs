//! Bayesian hypothesis testing by mixture estimation.
//!
//! Two (or more) candidate models become the components of an encompassing
//! mixture `α f₁ + (1-α) f₂`, and the posterior of the weights replaces the
//! Bayes factor as the test statistic. The crate provides the component
//! families, the mixture machinery, Gibbs and Metropolis–Hastings samplers,
//! ready-made tests (count models, normal variance and mean tests,
//! normal versus Laplace, logit versus probit, regression variable
//! selection, survival families), classical Bayes-factor baselines, and a
//! batch experiment layer.
//!
//! ```
//! use mixtest::pairs::{build_pair, PairKind};
//! use mixtest::mixture::Dataset;
//! use mixtest::samplers::{run_mh, summarize, ChainConfig};
//!
//! let data = Dataset::iid(vec![3.0, 5.0, 2.0, 4.0, 6.0, 3.0, 4.0, 5.0]);
//! let spec = build_pair(PairKind::PoissonVsGeometric, 0.5)?;
//! let proposal = PairKind::PoissonVsGeometric.proposal(&data)?;
//! let trace = run_mh(&spec, &data, &ChainConfig::with_iterations(2_000, 1), proposal.as_ref())?;
//! let alpha = summarize(&trace)?.alpha_median();
//! assert!((0.0..=1.0).contains(&alpha));
//! # Ok::<(), mixtest::Error>(())
//! ```

pub mod distributions;
pub mod error;
pub mod experiments;
pub mod glm;
pub mod mixture;
pub mod numeric;
pub mod oracles;
pub mod pairs;
pub mod samplers;
pub mod survival;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/mixture-tests.md")]
    mod mixture_tests {}
    #[doc = include_str!("../../../book/src/samplers.md")]
    mod samplers {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/regression.md")]
    mod regression {}
    #[doc = include_str!("../../../book/src/survival.md")]
    mod survival {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
