use super::{chain_rng, run_mh, summarize, ChainConfig, GlobalsProposal, PosteriorSummary};
use crate::error::{Error, Result};
use crate::mixture::{Dataset, MixtureSpec};
use crate::numeric::derive_seed;

/// Parametric bootstrap reference distribution of the weight estimator.
///
/// Simulates `replicas` datasets of size `n` from component `component` at
/// `fitted_globals`, runs the MH sampler on each (with proposals built by
/// `make_proposal` from the simulated data) and returns the summaries.
pub fn calibrate_bootstrap(
    spec: &MixtureSpec,
    fitted_globals: &[f64],
    component: usize,
    replicas: usize,
    n: usize,
    config: &ChainConfig,
    make_proposal: &dyn Fn(&Dataset) -> Result<Box<dyn GlobalsProposal>>,
) -> Result<Vec<PosteriorSummary>> {
    if component >= spec.k() {
        return Err(Error::Contract(format!(
            "component index {component} outside 0..{}",
            spec.k()
        )));
    }
    let source = spec.components[component].resolve(fitted_globals)?;
    (0..replicas)
        .map(|r| {
            let mut rng = chain_rng(derive_seed(config.seed, &[component as u64, r as u64, 0]));
            let y = (0..n).map(|_| source.sample_one(&mut rng)).collect();
            let data = Dataset::iid(y);
            let proposal = make_proposal(&data)?;
            let chain = ChainConfig { seed: derive_seed(config.seed, &[component as u64, r as u64, 1]), ..config.clone() };
            summarize(&run_mh(spec, &data, &chain, proposal.as_ref())?)
        })
        .collect()
}
