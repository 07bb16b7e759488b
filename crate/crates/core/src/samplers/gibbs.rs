use rand::RngCore;

use super::{chain_rng, ChainConfig, IidTarget, MixtureTarget, Trace};
use crate::error::{Error, Result};
use crate::mixture::{sample_allocations_from_table, sample_ln_dirichlet, Allocation, Dataset, MixtureSpec};

/// Current Gibbs state handed to a shared-parameter conditional.
pub struct GibbsState<'a> {
    pub globals: &'a [f64],
    pub ln_weights: &'a [f64],
    pub alloc: &'a Allocation,
}

/// Full-conditional update of the shared parameters given an allocation.
pub trait GlobalsConditional {
    /// Global slots this conditional updates.
    fn slots(&self) -> Vec<usize>;
    /// Starting values.
    fn initial(&self) -> Result<Vec<f64>>;
    fn draw(&self, state: &GibbsState<'_>, rng: &mut dyn RngCore) -> Result<Vec<f64>>;
}

/// Gibbs sampler on an i.i.d. mixture.
pub fn run_gibbs(
    spec: &MixtureSpec,
    data: &Dataset,
    config: &ChainConfig,
    conditional: &dyn GlobalsConditional,
) -> Result<Trace> {
    run_gibbs_target(&IidTarget { spec, data }, config, conditional)
}

pub fn run_gibbs_target(
    target: &dyn MixtureTarget,
    config: &ChainConfig,
    conditional: &dyn GlobalsConditional,
) -> Result<Trace> {
    config.validate()?;
    let names = target.global_names();
    let covered = conditional.slots();
    if let Some(missing) = (0..names.len()).find(|s| !covered.contains(s)) {
        return Err(Error::Configuration(format!(
            "no conditional sampler registered for global slot {missing} ({})",
            names[missing]
        )));
    }
    target.check_propriety()?;

    let k = target.k();
    let concentration = target.weight_prior().concentration().to_vec();
    let mut rng = chain_rng(config.seed);
    let mut globals = conditional.initial()?;
    let mut ln_w = vec![-(k as f64).ln(); k];
    let mut table = target.log_densities(&globals)?;
    let mut trace = Trace::empty(names, config.burn_in, false, true);

    for t in 0..config.iterations {
        let alloc = sample_allocations_from_table(&table, &ln_w, &mut rng)?;
        let counts = alloc.counts(k);
        let shapes: Vec<f64> = counts.iter().zip(&concentration).map(|(&n, &a)| n as f64 + a).collect();
        ln_w = sample_ln_dirichlet(&shapes, &mut rng);
        if !globals.is_empty() {
            let state = GibbsState { globals: &globals, ln_weights: &ln_w, alloc: &alloc };
            globals = conditional.draw(&state, &mut rng)?;
            table = target.log_densities(&globals)?;
        }
        if t >= config.burn_in {
            trace.weights.push(ln_w.iter().map(|l| l.exp()).collect());
            trace.globals.push(globals.clone());
            trace.accepted.push(true);
            trace.accepted_globals.push(true);
            if let Some(c) = trace.allocation_counts.as_mut() {
                c.push(counts);
            }
        }
    }
    Ok(trace)
}
