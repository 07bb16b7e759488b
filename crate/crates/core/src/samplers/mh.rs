use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use super::{
    alr_from_ln_weights, chain_rng, ln_weights_from_alr, AlphaProposal, ChainConfig, IidTarget, MixtureTarget,
    ThetaProposal, Trace,
};
use crate::error::{Error, Result};
use crate::mixture::{sample_ln_dirichlet, Dataset, LogDensityTable, MixtureSpec};
use crate::numeric::log_sum_exp;

const ADAPT_BATCH: usize = 50;
const TARGET_ACCEPTANCE: f64 = 0.44;

/// Independence proposals for the shared parameters, one per candidate model
/// posterior (each fitted to the whole sample).
pub trait GlobalsProposal {
    fn candidates(&self) -> usize;
    /// Mixture component whose model posterior candidate `c` is.
    fn component(&self, candidate: usize) -> usize;
    fn sample(&self, candidate: usize, rng: &mut dyn RngCore) -> Vec<f64>;
    fn ln_density(&self, candidate: usize, globals: &[f64]) -> f64;
}

/// Metropolis–Hastings sampler on an i.i.d. mixture.
pub fn run_mh(
    spec: &MixtureSpec,
    data: &Dataset,
    config: &ChainConfig,
    proposals: &dyn GlobalsProposal,
) -> Result<Trace> {
    run_mh_target(&IidTarget { spec, data }, config, proposals)
}

fn selection_ln_probs(proposals: &dyn GlobalsProposal, mode: ThetaProposal, ln_w: &[f64]) -> Vec<f64> {
    let m = proposals.candidates();
    match mode {
        ThetaProposal::ModelPosteriorIndependence => vec![-(m as f64).ln(); m],
        ThetaProposal::ComponentConditional => {
            let raw: Vec<f64> = (0..m).map(|c| ln_w[proposals.component(c)]).collect();
            let norm = log_sum_exp(&raw);
            raw.iter().map(|r| r - norm).collect()
        }
    }
}

fn ln_proposal_density(proposals: &dyn GlobalsProposal, ln_sel: &[f64], globals: &[f64]) -> f64 {
    let terms: Vec<f64> = ln_sel
        .iter()
        .enumerate()
        .map(|(c, ls)| if *ls == f64::NEG_INFINITY { *ls } else { ls + proposals.ln_density(c, globals) })
        .collect();
    log_sum_exp(&terms)
}

fn pick(ln_probs: &[f64], rng: &mut dyn RngCore) -> usize {
    let mut u: f64 = rng.random();
    for (c, lp) in ln_probs.iter().enumerate() {
        let p = lp.exp();
        if u < p {
            return c;
        }
        u -= p;
    }
    ln_probs.iter().rposition(|lp| *lp > f64::NEG_INFINITY).unwrap_or(0)
}

/// Target density evaluation; `None` when the parameters leave the space.
fn evaluate(target: &dyn MixtureTarget, globals: &[f64]) -> Result<Option<LogDensityTable>> {
    if target.ln_global_prior(globals) == f64::NEG_INFINITY {
        return Ok(None);
    }
    match target.log_densities(globals) {
        Ok(t) => Ok(Some(t)),
        Err(Error::ParameterDomain(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn ln_weight_target(concentration: &[f64], ln_w: &[f64], jacobian: bool) -> f64 {
    concentration
        .iter()
        .zip(ln_w)
        .map(|(a, l)| if jacobian { a * l } else { (a - 1.0) * l })
        .sum()
}

pub fn run_mh_target(
    target: &dyn MixtureTarget,
    config: &ChainConfig,
    proposals: &dyn GlobalsProposal,
) -> Result<Trace> {
    config.validate()?;
    target.check_propriety()?;
    let names = target.global_names();
    let n_globals = names.len();
    if n_globals > 0 && proposals.candidates() == 0 {
        return Err(Error::Configuration("shared parameters present but no proposal supplied".into()));
    }
    let k = target.k();
    let concentration = target.weight_prior().concentration().to_vec();
    let mut rng = chain_rng(config.seed);

    // Start from a model-posterior draw at equal weights.
    let mut ln_w = vec![-(k as f64).ln(); k];
    let mut globals = Vec::new();
    let mut table = None;
    if n_globals == 0 {
        table = evaluate(target, &globals)?;
    } else {
        let ln_sel = selection_ln_probs(proposals, ThetaProposal::ModelPosteriorIndependence, &ln_w);
        for _ in 0..1000 {
            let c = pick(&ln_sel, &mut rng);
            let candidate = proposals.sample(c, &mut rng);
            if let Some(t) = evaluate(target, &candidate)? {
                globals = candidate;
                table = Some(t);
                break;
            }
        }
    }
    let mut table = table.ok_or_else(|| {
        Error::Numeric("could not draw starting parameters with positive posterior density".into())
    })?;
    let mut ll = table.mixture_log_likelihood(&ln_w);
    if !ll.is_finite() {
        return Err(Error::Numeric("log likelihood is not finite at the starting point".into()));
    }
    let mut ln_prior_globals = target.ln_global_prior(&globals);
    let mut trace = Trace::empty(names, config.burn_in, true, false);

    let mut step = config.alpha_proposal.step();
    let mut batch_accepted = 0usize;
    let mut batch_proposed = 0usize;
    let mut batches = 0usize;

    for t in 0..config.iterations {
        if config.adapt_step && t < config.burn_in && batch_proposed == ADAPT_BATCH {
            batches += 1;
            let rate = batch_accepted as f64 / batch_proposed as f64;
            step *= ((rate - TARGET_ACCEPTANCE) / (batches as f64).sqrt()).exp();
            step = step.clamp(1e-3, 50.0);
            batch_accepted = 0;
            batch_proposed = 0;
        }
        // Weights block.
        let from_prior = match config.alpha_proposal {
            AlphaProposal::FromPrior => true,
            AlphaProposal::LogitRandomWalk { .. } => false,
            AlphaProposal::Mixture { prior_probability, .. } => rng.random::<f64>() < prior_probability,
        };
        let accepted_w = if from_prior {
            let proposal = sample_ln_dirichlet(&concentration, &mut rng);
            let ll_new = table.mixture_log_likelihood(&proposal);
            let accept = ll_new - ll >= 0.0 || rng.random::<f64>().ln() < ll_new - ll;
            if accept {
                ln_w = proposal;
                ll = ll_new;
            }
            accept
        } else {
            let eta: Vec<f64> = alr_from_ln_weights(&ln_w)
                .into_iter()
                .map(|e| e + step * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let proposal = ln_weights_from_alr(&eta);
            let ll_new = table.mixture_log_likelihood(&proposal);
            // Dirichlet kernel times the Jacobian Πⱼ wⱼ of the log-ratio map.
            let log_ratio = ll_new + ln_weight_target(&concentration, &proposal, true)
                - ll
                - ln_weight_target(&concentration, &ln_w, true);
            let accept = log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio;
            if accept {
                ln_w = proposal;
                ll = ll_new;
            }
            batch_proposed += 1;
            batch_accepted += accept as usize;
            accept
        };

        // Shared-parameter block.
        let mut accepted_g = false;
        if n_globals > 0 {
            let ln_sel = selection_ln_probs(proposals, config.theta_proposal, &ln_w);
            let q_current = ln_proposal_density(proposals, &ln_sel, &globals);
            if q_current == f64::NEG_INFINITY || q_current.is_nan() {
                return Err(Error::Numeric(format!(
                    "proposal density is zero at the current parameters {globals:?}"
                )));
            }
            let c = pick(&ln_sel, &mut rng);
            let candidate = proposals.sample(c, &mut rng);
            let q_new = ln_proposal_density(proposals, &ln_sel, &candidate);
            if let Some(new_table) = evaluate(target, &candidate)? {
                let ll_new = new_table.mixture_log_likelihood(&ln_w);
                let prior_new = target.ln_global_prior(&candidate);
                let log_ratio = (ll_new + prior_new - q_new) - (ll + ln_prior_globals - q_current);
                if log_ratio.is_finite() && (log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio) {
                    globals = candidate;
                    table = new_table;
                    ll = ll_new;
                    ln_prior_globals = prior_new;
                    accepted_g = true;
                }
            }
        }

        if t >= config.burn_in {
            trace.weights.push(ln_w.iter().map(|l| l.exp()).collect());
            trace.globals.push(globals.clone());
            trace.accepted.push(accepted_w);
            trace.accepted_globals.push(accepted_g);
        }
    }
    Ok(trace)
}
