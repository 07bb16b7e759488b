use mixtest::distributions::{moment_match, Component, Family};
use mixtest::mixture::Dataset;
use mixtest::samplers::{chain_rng, ChainConfig};
use mixtest::survival::{
    propriety_check, run_survival_test, simulate_cohort, survival_mixture_log_density, CohortDesign, SurvivalSpec,
};
use proptest::prelude::*;

fn prefix(data: &Dataset, n: usize) -> Dataset {
    Dataset::censored(data.y[..n].to_vec(), data.censored.as_ref().unwrap()[..n].to_vec()).unwrap()
}

#[test]
fn normal_weight_wins_for_every_prior_and_sharpens_with_n() {
    let full = simulate_cohort(&CohortDesign::new(0, 10_000), &mut chain_rng(160)).unwrap();
    let small = prefix(&full, 1_000);
    for (i, a0) in [0.01, 0.1, 1.0, 10.0].into_iter().enumerate() {
        let config = ChainConfig::with_iterations(4_000, 161 + i as u64);
        let at_1k = run_survival_test(&small, a0, &config).unwrap();
        let medians: Vec<f64> = at_1k.summary.weights.iter().map(|w| w.median).collect();
        assert!(medians[0] > medians[1] && medians[0] > medians[2], "a0 = {a0}: medians {medians:?}");
        for w in &at_1k.trace.weights {
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let at_10k = run_survival_test(&full, a0, &config).unwrap();
        let m10 = at_10k.summary.weights[0].median;
        assert!(m10 > medians[0], "a0 = {a0}: median {m10} at n = 10000 vs {} at n = 1000", medians[0]);
    }
}

#[test]
fn fully_censored_samples_are_refused() {
    let data = Dataset::censored(vec![-40.0, -35.0, -50.0, -45.0], vec![true; 4]).unwrap();
    assert!(!propriety_check(&data));
    assert!(run_survival_test(&data, 1.0, &ChainConfig::with_iterations(100, 1)).is_err());
    let one_distinct = Dataset::censored(vec![0.5, 0.5, 1.0], vec![false, false, true]).unwrap();
    assert!(run_survival_test(&one_distinct, 1.0, &ChainConfig::with_iterations(100, 1)).is_err());
}

#[test]
fn cohorts_respect_their_design() {
    for truth in 0..3 {
        let design = CohortDesign { censoring_rate: 0.3, ..CohortDesign::new(truth, 4_000) };
        let data = simulate_cohort(&design, &mut chain_rng(truth as u64)).unwrap();
        assert_eq!(data.len(), 4_000);
        let share = data.censored.as_ref().unwrap().iter().filter(|c| **c).count() as f64 / 4_000.0;
        assert!((share - 0.3).abs() < 0.05, "truth {truth}: censored share {share}");
    }
    assert!(simulate_cohort(&CohortDesign::new(3, 10), &mut chain_rng(0)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unit_weight_reduces_to_one_family(
        phi in -3.0..3.0f64,
        sigma2 in 0.1..5.0f64,
        y in -8.0..8.0f64,
        censored in any::<bool>(),
        which in 0usize..3,
    ) {
        let mut weights = [0.0; 3];
        weights[which] = 1.0;
        let spec = SurvivalSpec::new(1.0, phi, sigma2, weights).unwrap();
        let m = moment_match(phi, sigma2).unwrap();
        let (family, params) = [(Family::Normal, m.normal), (Family::Gumbel, m.gumbel), (Family::Logistic, m.logistic)]
            .into_iter()
            .nth(which)
            .unwrap();
        let c = Component::new(family, &params).unwrap();
        let expected = if censored { c.ln_censored_factor(y).unwrap() } else { c.ln_pdf(y) };
        let got = survival_mixture_log_density(&spec, y, censored).unwrap();
        prop_assert!((got - expected).abs() < 1e-10 * (1.0 + expected.abs()));
    }

    #[test]
    fn nonpositive_variance_is_a_domain_error(sigma2 in -5.0..=0.0f64) {
        prop_assert!(SurvivalSpec::new(1.0, 0.0, sigma2, [0.2, 0.3, 0.5]).is_err());
    }
}
