//! Statistical shape of the synthetic surrogate: the validation/test
//! ranking must be nearly identical, and trial noise must shrink as the
//! epoch budget grows.

use std::sync::Arc;

use nasbench::enumerator::{enumerate_space, SpaceParams};
use nasbench::oracle::make_synthetic;
use nasbench::{rng, stats};

#[test]
fn validation_and_test_rankings_nearly_coincide() {
    let index = Arc::new(enumerate_space(SpaceParams::new(6, 9).unwrap()));
    let oracle = make_synthetic(Arc::clone(&index), 1);
    let picks = rng::sample_distinct(&mut rng::stream(1, "spearman", 0), 10_000, index.len());
    let mut valid = Vec::with_capacity(picks.len());
    let mut test = Vec::with_capacity(picks.len());
    for i in picks {
        let summary = oracle.trial_summary(index.cells()[i].digest(), 108).unwrap();
        valid.push(summary.validation_accuracy);
        test.push(summary.test_accuracy);
    }
    let rho = stats::spearman(&valid, &test).unwrap();
    assert!(rho > 0.99, "valid/test Spearman {rho}");
}

#[test]
fn trial_noise_shrinks_as_the_budget_grows() {
    let index = Arc::new(enumerate_space(SpaceParams::new(6, 9).unwrap()));
    let oracle = make_synthetic(Arc::clone(&index), 2);
    let picks = rng::sample_distinct(&mut rng::stream(2, "noise", 0), 1_000, index.len());
    let mean_noise = |budget: u32| -> f64 {
        let stds: Vec<f64> = picks
            .iter()
            .map(|&i| {
                oracle
                    .trial_summary(index.cells()[i].digest(), budget)
                    .unwrap()
                    .test_accuracy_std
            })
            .collect();
        stats::mean(&stds)
    };
    let noise: Vec<f64> = [4, 12, 36, 108].iter().map(|&b| mean_noise(b)).collect();
    assert!(
        noise.windows(2).all(|w| w[0] > w[1]),
        "noise must fall with budget: {noise:?}"
    );
    assert!(noise[3] < noise[1], "108-epoch noise {} vs 12-epoch {}", noise[3], noise[1]);
}
