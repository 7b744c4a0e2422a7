use rand::Rng;

use netmix::em::{em_fit, mixture_loglik, EmInit, EmOptions};
use netmix::rng::stream;
use netmix::{CovarianceMode, Execution, GeneTable};

fn mixture_data(seed: u64, g: usize, d: usize) -> GeneTable {
    let mut rng = stream(seed, 0);
    let pi1 = rng.random_range(0.1..0.5);
    let shift: Vec<f64> = (0..d).map(|_| rng.random_range(0.5..3.0)).collect();
    let rows = (0..g)
        .map(|_| {
            let t = rng.random::<f64>() < pi1;
            (0..d)
                .map(|c| netmix::dist::sample_std_normal(&mut rng) + if t { shift[c] } else { 0.0 })
                .collect()
        })
        .collect();
    GeneTable::new(
        (0..g).map(|i| format!("g{i}")).collect(),
        (0..d).map(|c| format!("s{c}")).collect(),
        rows,
    )
    .unwrap()
}

#[test]
fn loglik_never_decreases() {
    for seed in 0..100 {
        let data = mixture_data(seed, 150, 1 + (seed as usize % 3));
        for mode in [CovarianceMode::General, CovarianceMode::Diagonal] {
            let fit = em_fit(
                &data,
                &EmOptions {
                    covariance_mode: mode,
                    seed,
                    execution: Execution::Sequential,
                    ..EmOptions::default()
                },
            )
            .unwrap();
            if fit.regularized {
                continue;
            }
            for w in fit.loglik_trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-9 * w[0].abs(), "seed {seed}: {} then {}", w[0], w[1]);
            }
        }
    }
}

#[test]
fn converged_fit_is_a_fixed_point() {
    let data = mixture_data(500, 400, 3);
    let fit = em_fit(&data, &EmOptions::default()).unwrap();
    assert!(fit.converged);
    let ll = mixture_loglik(&data, &fit.mixture).unwrap();
    assert!((ll - fit.loglik()).abs() < 1e-6 * ll.abs());
    let again = em_fit(
        &data,
        &EmOptions {
            init: EmInit::Params(fit.mixture.clone()),
            ..EmOptions::default()
        },
    )
    .unwrap();
    assert!((again.loglik() - fit.loglik()).abs() < 1e-6 * ll.abs());
    for (a, b) in again.mixture.mu1.iter().zip(&fit.mixture.mu1) {
        assert!((a - b).abs() < 1e-3);
    }
}

#[test]
fn recovers_well_separated_components() {
    let data = mixture_data(7, 3000, 2);
    let fit = em_fit(&data, &EmOptions::default()).unwrap();
    for m in &fit.mixture.mu0 {
        assert!(m.abs() < 0.15);
    }
    assert!(!fit.single_component_preferred);
    assert!(fit.responsibilities.iter().all(|r| (0.0..=1.0).contains(r)));
}
