use proptest::prelude::*;
use rand::Rng;

use netmix::analysis::{
    auc_mann_whitney, average_roc, fpr_grid, rank_items, rhat, roc, sample_mrf_labels, simulate_replicates,
    MrfLabelSpec, SimulationSpec,
};
use netmix::rng::stream;
use netmix::NetworkSet;

#[test]
fn trapezoid_auc_equals_mann_whitney() {
    let mut rng = stream(61, 0);
    for _ in 0..1000 {
        let n = rng.random_range(2..80);
        // Coarse scores so ties are common.
        let scores: Vec<f64> = (0..n).map(|_| (rng.random_range(0..12) as f64) / 4.0).collect();
        let mut truth: Vec<u8> = (0..n).map(|_| rng.random_range(0..=1u8)).collect();
        truth[0] = 1;
        truth[1] = 0;
        let a = roc(&scores, &truth).unwrap().auc;
        let b = auc_mann_whitney(&scores, &truth);
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn random_scores_give_half_auc() {
    let mut rng = stream(62, 0);
    let n = 5000;
    let truth: Vec<u8> = (0..n).map(|i| (i % 7 == 0) as u8).collect();
    let scores: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    let auc = roc(&scores, &truth).unwrap().auc;
    assert!((auc - 0.5).abs() < 0.02, "{auc}");
}

#[test]
fn averaging_identical_curves_keeps_their_area() {
    let mut rng = stream(63, 0);
    let truth: Vec<u8> = (0..200).map(|i| (i % 4 == 0) as u8).collect();
    let scores: Vec<f64> = truth.iter().map(|&t| t as f64 + rng.random::<f64>()).collect();
    let c = roc(&scores, &truth).unwrap();
    let avg = average_roc(&[c.clone(), c.clone()], &fpr_grid(101)).unwrap();
    assert!((avg.auc - c.auc).abs() < 0.01);
    assert!(avg.tpr.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn rhat_separates_mixed_and_stuck_chains() {
    let mut rng = stream(64, 0);
    let mixed: Vec<Vec<f64>> = (0..3)
        .map(|_| (0..2000).map(|_| rng.random::<f64>()).collect())
        .collect();
    assert!(rhat(&mixed).unwrap() < 1.01);
    let stuck: Vec<Vec<f64>> = (0..3)
        .map(|c| (0..2000).map(|_| c as f64 + 0.1 * rng.random::<f64>()).collect())
        .collect();
    assert!(rhat(&stuck).unwrap() > 1.1);
}

#[test]
fn edgeless_labels_follow_the_intercept() {
    let mut rng = stream(65, 0);
    let g = 20_000;
    let gamma = -1.3;
    let spec = MrfLabelSpec {
        betas: vec![],
        gamma: Some(gamma),
        sweeps: 3,
        top_window: None,
        top_noise: 0.0,
    };
    let (labels, used) = sample_mrf_labels(&NetworkSet::empty(), g, &spec, 100, &mut rng);
    assert_eq!(used, gamma);
    let p = 1.0 / (1.0 + (-gamma).exp());
    let frac = labels.iter().filter(|&&t| t == 1).count() as f64 / g as f64;
    let se = (p * (1.0 - p) / g as f64).sqrt();
    assert!((frac - p).abs() < 3.0 * se, "{frac} vs {p}");
}

#[test]
fn replicates_share_truth_and_networks() {
    let spec = SimulationSpec::reference(300, 3, 9);
    let reps = simulate_replicates(&spec).unwrap();
    assert_eq!(reps.len(), 3);
    for r in &reps[1..] {
        assert_eq!(r.truth, reps[0].truth);
        assert_eq!(r.networks, reps[0].networks);
        assert_ne!(r.table, reps[0].table);
    }
    assert_eq!(reps[0].truth.iter().filter(|&&t| t == 1).count(), spec.n_targets);
    assert_eq!(simulate_replicates(&spec).unwrap(), reps);
}

proptest! {
    #[test]
    fn ranks_follow_the_definition(p in proptest::collection::vec(0u8..6, 1..40)) {
        let p_hat: Vec<f64> = p.iter().map(|&v| v as f64 / 5.0).collect();
        let ids: Vec<String> = (0..p_hat.len()).map(|i| format!("g{i}")).collect();
        let table = rank_items(&ids, &p_hat);
        for (i, id) in ids.iter().enumerate() {
            let want = 1 + p_hat.iter().filter(|&&q| q > p_hat[i]).count();
            prop_assert_eq!(table.rank_of(id), Some(want));
        }
        prop_assert!(table.entries.windows(2).all(|w| w[0].p_hat >= w[1].p_hat));
    }

    #[test]
    fn auc_is_invariant_to_monotone_transforms(seed in any::<u64>()) {
        let mut rng = stream(seed, 0);
        let n = 50;
        let scores: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mut truth: Vec<u8> = (0..n).map(|_| rng.random_range(0..=1u8)).collect();
        truth[0] = 1;
        truth[1] = 0;
        let a = roc(&scores, &truth).unwrap().auc;
        let b = roc(&scores.iter().map(|s| s.exp()).collect::<Vec<_>>(), &truth).unwrap().auc;
        prop_assert!((a - b).abs() < 1e-12);
    }
}
