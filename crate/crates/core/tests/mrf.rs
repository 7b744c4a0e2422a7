use proptest::prelude::*;
use rand::Rng;

use netmix::mrf::{conditional_logit, log_pseudolikelihood, NeighborStats};
use netmix::rng::stream;
use netmix::{MrfParams, Network, NetworkSet};

/// Adjacency matrices built straight from edge lists.
struct Instance {
    labels: Vec<u8>,
    adj: Vec<Vec<Vec<bool>>>,
    nets: NetworkSet,
    phi: MrfParams,
}

fn random_instance<R: Rng>(rng: &mut R, max_g: usize, max_k: usize) -> Instance {
    let g = rng.random_range(1..=max_g);
    let k = rng.random_range(0..=max_k);
    let mut adj = Vec::new();
    let mut nets = Vec::new();
    for n in 0..k {
        let density = rng.random_range(0.0..0.6);
        let mut a = vec![vec![false; g]; g];
        let mut edges = Vec::new();
        for i in 0..g {
            for j in 0..g {
                if i != j && rng.random::<f64>() < density / 2.0 {
                    a[i][j] = true;
                    a[j][i] = true;
                    edges.push((i, j));
                }
            }
        }
        adj.push(a);
        nets.push(Network::from_index_edges(format!("n{n}"), g, &edges));
    }
    Instance {
        labels: (0..g).map(|_| rng.random_range(0..=1u8)).collect(),
        adj,
        nets: NetworkSet::new(nets).unwrap(),
        phi: MrfParams::new(
            rng.random_range(-3.0..3.0),
            (0..k).map(|_| rng.random_range(0.0..6.0)).collect(),
        ),
    }
}

fn oracle_logit(inst: &Instance, i: usize) -> f64 {
    let mut eta = inst.phi.gamma;
    for (k, a) in inst.adj.iter().enumerate() {
        let (mut n1, mut n0) = (0.0, 0.0);
        for (j, &e) in a[i].iter().enumerate() {
            if e {
                if inst.labels[j] == 1 {
                    n1 += 1.0;
                } else {
                    n0 += 1.0;
                }
            }
        }
        if n1 + n0 > 0.0 {
            eta += inst.phi.betas[k] * (n1 - n0) / (n1 + n0);
        }
    }
    eta
}

/// Sum over items of `log Pr(T_i | neighbours)`, each term written as
/// `−log(1 + e^{∓η_i})` without any shared code.
fn oracle_pseudolikelihood(inst: &Instance) -> f64 {
    (0..inst.labels.len())
        .map(|i| {
            let eta = oracle_logit(inst, i);
            let z = if inst.labels[i] == 1 { -eta } else { eta };
            if z > 0.0 {
                -(z + (-z).exp().ln_1p())
            } else {
                -z.exp().ln_1p()
            }
        })
        .sum()
}

#[test]
fn pseudolikelihood_matches_brute_force() {
    let mut rng = stream(21, 0);
    for _ in 0..1000 {
        let inst = random_instance(&mut rng, 12, 3);
        let got = log_pseudolikelihood(&inst.labels, &inst.nets, &inst.phi);
        let want = oracle_pseudolikelihood(&inst);
        assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "{got} vs {want}");
    }
}

#[test]
fn incremental_statistics_track_flips() {
    let mut rng = stream(22, 0);
    let mut inst = random_instance(&mut rng, 40, 3);
    while inst.nets.is_empty() {
        inst = random_instance(&mut rng, 40, 3);
    }
    let g = inst.labels.len();
    let mut stats = NeighborStats::compute(&inst.labels, &inst.nets);
    for _ in 0..200 {
        let i = rng.random_range(0..g);
        inst.labels[i] ^= 1;
        stats.apply_flip(i, inst.labels[i], &inst.nets);
        assert_eq!(stats, NeighborStats::compute(&inst.labels, &inst.nets));
    }
}

fn instance_strategy() -> impl Strategy<Value = u64> {
    any::<u64>()
}

proptest! {
    #[test]
    fn label_flip_symmetry(seed in instance_strategy()) {
        let mut rng = stream(seed, 0);
        let inst = random_instance(&mut rng, 10, 3);
        let flipped: Vec<u8> = inst.labels.iter().map(|t| 1 - t).collect();
        let neg = MrfParams::new(-inst.phi.gamma, inst.phi.betas.clone());
        let a = NeighborStats::compute(&inst.labels, &inst.nets);
        let b = NeighborStats::compute(&flipped, &inst.nets);
        for i in 0..inst.labels.len() {
            let x = conditional_logit(i, &a, &inst.phi);
            let y = conditional_logit(i, &b, &neg);
            prop_assert!((x + y).abs() < 1e-12);
        }
    }

    #[test]
    fn logit_increases_with_a_target_neighbour(seed in instance_strategy()) {
        let mut rng = stream(seed, 1);
        let mut inst = random_instance(&mut rng, 10, 3);
        let before = NeighborStats::compute(&inst.labels, &inst.nets);
        let g = inst.labels.len();
        if let Some(j) = (0..g).find(|&j| inst.labels[j] == 0) {
            inst.labels[j] = 1;
            let after = NeighborStats::compute(&inst.labels, &inst.nets);
            for i in 0..g {
                prop_assert!(conditional_logit(i, &after, &inst.phi) >= conditional_logit(i, &before, &inst.phi) - 1e-12);
            }
        }
    }

    #[test]
    fn fields_are_bounded(seed in instance_strategy()) {
        let mut rng = stream(seed, 2);
        let inst = random_instance(&mut rng, 12, 3);
        let s = NeighborStats::compute(&inst.labels, &inst.nets);
        for i in 0..inst.labels.len() {
            for k in 0..inst.nets.len() {
                prop_assert!(s.field(i, k).abs() <= 1.0);
            }
        }
    }

    #[test]
    fn relabelling_items_permutes_pseudolikelihood_terms(seed in instance_strategy()) {
        let mut rng = stream(seed, 3);
        let inst = random_instance(&mut rng, 12, 3);
        let g = inst.labels.len();
        let mut perm: Vec<usize> = (0..g).collect();
        for i in (1..g).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        // perm[old] = new
        let mut labels = vec![0u8; g];
        for (old, &new) in perm.iter().enumerate() {
            labels[new] = inst.labels[old];
        }
        let nets = NetworkSet::new(inst.nets.networks().iter().map(|n| n.permuted(&perm)).collect()).unwrap();
        let a = log_pseudolikelihood(&inst.labels, &inst.nets, &inst.phi);
        let b = log_pseudolikelihood(&labels, &nets, &inst.phi);
        prop_assert!((a - b).abs() < 1e-9);
    }
}
