//! Auto-logistic Markov random field over K networks.
//!
//! Item `i`'s conditional log-odds of carrying label 1 is
//! `gamma + Σ_k beta_k · f_ik`, where `f_ik = (n1 − n0) / m` is the balance of
//! labelled neighbours of `i` in network `k` (zero for singletons).

use serde::{Deserialize, Serialize};

use crate::dist::softplus;
use crate::types::{MrfParams, NetworkSet};

/// Labelled-neighbour counts for every (item, network) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborStats {
    n_networks: usize,
    /// Row-major G×K: neighbours with label 1.
    n1: Vec<u32>,
    /// Row-major G×K: total neighbours.
    m: Vec<u32>,
}

impl NeighborStats {
    pub fn compute(labels: &[u8], nets: &NetworkSet) -> Self {
        let g = labels.len();
        let k = nets.len();
        let mut n1 = vec![0u32; g * k];
        let mut m = vec![0u32; g * k];
        for (kk, net) in nets.networks().iter().enumerate() {
            assert_eq!(net.n_items(), g, "network size differs from label vector");
            for i in 0..g {
                let nb = net.neighbors(i);
                m[i * k + kk] = nb.len() as u32;
                n1[i * k + kk] = nb.iter().map(|&j| labels[j as usize] as u32).sum();
            }
        }
        NeighborStats { n_networks: k, n1, m }
    }

    pub fn n_networks(&self) -> usize {
        self.n_networks
    }

    pub fn n_items(&self) -> usize {
        self.m.len().checked_div(self.n_networks).unwrap_or(0)
    }

    #[inline]
    pub fn n1(&self, i: usize, k: usize) -> u32 {
        self.n1[i * self.n_networks + k]
    }

    #[inline]
    pub fn n0(&self, i: usize, k: usize) -> u32 {
        let idx = i * self.n_networks + k;
        self.m[idx] - self.n1[idx]
    }

    #[inline]
    pub fn m(&self, i: usize, k: usize) -> u32 {
        self.m[i * self.n_networks + k]
    }

    /// Normalized neighbour balance `(n1 − n0) / m`, or 0 for a singleton.
    #[inline]
    pub fn field(&self, i: usize, k: usize) -> f64 {
        let idx = i * self.n_networks + k;
        let m = self.m[idx];
        if m == 0 {
            0.0
        } else {
            (2.0 * self.n1[idx] as f64 - m as f64) / m as f64
        }
    }

    /// Updates the counts of `i`'s neighbours after `i`'s label changed to
    /// `new_label`. Calling this when the label did not change corrupts the
    /// counts.
    pub fn apply_flip(&mut self, i: usize, new_label: u8, nets: &NetworkSet) {
        let k = self.n_networks;
        for (kk, net) in nets.networks().iter().enumerate() {
            let nb = net.neighbors(i);
            if new_label == 1 {
                for &j in nb {
                    self.n1[j as usize * k + kk] += 1;
                }
            } else {
                for &j in nb {
                    self.n1[j as usize * k + kk] -= 1;
                }
            }
        }
    }

    /// Row-major G×K matrix of fields, for repeated evaluation at many Φ.
    pub fn field_matrix(&self) -> Vec<f64> {
        let g = self.n_items();
        let k = self.n_networks;
        let mut out = Vec::with_capacity(g * k);
        for i in 0..g {
            for kk in 0..k {
                out.push(self.field(i, kk));
            }
        }
        out
    }
}

/// `gamma + Σ_k beta_k · f_ik`.
#[inline]
pub fn conditional_logit(i: usize, stats: &NeighborStats, phi: &MrfParams) -> f64 {
    debug_assert_eq!(phi.betas.len(), stats.n_networks());
    phi.gamma
        + phi
            .betas
            .iter()
            .enumerate()
            .map(|(k, b)| b * stats.field(i, k))
            .sum::<f64>()
}

/// Log pseudolikelihood `Σ_i [T_i·η_i − log(1 + e^{η_i})]`.
pub fn log_pseudolikelihood(labels: &[u8], nets: &NetworkSet, phi: &MrfParams) -> f64 {
    if nets.is_empty() {
        let n1 = labels.iter().filter(|&&t| t == 1).count() as f64;
        return n1 * phi.gamma - labels.len() as f64 * softplus(phi.gamma);
    }
    let stats = NeighborStats::compute(labels, nets);
    log_pseudolikelihood_from_fields(labels, &stats.field_matrix(), phi)
}

/// Same as [`log_pseudolikelihood`] with precomputed fields (see
/// [`NeighborStats::field_matrix`]).
pub fn log_pseudolikelihood_from_fields(labels: &[u8], fields: &[f64], phi: &MrfParams) -> f64 {
    let k = phi.betas.len();
    if k == 0 {
        let n1 = labels.iter().filter(|&&t| t == 1).count() as f64;
        return n1 * phi.gamma - labels.len() as f64 * softplus(phi.gamma);
    }
    debug_assert_eq!(fields.len(), labels.len() * k);
    labels
        .iter()
        .zip(fields.chunks_exact(k))
        .map(|(&t, f)| {
            let eta = phi.gamma + phi.betas.iter().zip(f).map(|(b, x)| b * x).sum::<f64>();
            if t == 1 {
                eta - softplus(eta)
            } else {
                -softplus(eta)
            }
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Network;
    use approx::assert_abs_diff_eq;

    fn path3() -> NetworkSet {
        NetworkSet::new(vec![Network::from_index_edges("p", 3, &[(0, 1), (1, 2)])]).unwrap()
    }

    #[test]
    fn path_fields() {
        let nets = path3();
        let s = NeighborStats::compute(&[1, 0, 1], &nets);
        assert_eq!(s.field(1, 0), 1.0);
        assert_eq!(s.field(0, 0), -1.0);
        assert_eq!(s.field(2, 0), -1.0);
        assert_eq!((s.n1(1, 0), s.n0(1, 0), s.m(1, 0)), (2, 0, 2));
    }

    #[test]
    fn all_zero_labels_give_minus_one() {
        let nets = path3();
        let s = NeighborStats::compute(&[0, 0, 0], &nets);
        for i in 0..3 {
            assert_eq!(s.field(i, 0), -1.0);
        }
    }

    #[test]
    fn singleton_logit_is_gamma() {
        let nets = NetworkSet::new(vec![
            Network::from_index_edges("a", 4, &[(0, 1)]),
            Network::from_index_edges("b", 4, &[(1, 2)]),
        ])
        .unwrap();
        let s = NeighborStats::compute(&[1, 1, 0, 1], &nets);
        let phi = MrfParams::new(-0.7, vec![2.0, 3.0]);
        assert_eq!(conditional_logit(3, &s, &phi), -0.7);
    }

    #[test]
    fn fitted_two_network_logit() {
        // Both fields at +1 with the two-network posterior means.
        let nets = NetworkSet::new(vec![
            Network::from_index_edges("coexp", 3, &[(0, 1)]),
            Network::from_index_edges("go", 3, &[(0, 2)]),
        ])
        .unwrap();
        let s = NeighborStats::compute(&[0, 1, 1], &nets);
        let phi = MrfParams::new(-1.20, vec![1.07, 0.61]);
        assert_abs_diff_eq!(conditional_logit(0, &s, &phi), 0.48, epsilon = 1e-12);
    }

    #[test]
    fn zero_betas_reduce_to_gamma() {
        let nets = path3();
        let phi = MrfParams::new(0.3, vec![0.0]);
        for labels in [[0u8, 0, 0], [1, 0, 1], [1, 1, 1]] {
            let s = NeighborStats::compute(&labels, &nets);
            for i in 0..3 {
                assert_eq!(conditional_logit(i, &s, &phi), 0.3);
            }
        }
    }

    #[test]
    fn factorized_bernoulli_when_betas_zero() {
        let nets = path3();
        let labels = [1, 0, 1];
        let gamma: f64 = -0.4;
        let phi = MrfParams::new(gamma, vec![0.0]);
        let expected = 2.0 * gamma - 3.0 * (1.0 + gamma.exp()).ln();
        assert_abs_diff_eq!(log_pseudolikelihood(&labels, &nets, &phi), expected, epsilon = 1e-12);
    }

    #[test]
    fn single_edge_hand_value() {
        let nets = NetworkSet::new(vec![Network::from_index_edges("e", 2, &[(0, 1)])]).unwrap();
        let phi = MrfParams::new(0.0, vec![1.0]);
        let expected = 2.0 * (1.0 - (1.0 + 1f64.exp()).ln());
        assert_abs_diff_eq!(log_pseudolikelihood(&[1, 1], &nets, &phi), expected, epsilon = 1e-14);
    }
}
