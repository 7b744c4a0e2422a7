use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ModelKind, SamplerConfig};
use crate::dist::logit;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, Matrix};
use crate::mrf::NeighborStats;
use crate::rng::ChainRng;
use crate::types::{CovarianceMode, GeneTable, MixtureParams, MrfParams, NetworkSet, PriorSpec};

/// Everything one chain evolves: labels, parameters, RNG streams and the
/// Metropolis bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    pub model: ModelKind,
    pub labels: Vec<u8>,
    pub mixture: MixtureParams,
    pub mrf: Option<MrfParams>,
    pub rng: ChainRng,
    pub iteration: u64,
    pub rw_step: Vec<f64>,
    pub accept_count: u64,
    pub propose_count: u64,
    pub batch_accept: u64,
    pub batch_propose: u64,
    pub batch_index: u64,
    #[serde(skip)]
    pub(crate) stats: Option<NeighborStats>,
}

impl ChainState {
    /// Builds a state from explicit values. `mrf` must be present exactly
    /// when `model` is [`ModelKind::Mrf`].
    pub fn new(
        model: ModelKind,
        labels: Vec<u8>,
        mixture: MixtureParams,
        mrf: Option<MrfParams>,
        seed: u64,
        rw_initial_step: f64,
        nets: &NetworkSet,
    ) -> Result<Self> {
        mixture.validate()?;
        if labels.iter().any(|&t| t > 1) {
            return Err(Error::invalid("labels must be 0 or 1"));
        }
        let k = match (model, &mrf) {
            (ModelKind::Mrf, Some(phi)) => {
                if phi.betas.len() != nets.len() {
                    return Err(Error::DimensionMismatch {
                        expected: nets.len(),
                        got: phi.betas.len(),
                    });
                }
                phi.betas.len()
            }
            (ModelKind::Smjm, None) => {
                if mixture.pi1.is_none() {
                    return Err(Error::invalid("the i.i.d. mixture needs pi1"));
                }
                0
            }
            (ModelKind::Mrf, None) => return Err(Error::invalid("MRF model needs parameters")),
            (ModelKind::Smjm, Some(_)) => return Err(Error::invalid("MRF parameters given for the i.i.d. mixture")),
        };
        let mut state = ChainState {
            model,
            labels,
            mixture,
            mrf,
            rng: ChainRng::new(seed),
            iteration: 0,
            rw_step: vec![rw_initial_step; if model == ModelKind::Mrf { k + 1 } else { 0 }],
            accept_count: 0,
            propose_count: 0,
            batch_accept: 0,
            batch_propose: 0,
            batch_index: 0,
            stats: None,
        };
        state.refresh_stats(nets)?;
        Ok(state)
    }

    /// Overdispersed starting point for chain `chain`: labels split at a
    /// chain-specific quantile of the first score, moment estimates within
    /// the split, random network weights.
    pub fn initialize(
        config: &SamplerConfig,
        data: &GeneTable,
        nets: &NetworkSet,
        prior: &PriorSpec,
        chain: usize,
    ) -> Result<Self> {
        let seed = config.chain_seed(chain);
        let q = config.init_quantiles[chain % config.init_quantiles.len()];
        let g = data.len();
        let d = data.dim();

        let first = data.column(0);
        let mut sorted = first.clone();
        sorted.sort_by(f64::total_cmp);
        let cut = sorted[((q * g as f64).floor() as usize).min(g - 1)];
        let mut labels: Vec<u8> = first.iter().map(|&x| (x > cut) as u8).collect();
        let n1 = labels.iter().filter(|&&t| t == 1).count();
        if n1 == 0 || n1 == g {
            // Ties at the cut: fall back to rank order.
            let mut order: Vec<usize> = (0..g).collect();
            order.sort_by(|&a, &b| first[b].total_cmp(&first[a]).then(a.cmp(&b)));
            let top = (((1.0 - q) * g as f64).round() as usize).clamp(1, g.saturating_sub(1).max(1));
            labels.iter_mut().for_each(|t| *t = 0);
            for &i in &order[..top] {
                labels[i] = 1;
            }
        }
        let n1 = labels.iter().filter(|&&t| t == 1).count();
        let frac = (n1 as f64 / g as f64).clamp(0.5 / g as f64, 1.0 - 0.5 / g as f64);

        let (m0, s0) = split_moments(data, &labels, 0, prior);
        let (m1, s1) = split_moments(data, &labels, 1, prior);
        let marginal_sd: Vec<f64> = prior.r.diag().iter().map(|v| v.sqrt()).collect();
        let theta: Vec<f64> = (0..d).map(|c| (m1[c] - m0[c]).max(0.01 * marginal_sd[c])).collect();
        let (sigma0, sigma1) = match config.covariance_mode {
            CovarianceMode::General => (s0, s1),
            CovarianceMode::Diagonal => (Matrix::from_diag(&s0.diag()), Matrix::from_diag(&s1.diag())),
        };

        let mut rng = ChainRng::new(seed);
        let (pi1, mrf) = match config.model {
            ModelKind::Smjm => (Some(frac), None),
            ModelKind::Mrf => {
                let betas = (0..nets.len())
                    .map(|_| rng.init.random_range(0.0..2.0f64.min(prior.beta_upper)))
                    .collect();
                (None, Some(MrfParams::new(logit(frac), betas)))
            }
        };
        let mixture = MixtureParams {
            mu0: m0,
            theta,
            sigma0,
            sigma1,
            covariance_mode: config.covariance_mode,
            pi1,
        };
        let mut state = ChainState::new(config.model, labels, mixture, mrf, seed, config.rw_initial_step, nets)?;
        // Keep the init stream position so that a resumed state matches.
        state.rng.init = rng.init;
        Ok(state)
    }

    /// Recomputes neighbour counts from the labels (after loading a
    /// checkpoint, or after labels were edited directly).
    pub fn refresh_stats(&mut self, nets: &NetworkSet) -> Result<()> {
        if let Some(n) = nets.n_items() {
            if n != self.labels.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.labels.len(),
                    got: n,
                });
            }
        }
        self.stats = match self.model {
            ModelKind::Mrf => Some(NeighborStats::compute(&self.labels, nets)),
            ModelKind::Smjm => None,
        };
        Ok(())
    }

    pub fn n_items(&self) -> usize {
        self.labels.len()
    }

    pub fn n_targets(&self) -> usize {
        self.labels.iter().filter(|&&t| t == 1).count()
    }

    pub fn neighbor_stats(&self) -> Option<&NeighborStats> {
        self.stats.as_ref()
    }

    /// Metropolis acceptance rate since the last reset.
    pub fn acceptance_rate(&self) -> f64 {
        if self.propose_count == 0 {
            0.0
        } else {
            self.accept_count as f64 / self.propose_count as f64
        }
    }
}

fn split_moments(data: &GeneTable, labels: &[u8], component: u8, prior: &PriorSpec) -> (Vec<f64>, Matrix) {
    let d = data.dim();
    let rows: Vec<&[f64]> = data
        .rows()
        .zip(labels)
        .filter(|(_, &t)| t == component)
        .map(|(r, _)| r)
        .collect();
    let n = rows.len();
    let mut mean = vec![0.0; d];
    if n == 0 {
        // No members: centre on the overall mean.
        for r in data.rows() {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v / data.len() as f64;
            }
        }
        return (mean, prior.r.clone());
    }
    for r in &rows {
        for (m, v) in mean.iter_mut().zip(r.iter()) {
            *m += v / n as f64;
        }
    }
    if n <= d + 1 {
        return (mean, prior.r.clone());
    }
    let mut cov = Matrix::zeros(d);
    let mut c = vec![0.0; d];
    for r in &rows {
        for ((ci, v), m) in c.iter_mut().zip(r.iter()).zip(&mean) {
            *ci = v - m;
        }
        cov.add_outer(&c, 1.0 / (n as f64 - 1.0));
    }
    if cholesky(&cov).is_err() {
        return (mean, prior.r.clone());
    }
    (mean, cov)
}
