use serde::{Deserialize, Serialize};

use super::state::ChainState;
use super::updates::{update_labels, update_mu0, update_phi, update_pi1, update_sigma, update_theta};
use super::{ModelKind, SamplerConfig};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::par::map_indexed;
use crate::types::{CovarianceMode, GeneTable, MrfParams, NetworkSet, PriorSpec};

/// One retained draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSample {
    pub iteration: u64,
    pub mu0: Vec<f64>,
    pub theta: Vec<f64>,
    pub sigma0: Matrix,
    pub sigma1: Matrix,
    pub pi1: Option<f64>,
    pub mrf: Option<MrfParams>,
    pub n_targets: usize,
}

impl PosteriorSample {
    fn from_state(state: &ChainState) -> Self {
        PosteriorSample {
            iteration: state.iteration,
            mu0: state.mixture.mu0.clone(),
            theta: state.mixture.theta.clone(),
            sigma0: state.mixture.sigma0.clone(),
            sigma1: state.mixture.sigma1.clone(),
            pi1: state.mixture.pi1,
            mrf: state.mrf.clone(),
            n_targets: state.n_targets(),
        }
    }

    pub fn mu1(&self) -> Vec<f64> {
        self.mu0.iter().zip(&self.theta).map(|(a, b)| a + b).collect()
    }

    /// Values in the order of [`monitored_names`].
    pub fn monitored(&self) -> Vec<f64> {
        let d = self.mu0.len();
        let mut v = Vec::new();
        v.extend_from_slice(&self.mu0);
        v.extend_from_slice(&self.theta);
        for s in [&self.sigma0, &self.sigma1] {
            for i in 0..d {
                for j in i..d {
                    v.push(s[(i, j)]);
                }
            }
        }
        if let Some(p) = self.pi1 {
            v.push(p);
        }
        if let Some(phi) = &self.mrf {
            v.extend(phi.to_vec());
        }
        v
    }
}

/// Names of the scalar quantities tracked for convergence diagnostics.
pub fn monitored_names(dims: &[String], model: ModelKind, networks: &[String]) -> Vec<String> {
    let d = dims.len();
    let mut names = Vec::new();
    names.extend(dims.iter().map(|n| format!("mu0[{n}]")));
    names.extend(dims.iter().map(|n| format!("theta[{n}]")));
    for j in 0..2 {
        for a in 0..d {
            for b in a..d {
                names.push(format!("sigma{j}[{},{}]", dims[a], dims[b]));
            }
        }
    }
    match model {
        ModelKind::Smjm => names.push("pi1".into()),
        ModelKind::Mrf => {
            names.push("gamma".into());
            names.extend(networks.iter().map(|n| format!("beta[{n}]")));
        }
    }
    names
}

/// A chain bound to its data: advances one sweep at a time.
pub struct Chain<'a> {
    pub state: ChainState,
    config: &'a SamplerConfig,
    data: &'a GeneTable,
    nets: &'a NetworkSet,
    prior: &'a PriorSpec,
}

impl<'a> Chain<'a> {
    pub fn new(
        state: ChainState,
        config: &'a SamplerConfig,
        data: &'a GeneTable,
        nets: &'a NetworkSet,
        prior: &'a PriorSpec,
    ) -> Result<Self> {
        let mut state = state;
        if state.stats.is_none() {
            state.refresh_stats(nets)?;
        }
        Ok(Chain {
            state,
            config,
            data,
            nets,
            prior,
        })
    }

    pub fn in_burnin(&self) -> bool {
        self.state.iteration < self.config.n_burnin
    }

    /// One full sweep.
    pub fn step(&mut self) -> Result<()> {
        let adapt = self.config.rw_adapt && self.in_burnin();
        let s = &mut self.state;
        update_mu0(s, self.data, self.prior)?;
        update_theta(s, self.data, self.prior)?;
        update_sigma(s, self.data, self.prior, 0)?;
        update_sigma(s, self.data, self.prior, 1)?;
        update_labels(s, self.data, self.nets)?;
        match s.model {
            ModelKind::Smjm => {
                update_pi1(s)?;
            }
            ModelKind::Mrf => {
                update_phi(s, self.nets, self.prior.beta_upper, self.config.rw_target_accept, adapt)?;
            }
        }
        s.iteration += 1;
        if s.iteration == self.config.n_burnin {
            // Acceptance is reported for the frozen-step phase only.
            s.accept_count = 0;
            s.propose_count = 0;
        }
        Ok(())
    }

    /// Total sweeps this chain runs.
    pub fn total_iterations(&self) -> u64 {
        self.config.n_burnin + self.config.n_keep
    }

    /// Whether the sweep just completed is retained.
    pub fn is_retained(&self) -> bool {
        let t = self.state.iteration;
        t > self.config.n_burnin
            && (t - self.config.n_burnin) % self.config.thin == 0
            && (t - self.config.n_burnin) / self.config.thin <= self.config.n_retained()
    }

    pub fn run(mut self, chain: usize) -> Result<ChainOutput> {
        let g = self.data.len();
        let mut out = ChainOutput {
            chain,
            seed: self.config.chain_seed(chain),
            samples: Vec::new(),
            label_counts: vec![0; g],
            n_retained: 0,
            acceptance_rate: None,
            rw_step: Vec::new(),
            initial: PosteriorSample::from_state(&self.state),
            final_state: None,
        };
        while self.state.iteration < self.total_iterations() {
            self.step()?;
            if self.is_retained() {
                out.n_retained += 1;
                for (c, &t) in out.label_counts.iter_mut().zip(&self.state.labels) {
                    *c += t as u32;
                }
                if self.config.store_samples {
                    out.samples.push(PosteriorSample::from_state(&self.state));
                }
            }
        }
        if self.state.model == ModelKind::Mrf {
            out.acceptance_rate = Some(self.state.acceptance_rate());
        }
        out.rw_step = self.state.rw_step.clone();
        out.final_state = Some(self.state);
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainOutput {
    pub chain: usize,
    pub seed: u64,
    pub samples: Vec<PosteriorSample>,
    /// Times each item carried label 1 across retained draws.
    pub label_counts: Vec<u32>,
    pub n_retained: u64,
    /// Post-burn-in Metropolis acceptance rate (MRF model only).
    pub acceptance_rate: Option<f64>,
    pub rw_step: Vec<f64>,
    pub initial: PosteriorSample,
    #[serde(skip)]
    pub final_state: Option<ChainState>,
}

impl ChainOutput {
    pub fn posterior_prob(&self) -> Vec<f64> {
        let n = self.n_retained as f64;
        self.label_counts.iter().map(|&c| c as f64 / n).collect()
    }

    /// Trace of monitored quantity `index` (see [`monitored_names`]).
    pub fn trace(&self, index: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.monitored()[index]).collect()
    }

    pub fn traces(&self) -> Vec<Vec<f64>> {
        self.samples.iter().map(PosteriorSample::monitored).collect()
    }
}

/// Runs a single chain from its overdispersed starting point.
pub fn run_chain(
    config: &SamplerConfig,
    data: &GeneTable,
    nets: &NetworkSet,
    prior: &PriorSpec,
    chain: usize,
) -> Result<ChainOutput> {
    config.validate()?;
    prior.validate()?;
    let state = ChainState::initialize(config, data, nets, prior, chain)?;
    Chain::new(state, config, data, nets, prior)?.run(chain)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiChainResult {
    pub model: ModelKind,
    pub covariance_mode: CovarianceMode,
    pub dim_names: Vec<String>,
    pub network_names: Vec<String>,
    pub chains: Vec<ChainOutput>,
    /// Pooled `Pr(T_i = 1 | data)` from label frequencies.
    pub posterior_prob: Vec<f64>,
}

impl MultiChainResult {
    pub fn monitored_names(&self) -> Vec<String> {
        monitored_names(&self.dim_names, self.model, &self.network_names)
    }

    pub fn pooled_samples(&self) -> impl Iterator<Item = &PosteriorSample> {
        self.chains.iter().flat_map(|c| c.samples.iter())
    }

    /// Pooled posterior mean of every monitored quantity.
    pub fn pooled_means(&self) -> Vec<f64> {
        let mut sum: Vec<f64> = Vec::new();
        let mut n = 0usize;
        for s in self.pooled_samples() {
            let v = s.monitored();
            if sum.is_empty() {
                sum = vec![0.0; v.len()];
            }
            sum.iter_mut().zip(&v).for_each(|(a, b)| *a += b);
            n += 1;
        }
        sum.iter().map(|a| a / n as f64).collect()
    }

    fn pooled_vec_mean(&self, f: impl Fn(&PosteriorSample) -> Vec<f64>) -> Vec<f64> {
        let mut sum: Vec<f64> = Vec::new();
        let mut n = 0usize;
        for s in self.pooled_samples() {
            let v = f(s);
            if sum.is_empty() {
                sum = vec![0.0; v.len()];
            }
            sum.iter_mut().zip(&v).for_each(|(a, b)| *a += b);
            n += 1;
        }
        sum.iter().map(|a| a / n as f64).collect()
    }

    pub fn mean_mu0(&self) -> Vec<f64> {
        self.pooled_vec_mean(|s| s.mu0.clone())
    }

    pub fn mean_mu1(&self) -> Vec<f64> {
        self.pooled_vec_mean(PosteriorSample::mu1)
    }

    pub fn mean_sigma(&self, component: usize) -> Matrix {
        let v = self.pooled_vec_mean(|s| {
            if component == 0 {
                s.sigma0.as_slice().to_vec()
            } else {
                s.sigma1.as_slice().to_vec()
            }
        });
        Matrix::from_row_major(self.dim_names.len(), v).expect("square covariance")
    }

    pub fn mean_pi1(&self) -> Option<f64> {
        let v = self.pooled_vec_mean(|s| s.pi1.into_iter().collect());
        v.first().copied()
    }

    pub fn mean_mrf(&self) -> Option<MrfParams> {
        if self.model != ModelKind::Mrf {
            return None;
        }
        let v = self.pooled_vec_mean(|s| s.mrf.as_ref().map(|p| p.to_vec()).unwrap_or_default());
        Some(MrfParams::from_slice(&v))
    }

    /// Mean post-burn-in Metropolis acceptance across chains.
    pub fn mean_acceptance(&self) -> Option<f64> {
        let rates: Vec<f64> = self.chains.iter().filter_map(|c| c.acceptance_rate).collect();
        if rates.is_empty() {
            None
        } else {
            Some(rates.iter().sum::<f64>() / rates.len() as f64)
        }
    }
}

/// Runs `config.n_chains` independently seeded chains (in parallel when
/// enabled) and pools them.
pub fn run_multichain(
    config: &SamplerConfig,
    data: &GeneTable,
    nets: &NetworkSet,
    prior: &PriorSpec,
) -> Result<MultiChainResult> {
    config.validate()?;
    prior.validate()?;
    let outputs = map_indexed(config.execution, config.n_chains, |c| {
        run_chain(config, data, nets, prior, c)
    });
    pool(config, data, nets, outputs)
}

/// Continues one saved state per chain up to `n_burnin + n_keep` sweeps.
/// Only sweeps run here contribute draws and label counts.
pub fn resume_multichain(
    config: &SamplerConfig,
    data: &GeneTable,
    nets: &NetworkSet,
    prior: &PriorSpec,
    states: Vec<ChainState>,
) -> Result<MultiChainResult> {
    config.validate()?;
    prior.validate()?;
    if states.len() != config.n_chains {
        return Err(Error::Checkpoint(format!(
            "{} saved states for {} chains",
            states.len(),
            config.n_chains
        )));
    }
    let total = config.n_burnin + config.n_keep;
    for (c, s) in states.iter().enumerate() {
        if s.model != config.model {
            return Err(Error::Checkpoint(format!(
                "chain {}: saved state is for the {} model",
                c + 1,
                s.model.name()
            )));
        }
        if s.labels.len() != data.len() || s.mixture.mu0.len() != data.dim() {
            return Err(Error::Checkpoint(format!(
                "chain {}: saved state does not match the data",
                c + 1
            )));
        }
        if s.mrf.as_ref().is_some_and(|m| m.betas.len() != nets.len()) {
            return Err(Error::Checkpoint(format!(
                "chain {}: saved state has a different number of networks",
                c + 1
            )));
        }
        if s.iteration >= total {
            return Err(Error::Checkpoint(format!(
                "chain {}: saved state is at sweep {}, nothing left of {total}",
                c + 1,
                s.iteration
            )));
        }
    }
    let states: Vec<std::sync::Mutex<Option<ChainState>>> =
        states.into_iter().map(|s| std::sync::Mutex::new(Some(s))).collect();
    let outputs = map_indexed(config.execution, config.n_chains, |c| {
        let state = states[c].lock().expect("unpoisoned").take().expect("taken once");
        Chain::new(state, config, data, nets, prior)?.run(c)
    });
    pool(config, data, nets, outputs)
}

fn pool(
    config: &SamplerConfig,
    data: &GeneTable,
    nets: &NetworkSet,
    outputs: Vec<Result<ChainOutput>>,
) -> Result<MultiChainResult> {
    let chains = outputs.into_iter().collect::<Result<Vec<_>>>()?;
    let total: u64 = chains.iter().map(|c| c.n_retained).sum();
    let mut counts = vec![0u64; data.len()];
    for c in &chains {
        for (a, &b) in counts.iter_mut().zip(&c.label_counts) {
            *a += b as u64;
        }
    }
    let posterior_prob = counts.iter().map(|&c| c as f64 / total as f64).collect();
    Ok(MultiChainResult {
        model: config.model,
        covariance_mode: config.covariance_mode,
        dim_names: data.dim_names().to_vec(),
        network_names: match config.model {
            ModelKind::Mrf => nets.names(),
            ModelKind::Smjm => Vec::new(),
        },
        chains,
        posterior_prob,
    })
}
