//! Gibbs / Metropolis sampler for the two-component mixture, with either an
//! i.i.d. Bernoulli prior on labels or the multi-network MRF prior.
//!
//! One sweep updates, in order: `mu0`, `theta`, `Sigma0`, `Sigma1`, every
//! label (ascending index), then `pi1` or the MRF parameters.

mod chain;
mod checkpoint;
mod state;
mod updates;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::Execution;
use crate::types::CovarianceMode;

pub use chain::{
    monitored_names, resume_multichain, run_chain, run_multichain, Chain, ChainOutput, MultiChainResult,
    PosteriorSample,
};
pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_VERSION};
pub use state::ChainState;
pub use updates::{
    evaluate_phi_proposal, update_labels, update_mu0, update_phi, update_pi1, update_sigma, update_theta, PhiStep,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Independent labels with a common prior probability `pi1`.
    Smjm,
    /// Labels coupled through the auto-logistic MRF over the networks.
    Mrf,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Smjm => "smjm",
            ModelKind::Mrf => "mrf",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "smjm" | "smm" | "mixture" => Ok(ModelKind::Smjm),
            "mrf" | "mrf-mjm" | "mrf_mjm" => Ok(ModelKind::Mrf),
            _ => Err(Error::invalid(format!("unknown model `{s}`"))),
        }
    }
}

/// Target acceptance rate for the random-walk Metropolis step on Φ.
pub const TARGET_ACCEPT: f64 = 0.23;
/// Proposals per step-size adaptation batch.
pub const ADAPT_BATCH: u64 = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub model: ModelKind,
    pub covariance_mode: CovarianceMode,
    pub n_chains: usize,
    pub n_burnin: u64,
    /// Iterations run after burn-in; every `thin`-th one is retained.
    pub n_keep: u64,
    pub thin: u64,
    pub seed: u64,
    /// Explicit per-chain seeds; derived from `seed` when absent.
    pub chain_seeds: Option<Vec<u64>>,
    /// Quantiles of the first score used to split initial labels, cycled
    /// over chains.
    pub init_quantiles: Vec<f64>,
    pub rw_target_accept: f64,
    /// Initial random-walk scale for every Φ coordinate.
    pub rw_initial_step: f64,
    /// Adapt the random-walk scale during burn-in.
    pub rw_adapt: bool,
    /// Keep every retained draw (parameters only; labels are always
    /// accumulated as counts).
    pub store_samples: bool,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            model: ModelKind::Smjm,
            covariance_mode: CovarianceMode::General,
            n_chains: 3,
            n_burnin: 5000,
            n_keep: 10_000,
            thin: 1,
            seed: 1,
            chain_seeds: None,
            init_quantiles: vec![0.80, 0.87, 0.95],
            rw_target_accept: TARGET_ACCEPT,
            rw_initial_step: 0.1,
            rw_adapt: true,
            store_samples: true,
            execution: Execution::default(),
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_chains == 0 {
            return Err(Error::invalid("n_chains must be at least 1"));
        }
        if self.n_keep == 0 {
            return Err(Error::invalid("n_keep must be at least 1"));
        }
        if self.thin == 0 || self.thin > self.n_keep {
            return Err(Error::invalid(format!(
                "thin must be in 1..={}, got {}",
                self.n_keep, self.thin
            )));
        }
        if let Some(seeds) = &self.chain_seeds {
            if seeds.len() != self.n_chains {
                return Err(Error::invalid(format!(
                    "{} chain seeds given for {} chains",
                    seeds.len(),
                    self.n_chains
                )));
            }
        }
        if self.init_quantiles.is_empty() || self.init_quantiles.iter().any(|q| !(*q > 0.0 && *q < 1.0)) {
            return Err(Error::invalid("init quantiles must lie in (0, 1)"));
        }
        if !(self.rw_initial_step > 0.0) {
            return Err(Error::invalid("initial random-walk step must be positive"));
        }
        if !(self.rw_target_accept > 0.0 && self.rw_target_accept < 1.0) {
            return Err(Error::invalid("target acceptance must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Retained draws per chain.
    pub fn n_retained(&self) -> u64 {
        self.n_keep / self.thin
    }

    pub fn chain_seed(&self, chain: usize) -> u64 {
        match &self.chain_seeds {
            Some(s) => s[chain],
            None => crate::rng::derive_seed(self.seed, chain as u64),
        }
    }
}
