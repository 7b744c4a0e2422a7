//! Bayesian two-component mixture model for ranking items by their
//! probability of belonging to a signal class, from several per-item scores
//! and, optionally, several networks that couple neighbouring labels through
//! an auto-logistic Markov random field.
//!
//! The main entry points are [`sampler::run_multichain`] for posterior
//! inference, [`em::em_fit`] for the maximum-likelihood baseline and the
//! [`analysis`] module for diagnostics, ranking, simulation and ROC work.

pub mod analysis;
pub mod dist;
pub mod em;
pub mod error;
pub mod io;
pub mod linalg;
pub mod mrf;
pub mod par;
pub mod rng;
pub mod sampler;
pub mod types;

pub use error::{Error, Result};
pub use par::Execution;
pub use sampler::{ModelKind, MultiChainResult, SamplerConfig};
pub use types::{
    build_prior_spec, validate_alignment, AlignmentReport, CovarianceMode, GeneTable, MixtureParams, MrfParams,
    Network, NetworkSet, PriorSpec, RawNetwork,
};
