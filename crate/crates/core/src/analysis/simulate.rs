//! Synthetic datasets: networks, MRF-prior labels and mixture scores.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{logistic, logit, sample_mvn, sample_std_normal};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, Matrix};
use crate::mrf::{conditional_logit, NeighborStats};
use crate::rng::{derive_seed, stream};
use crate::types::{GeneTable, MrfParams, Network, NetworkSet};

/// Small-world graph on a random subset of the items: a ring lattice in a
/// random order with a fraction of edges rewired to random members.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkGenSpec {
    pub name: String,
    /// Fraction of items that belong to the network at all.
    pub node_fraction: f64,
    pub mean_degree: f64,
    pub rewire: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NetworkSource {
    Given(NetworkSet),
    Generated(Vec<NetworkGenSpec>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MrfLabelSpec {
    pub betas: Vec<f64>,
    /// Fixed intercept; when absent it is tuned during the first half of the
    /// sweeps so that the label-1 fraction approaches `n_targets / G`.
    pub gamma: Option<f64>,
    pub sweeps: usize,
    /// When set, the final labels are the `n_targets` items with the highest
    /// conditional target probability averaged over this many closing
    /// sweeps, instead of the last Gibbs draw.
    pub top_window: Option<usize>,
    /// Standard deviation of Gaussian noise added to the averaged logits
    /// before the top-`n_targets` selection.
    pub top_noise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LabelSource {
    Explicit(Vec<u8>),
    MrfPrior(MrfLabelSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub g: usize,
    pub n_targets: usize,
    pub dim_names: Vec<String>,
    pub networks: NetworkSource,
    pub labels: LabelSource,
    pub mu0: Vec<f64>,
    pub mu1: Vec<f64>,
    pub sigma0: Matrix,
    pub sigma1: Matrix,
    pub n_replicates: usize,
    pub seed: u64,
}

/// Component means of the reference design.
pub const REFERENCE_MU0: [f64; 3] = [0.11, 0.02, 13.35];
pub const REFERENCE_MU1: [f64; 3] = [0.50, 0.26, 14.58];
/// Correlations (B,E), (B,S), (E,S) within each component.
pub const REFERENCE_CORR0: [f64; 3] = [0.013, -0.013, 0.010];
pub const REFERENCE_CORR1: [f64; 3] = [0.119, 0.475, 0.077];
/// Per-coordinate standard deviations. Not part of the published design;
/// chosen so the sequence score is clearly the weakest source and the
/// mixture is well enough identified at G = 3779 for posterior means to sit
/// close to the maximum likelihood estimates.
pub const REFERENCE_SD0: [f64; 3] = [0.18, 0.11, 0.80];
pub const REFERENCE_SD1: [f64; 3] = [0.20, 0.12, 0.90];
pub const REFERENCE_BETAS: [f64; 2] = [1.06, 0.61];
pub const REFERENCE_TARGET_FRACTION: f64 = 487.0 / 3779.0;

fn corr3(c: [f64; 3]) -> Matrix {
    Matrix::from_rows(&[&[1.0, c[0], c[1]], &[c[0], 1.0, c[2]], &[c[1], c[2], 1.0]])
}

impl SimulationSpec {
    /// The reference design scaled to `g` items: two generated networks (a
    /// sparse, wide-coverage one and a denser, narrower one), MRF-prior
    /// labels with the reference weights, and the reference score model.
    pub fn reference(g: usize, n_replicates: usize, seed: u64) -> Self {
        SimulationSpec {
            g,
            n_targets: ((g as f64) * REFERENCE_TARGET_FRACTION).round() as usize,
            dim_names: vec!["B".into(), "E".into(), "S".into()],
            networks: NetworkSource::Generated(vec![
                NetworkGenSpec {
                    name: "coexp".into(),
                    node_fraction: 3208.0 / 3779.0,
                    mean_degree: 6.0,
                    rewire: 0.05,
                },
                NetworkGenSpec {
                    name: "go".into(),
                    node_fraction: 1644.0 / 3779.0,
                    mean_degree: 12.0,
                    rewire: 0.7,
                },
            ]),
            labels: LabelSource::MrfPrior(MrfLabelSpec {
                betas: REFERENCE_BETAS.to_vec(),
                gamma: None,
                sweeps: 500,
                top_window: Some(20),
                top_noise: 0.75,
            }),
            mu0: REFERENCE_MU0.to_vec(),
            mu1: REFERENCE_MU1.to_vec(),
            sigma0: Matrix::from_sd_corr(&REFERENCE_SD0, &corr3(REFERENCE_CORR0)),
            sigma1: Matrix::from_sd_corr(&REFERENCE_SD1, &corr3(REFERENCE_CORR1)),
            n_replicates,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n_targets > 0 && self.n_targets < self.g) {
            return Err(Error::invalid(format!(
                "need 0 < targets < items, got {} of {}",
                self.n_targets, self.g
            )));
        }
        let d = self.dim_names.len();
        if self.mu0.len() != d || self.mu1.len() != d || self.sigma0.dim() != d || self.sigma1.dim() != d {
            return Err(Error::invalid("score model dimensions disagree"));
        }
        for (j, s) in [&self.sigma0, &self.sigma1].into_iter().enumerate() {
            if !s.is_symmetric(1e-12) || cholesky(s).is_err() {
                return Err(Error::invalid(format!("sigma{j} is not symmetric positive definite")));
            }
        }
        if self.n_replicates == 0 {
            return Err(Error::invalid("need at least one replicate"));
        }
        match &self.networks {
            NetworkSource::Given(n) => {
                if n.n_items().is_some_and(|m| m != self.g) {
                    return Err(Error::invalid("given networks do not span all items"));
                }
            }
            NetworkSource::Generated(specs) => {
                for s in specs {
                    if !(s.node_fraction > 0.0 && s.node_fraction <= 1.0)
                        || !(s.mean_degree >= 1.0)
                        || !(0.0..=1.0).contains(&s.rewire)
                    {
                        return Err(Error::invalid(format!("bad generator for network `{}`", s.name)));
                    }
                }
            }
        }
        match &self.labels {
            LabelSource::Explicit(l) => {
                if l.len() != self.g || l.iter().any(|&t| t > 1) {
                    return Err(Error::invalid("explicit labels must be G values in {0, 1}"));
                }
            }
            LabelSource::MrfPrior(m) => {
                let k = match &self.networks {
                    NetworkSource::Given(n) => n.len(),
                    NetworkSource::Generated(s) => s.len(),
                };
                if m.betas.len() != k {
                    return Err(Error::invalid(format!(
                        "{} label weights for {k} networks",
                        m.betas.len()
                    )));
                }
                if m.betas.iter().any(|&b| b < 0.0) {
                    return Err(Error::invalid("label weights must be non-negative"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedDataset {
    pub table: GeneTable,
    pub truth: Vec<u8>,
    pub networks: NetworkSet,
    /// Intercept used for MRF label generation, if any.
    pub gamma: Option<f64>,
}

pub fn generate_network<R: Rng + ?Sized>(spec: &NetworkGenSpec, g: usize, rng: &mut R) -> Network {
    let mut order: Vec<usize> = (0..g).collect();
    order.shuffle(rng);
    let n = ((spec.node_fraction * g as f64).round() as usize).clamp(2.min(g), g);
    let members = &order[..n];
    let mut edges = Vec::new();
    let mut push = |a: usize, b: usize, rng: &mut R| {
        let b = if rng.random::<f64>() < spec.rewire {
            members[rng.random_range(0..n)]
        } else {
            b
        };
        if a != b {
            edges.push((a, b));
        }
    };
    let half = ((spec.mean_degree / 2.0).round() as usize).clamp(1, ((n - 1) / 2).max(1));
    for p in 0..n {
        for off in 1..=half {
            push(members[p], members[(p + off) % n], rng);
        }
    }
    Network::from_index_edges(spec.name.clone(), g, &edges)
}

/// Gibbs sampling from the auto-logistic prior alone. Returns the labels
/// and the intercept used.
pub fn sample_mrf_labels<R: Rng + ?Sized>(
    nets: &NetworkSet,
    g: usize,
    spec: &MrfLabelSpec,
    n_targets: usize,
    rng: &mut R,
) -> (Vec<u8>, f64) {
    let target = n_targets as f64 / g as f64;
    let mut labels = vec![0u8; g];
    let mut idx: Vec<usize> = (0..g).collect();
    idx.shuffle(rng);
    for &i in &idx[..n_targets] {
        labels[i] = 1;
    }
    let mut stats = NeighborStats::compute(&labels, nets);
    let mut phi = MrfParams::new(spec.gamma.unwrap_or_else(|| logit(target)), spec.betas.clone());
    let calibrate = spec.gamma.is_none();
    let burn = spec.sweeps / 2;
    let window = spec.top_window.map(|w| w.clamp(1, spec.sweeps.max(1)));
    let mut marginal = vec![0.0; g];
    let mut n1 = n_targets;
    for sweep in 0..spec.sweeps {
        let record = window.is_some_and(|w| sweep + w >= spec.sweeps);
        for i in 0..g {
            let eta = if nets.is_empty() {
                phi.gamma
            } else {
                conditional_logit(i, &stats, &phi)
            };
            let p = logistic(eta);
            if record {
                marginal[i] += p;
            }
            let new = (rng.random::<f64>() < p) as u8;
            if new != labels[i] {
                labels[i] = new;
                if new == 1 {
                    n1 += 1;
                } else {
                    n1 -= 1;
                }
                if !nets.is_empty() {
                    stats.apply_flip(i, new, nets);
                }
            }
        }
        if calibrate && sweep < burn {
            let frac = (n1 as f64 / g as f64).clamp(0.5 / g as f64, 1.0 - 0.5 / g as f64);
            phi.gamma += (logit(target) - logit(frac)) / (1.0 + sweep as f64 / 10.0);
        }
    }
    if let Some(w) = window.filter(|_| spec.sweeps > 0) {
        let w = w as f64;
        let key: Vec<f64> = marginal
            .iter()
            .map(|&m| logit((m / w).clamp(1e-12, 1.0 - 1e-12)) + spec.top_noise * sample_std_normal(rng))
            .collect();
        // Ties (e.g. among singletons without noise) are broken by a random order.
        let mut order: Vec<usize> = (0..g).collect();
        order.shuffle(rng);
        order.sort_by(|&a, &b| key[b].total_cmp(&key[a]));
        labels.iter_mut().for_each(|t| *t = 0);
        for &i in &order[..n_targets] {
            labels[i] = 1;
        }
    }
    (labels, phi.gamma)
}

fn draw_scores<R: Rng + ?Sized>(spec: &SimulationSpec, truth: &[u8], rng: &mut R) -> Result<GeneTable> {
    let c0 = cholesky(&spec.sigma0)?;
    let c1 = cholesky(&spec.sigma1)?;
    let rows = truth
        .iter()
        .map(|&t| {
            if t == 1 {
                sample_mvn(&spec.mu1, &c1, rng)
            } else {
                sample_mvn(&spec.mu0, &c0, rng)
            }
        })
        .collect();
    let width = spec.g.to_string().len().max(4);
    let ids = (1..=spec.g).map(|i| format!("G{i:0width$}")).collect();
    GeneTable::new(ids, spec.dim_names.clone(), rows)
}

fn networks_and_labels<R: Rng + ?Sized>(
    spec: &SimulationSpec,
    rng: &mut R,
) -> Result<(NetworkSet, Vec<u8>, Option<f64>)> {
    let nets = match &spec.networks {
        NetworkSource::Given(n) => n.clone(),
        NetworkSource::Generated(specs) => {
            NetworkSet::new(specs.iter().map(|s| generate_network(s, spec.g, rng)).collect())?
        }
    };
    let (labels, gamma) = match &spec.labels {
        LabelSource::Explicit(l) => (l.clone(), None),
        LabelSource::MrfPrior(m) => {
            let (l, gm) = sample_mrf_labels(&nets, spec.g, m, spec.n_targets, rng);
            (l, Some(gm))
        }
    };
    if !labels.contains(&1) || !labels.contains(&0) {
        return Err(Error::invalid("generated labels contain a single class"));
    }
    Ok((nets, labels, gamma))
}

/// One dataset: networks, labels and scores all drawn from `rng`.
pub fn simulate_dataset<R: Rng + ?Sized>(spec: &SimulationSpec, rng: &mut R) -> Result<SimulatedDataset> {
    spec.validate()?;
    let (networks, truth, gamma) = networks_and_labels(spec, rng)?;
    let table = draw_scores(spec, &truth, rng)?;
    Ok(SimulatedDataset {
        table,
        truth,
        networks,
        gamma,
    })
}

/// `n_replicates` datasets sharing one network set and one label vector
/// (drawn once from `seed`), with scores redrawn per replicate.
pub fn simulate_replicates(spec: &SimulationSpec) -> Result<Vec<SimulatedDataset>> {
    spec.validate()?;
    let mut rng = stream(spec.seed, 0);
    let (networks, truth, gamma) = networks_and_labels(spec, &mut rng)?;
    (0..spec.n_replicates)
        .map(|r| {
            let mut rng = stream(derive_seed(spec.seed, r as u64), 1);
            Ok(SimulatedDataset {
                table: draw_scores(spec, &truth, &mut rng)?,
                truth: truth.clone(),
                networks: networks.clone(),
                gamma,
            })
        })
        .collect()
}
