//! Domain types shared by every stage: scored items, networks over them,
//! model parameters and the prior.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, Matrix, MAX_DIM};

/// Per-item identifiers and a G×d matrix of finite scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneTable {
    ids: Vec<String>,
    dim_names: Vec<String>,
    scores: Vec<f64>,
}

impl GeneTable {
    pub fn new(ids: Vec<String>, dim_names: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let d = dim_names.len();
        if d == 0 || d > MAX_DIM {
            return Err(Error::invalid(format!(
                "score dimension must be in 1..={MAX_DIM}, got {d}"
            )));
        }
        if ids.is_empty() {
            return Err(Error::invalid("score table has no rows"));
        }
        if ids.len() != rows.len() {
            return Err(Error::DimensionMismatch {
                expected: ids.len(),
                got: rows.len(),
            });
        }
        let mut seen = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if let Some(prev) = seen.insert(id.as_str(), i) {
                return Err(Error::invalid(format!(
                    "duplicate id `{id}` (rows {} and {})",
                    prev + 1,
                    i + 1
                )));
            }
        }
        let mut scores = Vec::with_capacity(rows.len() * d);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::invalid(format!(
                    "row {} (`{}`) has {} scores, expected {d}",
                    i + 1,
                    ids[i],
                    row.len()
                )));
            }
            if let Some(bad) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::invalid(format!(
                    "row {} (`{}`): non-finite value in column `{}`",
                    i + 1,
                    ids[i],
                    dim_names[bad]
                )));
            }
            scores.extend_from_slice(row);
        }
        Ok(GeneTable { ids, dim_names, scores })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim_names.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn dim_names(&self) -> &[String] {
        &self.dim_names
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.scores[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.scores.chunks_exact(self.dim())
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn index_of(&self) -> HashMap<&str, usize> {
        self.ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect()
    }

    /// Table restricted to the given score columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<GeneTable> {
        if let Some(&bad) = cols.iter().find(|&&c| c >= self.dim()) {
            return Err(Error::invalid(format!("no score column {bad}")));
        }
        let names = cols.iter().map(|&c| self.dim_names[c].clone()).collect();
        let rows = self.rows().map(|r| cols.iter().map(|&c| r[c]).collect()).collect();
        GeneTable::new(self.ids.clone(), names, rows)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.dim_names.iter().position(|n| n == name)
    }
}

/// Edge list as read from disk, before projection onto a table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawNetwork {
    pub name: String,
    pub edges: Vec<(String, String)>,
}

/// One undirected graph over the table's index space, stored as CSR.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Network {
    name: String,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
}

impl Network {
    /// Builds a symmetric simple graph on `n_items` nodes. Self-loops and
    /// duplicate edges (in either orientation) are discarded.
    pub fn from_index_edges(name: impl Into<String>, n_items: usize, edges: &[(usize, usize)]) -> Self {
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n_items];
        for &(a, b) in edges {
            assert!(a < n_items && b < n_items, "edge endpoint out of range");
            if a == b {
                continue;
            }
            adj[a].push(b as u32);
            adj[b].push(a as u32);
        }
        let mut offsets = Vec::with_capacity(n_items + 1);
        let mut neighbors = Vec::new();
        offsets.push(0);
        for mut list in adj {
            list.sort_unstable();
            list.dedup();
            neighbors.extend_from_slice(&list);
            offsets.push(neighbors.len());
        }
        Network {
            name: name.into(),
            offsets,
            neighbors,
        }
    }

    pub fn empty(name: impl Into<String>, n_items: usize) -> Self {
        Network::from_index_edges(name, n_items, &[])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn n_items(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn n_edges(&self) -> usize {
        self.neighbors.len() / 2
    }

    /// Each undirected edge once, as `(low, high)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n_items()).flat_map(move |i| {
            self.neighbors(i)
                .iter()
                .map(|&j| j as usize)
                .filter(move |&j| j > i)
                .map(move |j| (i, j))
        })
    }

    pub fn n_connected(&self) -> usize {
        (0..self.n_items()).filter(|&i| self.degree(i) > 0).count()
    }

    /// Same graph with nodes relabeled: node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Network {
        let edges: Vec<(usize, usize)> = self.edges().map(|(a, b)| (perm[a], perm[b])).collect();
        Network::from_index_edges(self.name.clone(), self.n_items(), &edges)
    }
}

/// K networks over the same item universe.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSet {
    networks: Vec<Network>,
}

impl NetworkSet {
    pub fn new(networks: Vec<Network>) -> Result<Self> {
        if let Some(first) = networks.first() {
            let n = first.n_items();
            if let Some(bad) = networks.iter().find(|net| net.n_items() != n) {
                return Err(Error::invalid(format!(
                    "network `{}` spans {} items, expected {n}",
                    bad.name(),
                    bad.n_items()
                )));
            }
        }
        Ok(NetworkSet { networks })
    }

    pub fn empty() -> Self {
        NetworkSet::default()
    }

    /// Projects raw edge lists onto the table's ids. Edges touching ids that
    /// are not in the table are dropped and counted in the report.
    pub fn from_raw(table: &GeneTable, raw: &[RawNetwork]) -> (NetworkSet, AlignmentReport) {
        let index = table.index_of();
        let mut networks = Vec::with_capacity(raw.len());
        let mut report = AlignmentReport {
            n_items: table.len(),
            networks: Vec::with_capacity(raw.len()),
        };
        for net in raw {
            let mut edges = Vec::with_capacity(net.edges.len());
            let mut dropped = 0;
            let mut unknown: Vec<&str> = Vec::new();
            let mut self_loops = 0;
            for (a, b) in &net.edges {
                match (index.get(a.as_str()), index.get(b.as_str())) {
                    (Some(&i), Some(&j)) => {
                        if i == j {
                            self_loops += 1;
                        } else {
                            edges.push((i, j));
                        }
                    }
                    (ia, ib) => {
                        dropped += 1;
                        if ia.is_none() {
                            unknown.push(a);
                        }
                        if ib.is_none() {
                            unknown.push(b);
                        }
                    }
                }
            }
            unknown.sort_unstable();
            unknown.dedup();
            let network = Network::from_index_edges(net.name.clone(), table.len(), &edges);
            let connected = network.n_connected();
            report.networks.push(NetworkAlignment {
                name: net.name.clone(),
                connected,
                singletons: table.len() - connected,
                edges_kept: network.n_edges(),
                duplicate_edges: edges.len() - network.n_edges(),
                self_loops,
                dropped_edges: dropped,
                unknown_ids: unknown.len(),
            });
            networks.push(network);
        }
        (NetworkSet { networks }, report)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.networks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.networks.is_empty()
    }

    pub fn networks(&self) -> &[Network] {
        &self.networks
    }

    #[inline]
    pub fn get(&self, k: usize) -> &Network {
        &self.networks[k]
    }

    pub fn names(&self) -> Vec<String> {
        self.networks.iter().map(|n| n.name().to_string()).collect()
    }

    /// Subset of networks by position.
    pub fn select(&self, which: &[usize]) -> NetworkSet {
        NetworkSet {
            networks: which.iter().map(|&k| self.networks[k].clone()).collect(),
        }
    }

    pub fn n_items(&self) -> Option<usize> {
        self.networks.first().map(Network::n_items)
    }
}

/// Per-network summary of how an edge list lined up with the score table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkAlignment {
    pub name: String,
    pub connected: usize,
    pub singletons: usize,
    pub edges_kept: usize,
    pub duplicate_edges: usize,
    pub self_loops: usize,
    pub dropped_edges: usize,
    pub unknown_ids: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub n_items: usize,
    pub networks: Vec<NetworkAlignment>,
}

impl AlignmentReport {
    pub fn total_dropped_edges(&self) -> usize {
        self.networks.iter().map(|n| n.dropped_edges).sum()
    }
}

/// Reports how each raw network aligns with the table without keeping the
/// projected graphs.
pub fn validate_alignment(table: &GeneTable, raw: &[RawNetwork]) -> AlignmentReport {
    NetworkSet::from_raw(table, raw).1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovarianceMode {
    General,
    Diagonal,
}

impl fmt::Display for CovarianceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CovarianceMode::General => "general",
            CovarianceMode::Diagonal => "diagonal",
        })
    }
}

impl FromStr for CovarianceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "general" | "multi" | "full" => Ok(CovarianceMode::General),
            "diagonal" | "diag" | "ind" => Ok(CovarianceMode::Diagonal),
            _ => Err(Error::invalid(format!("unknown covariance mode `{s}`"))),
        }
    }
}

/// Two-component normal mixture: `mu1 = mu0 + theta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    pub mu0: Vec<f64>,
    pub theta: Vec<f64>,
    pub sigma0: Matrix,
    pub sigma1: Matrix,
    pub covariance_mode: CovarianceMode,
    /// Prior target probability; only carried by the i.i.d. mixture model.
    pub pi1: Option<f64>,
}

impl MixtureParams {
    pub fn dim(&self) -> usize {
        self.mu0.len()
    }

    pub fn mu1(&self) -> Vec<f64> {
        self.mu0.iter().zip(&self.theta).map(|(a, b)| a + b).collect()
    }

    pub fn sigma(&self, component: usize) -> &Matrix {
        match component {
            0 => &self.sigma0,
            _ => &self.sigma1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        for (what, got) in [
            ("theta", self.theta.len()),
            ("sigma0", self.sigma0.dim()),
            ("sigma1", self.sigma1.dim()),
        ] {
            if got != d {
                return Err(Error::invalid(format!("{what} has dimension {got}, expected {d}")));
            }
        }
        if let Some(bad) = self.theta.iter().position(|&t| !(t > 0.0)) {
            return Err(Error::invalid(format!(
                "theta[{bad}] = {} must be positive",
                self.theta[bad]
            )));
        }
        for (j, s) in [&self.sigma0, &self.sigma1].into_iter().enumerate() {
            if !s.is_symmetric(1e-12) {
                return Err(Error::invalid(format!("sigma{j} is not symmetric")));
            }
            cholesky(s).map_err(|_| Error::invalid(format!("sigma{j} is not positive definite")))?;
            if self.covariance_mode == CovarianceMode::Diagonal && !s.is_diagonal() {
                return Err(Error::invalid(format!(
                    "sigma{j} has off-diagonal entries in diagonal mode"
                )));
            }
        }
        if let Some(p) = self.pi1 {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::invalid(format!("pi1 = {p} outside (0, 1)")));
            }
        }
        Ok(())
    }
}

/// Markov random field parameters: intercept and one weight per network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MrfParams {
    pub gamma: f64,
    pub betas: Vec<f64>,
}

impl MrfParams {
    pub fn new(gamma: f64, betas: Vec<f64>) -> Self {
        MrfParams { gamma, betas }
    }

    /// Whether every weight lies in the prior support `[0, upper)`.
    pub fn in_support(&self, upper: f64) -> bool {
        self.betas.iter().all(|&b| (0.0..upper).contains(&b))
    }

    /// Flattened `(gamma, beta_1, …, beta_K)`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.betas.len() + 1);
        v.push(self.gamma);
        v.extend_from_slice(&self.betas);
        v
    }

    pub fn from_slice(v: &[f64]) -> Self {
        MrfParams {
            gamma: v[0],
            betas: v[1..].to_vec(),
        }
    }
}

/// Upper end of the uniform prior on each network weight.
pub const BETA_UPPER: f64 = 6.0;
/// Prior variance of each mean coordinate.
pub const MEAN_PRIOR_VARIANCE: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    /// Diagonal of the prior covariance `C` for `mu0` and `theta`.
    pub c_diag: Vec<f64>,
    /// Wishart scale anchor; `E(Σ⁻¹) = R⁻¹`.
    pub r: Matrix,
    /// Wishart degrees of freedom.
    pub rho: f64,
    pub beta_upper: f64,
}

impl PriorSpec {
    pub fn dim(&self) -> usize {
        self.c_diag.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.r.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: self.r.dim(),
            });
        }
        cholesky(&self.r).map_err(|_| Error::invalid("prior R is not positive definite"))?;
        if self.rho < self.dim() as f64 {
            return Err(Error::invalid(format!(
                "prior degrees of freedom {} below dimension {}",
                self.rho,
                self.dim()
            )));
        }
        Ok(())
    }
}

/// Sample covariance (denominator `G − 1`) of the table's score columns.
pub fn sample_covariance(table: &GeneTable) -> Matrix {
    let d = table.dim();
    let g = table.len() as f64;
    let mut mean = vec![0.0; d];
    for row in table.rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= g);
    let mut cov = Matrix::zeros(d);
    let mut centered = vec![0.0; d];
    for row in table.rows() {
        for ((c, v), m) in centered.iter_mut().zip(row).zip(&mean) {
            *c = v - m;
        }
        cov.add_outer(&centered, 1.0);
    }
    cov.scale(1.0 / (g - 1.0))
}

/// Vague prior anchored on the marginal covariance of the data. Only zero
/// variance columns are rejected here; a singular `R` is caught by
/// [`PriorSpec::validate`] before sampling.
pub fn build_prior_spec(table: &GeneTable) -> Result<PriorSpec> {
    if table.len() < 2 {
        return Err(Error::invalid("need at least two items to estimate a prior scale"));
    }
    let r = sample_covariance(table);
    for (j, v) in r.diag().iter().enumerate() {
        if !(*v > 0.0) {
            return Err(Error::ZeroVariance {
                column: table.dim_names()[j].clone(),
            });
        }
    }
    let d = table.dim();
    Ok(PriorSpec {
        c_diag: vec![MEAN_PRIOR_VARIANCE; d],
        r,
        rho: d as f64,
        beta_upper: BETA_UPPER,
    })
}
