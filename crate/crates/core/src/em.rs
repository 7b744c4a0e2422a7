//! Maximum-likelihood fit of the two-component normal mixture by EM, used as
//! a reference point for the posterior means of the i.i.d. mixture model.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::mvn_logpdf;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, Matrix};
use crate::par::{map_indexed, Execution};
use crate::rng::{derive_seed, stream};
use crate::sampler::{ModelKind, MultiChainResult};
use crate::types::{sample_covariance, CovarianceMode, GeneTable};

/// Unconstrained two-component estimate. Unlike [`crate::MixtureParams`]
/// nothing forces `mu1 > mu0` coordinatewise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureEstimate {
    pub pi1: f64,
    pub mu0: Vec<f64>,
    pub mu1: Vec<f64>,
    pub sigma0: Matrix,
    pub sigma1: Matrix,
    pub covariance_mode: CovarianceMode,
}

impl MixtureEstimate {
    fn swapped(&self) -> Self {
        MixtureEstimate {
            pi1: 1.0 - self.pi1,
            mu0: self.mu1.clone(),
            mu1: self.mu0.clone(),
            sigma0: self.sigma1.clone(),
            sigma1: self.sigma0.clone(),
            covariance_mode: self.covariance_mode,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmResult {
    pub mixture: MixtureEstimate,
    pub loglik_trace: Vec<f64>,
    /// Per-item membership probability of component 1.
    pub responsibilities: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// A covariance had to be ridge-regularized at some iteration.
    pub regularized: bool,
    /// BIC prefers a single Gaussian over the fitted mixture.
    pub single_component_preferred: bool,
}

impl EmResult {
    pub fn loglik(&self) -> f64 {
        *self.loglik_trace.last().unwrap_or(&f64::NEG_INFINITY)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EmInit {
    /// Principal-direction split plus random restarts; best likelihood wins.
    Auto,
    /// Start from these parameters (single run).
    Params(MixtureEstimate),
}

#[derive(Debug, Clone)]
pub struct EmOptions {
    pub covariance_mode: CovarianceMode,
    pub init: EmInit,
    pub tol: f64,
    pub max_iter: usize,
    pub n_restarts: usize,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for EmOptions {
    fn default() -> Self {
        EmOptions {
            covariance_mode: CovarianceMode::General,
            init: EmInit::Auto,
            tol: 1e-8,
            max_iter: 500,
            n_restarts: 4,
            seed: 1,
            execution: Execution::default(),
        }
    }
}

/// Observed-data log-likelihood `Σ_i log[(1−π₁)φ₀(x_i) + π₁φ₁(x_i)]`.
pub fn mixture_loglik(data: &GeneTable, est: &MixtureEstimate) -> Result<f64> {
    Ok(e_step(data, est)?.1)
}

fn log_add(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn e_step(data: &GeneTable, est: &MixtureEstimate) -> Result<(Vec<f64>, f64)> {
    let c0 = cholesky(&est.sigma0)?;
    let c1 = cholesky(&est.sigma1)?;
    let lp0 = (1.0 - est.pi1).ln();
    let lp1 = est.pi1.ln();
    let mut resp = Vec::with_capacity(data.len());
    let mut ll = 0.0;
    for row in data.rows() {
        let a = lp0 + mvn_logpdf(row, &est.mu0, &c0);
        let b = lp1 + mvn_logpdf(row, &est.mu1, &c1);
        let tot = log_add(a, b);
        ll += tot;
        resp.push((b - tot).exp());
    }
    Ok((resp, ll))
}

/// Weighted mean and covariance; ridge-regularized when the effective
/// sample is too small or the estimate is not positive definite.
fn weighted_moments(
    data: &GeneTable,
    weights: impl Iterator<Item = f64> + Clone,
    mode: CovarianceMode,
    ridge_scale: &[f64],
) -> (Vec<f64>, Matrix, bool) {
    let d = data.dim();
    let total: f64 = weights.clone().sum();
    let mut mean = vec![0.0; d];
    for (row, w) in data.rows().zip(weights.clone()) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += w * v;
        }
    }
    if total > 0.0 {
        mean.iter_mut().for_each(|m| *m /= total);
    }
    let mut cov = Matrix::zeros(d);
    let mut r = vec![0.0; d];
    for (row, w) in data.rows().zip(weights) {
        for ((ri, v), m) in r.iter_mut().zip(row).zip(&mean) {
            *ri = v - m;
        }
        cov.add_outer(&r, w);
    }
    if total > 0.0 {
        cov = cov.scale(1.0 / total);
    }
    if mode == CovarianceMode::Diagonal {
        cov = Matrix::from_diag(&cov.diag());
    }
    let mut regularized = false;
    if total < (d + 1) as f64 || cholesky(&cov).is_err() {
        regularized = true;
        for (c, s) in ridge_scale.iter().enumerate() {
            cov[(c, c)] += 1e-3 * s;
        }
    }
    (mean, cov, regularized)
}

fn m_step(data: &GeneTable, resp: &[f64], mode: CovarianceMode, ridge: &[f64]) -> (MixtureEstimate, bool) {
    let g = data.len() as f64;
    let n1: f64 = resp.iter().sum();
    let (mu1, sigma1, r1) = weighted_moments(data, resp.iter().copied(), mode, ridge);
    let (mu0, sigma0, r0) = weighted_moments(data, resp.iter().map(|r| 1.0 - r), mode, ridge);
    let eps = 1e-12;
    (
        MixtureEstimate {
            pi1: (n1 / g).clamp(eps, 1.0 - eps),
            mu0,
            mu1,
            sigma0,
            sigma1,
            covariance_mode: mode,
        },
        r0 || r1,
    )
}

fn run_em(data: &GeneTable, start: MixtureEstimate, tol: f64, max_iter: usize, ridge: &[f64]) -> Result<EmResult> {
    let mode = start.covariance_mode;
    let mut est = start;
    let mut trace = Vec::new();
    let mut regularized = false;
    let mut converged = false;
    let (mut resp, mut ll) = e_step(data, &est)?;
    trace.push(ll);
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let (next, reg) = m_step(data, &resp, mode, ridge);
        regularized |= reg;
        est = next;
        let (r, l) = e_step(data, &est)?;
        resp = r;
        let prev = ll;
        ll = l;
        trace.push(ll);
        if ((ll - prev) / prev.abs().max(1e-300)).abs() < tol {
            converged = true;
            break;
        }
    }
    Ok(EmResult {
        mixture: est,
        loglik_trace: trace,
        responsibilities: resp,
        iterations,
        converged,
        regularized,
        single_component_preferred: false,
    })
}

/// Orders components so that component 1 has the larger mean in the first
/// coordinate where the two differ.
fn canonicalize(mut res: EmResult) -> EmResult {
    let m = &res.mixture;
    let swap = m
        .mu0
        .iter()
        .zip(&m.mu1)
        .find(|(a, b)| a != b)
        .is_some_and(|(a, b)| a > b);
    if swap {
        res.mixture = res.mixture.swapped();
        res.responsibilities.iter_mut().for_each(|r| *r = 1.0 - *r);
    }
    res
}

/// First principal direction of the covariance by power iteration.
fn principal_direction(cov: &Matrix) -> Vec<f64> {
    let d = cov.dim();
    let mut v = vec![1.0 / (d as f64).sqrt(); d];
    for _ in 0..200 {
        let w = cov.mul_vec(&v);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        v = w.iter().map(|x| x / norm).collect();
    }
    v
}

/// Hard split by 1-D two-means along the principal direction.
fn principal_split(data: &GeneTable, mode: CovarianceMode, ridge: &[f64]) -> MixtureEstimate {
    let cov = sample_covariance(data);
    let dir = principal_direction(&cov);
    let proj: Vec<f64> = data
        .rows()
        .map(|r| r.iter().zip(&dir).map(|(a, b)| a * b).sum())
        .collect();
    let mut sorted = proj.clone();
    sorted.sort_by(f64::total_cmp);
    let mut cut = sorted[sorted.len() / 2];
    for _ in 0..100 {
        let (mut s0, mut n0, mut s1, mut n1) = (0.0, 0usize, 0.0, 0usize);
        for &p in &proj {
            if p > cut {
                s1 += p;
                n1 += 1;
            } else {
                s0 += p;
                n0 += 1;
            }
        }
        if n0 == 0 || n1 == 0 {
            break;
        }
        let next = 0.5 * (s0 / n0 as f64 + s1 / n1 as f64);
        if next == cut {
            break;
        }
        cut = next;
    }
    let resp: Vec<f64> = proj.iter().map(|&p| if p > cut { 1.0 } else { 0.0 }).collect();
    m_step(data, &resp, mode, ridge).0
}

fn random_start<R: Rng>(data: &GeneTable, mode: CovarianceMode, rng: &mut R) -> MixtureEstimate {
    let g = data.len();
    let a = rng.random_range(0..g);
    let mut b = rng.random_range(0..g);
    if b == a {
        b = (a + 1) % g;
    }
    let cov = sample_covariance(data);
    let cov = match mode {
        CovarianceMode::General => cov,
        CovarianceMode::Diagonal => Matrix::from_diag(&cov.diag()),
    };
    MixtureEstimate {
        pi1: rng.random_range(0.05..0.5),
        mu0: data.row(a).to_vec(),
        mu1: data.row(b).to_vec(),
        sigma0: cov.clone(),
        sigma1: cov,
        covariance_mode: mode,
    }
}

fn single_gaussian_loglik(data: &GeneTable, mode: CovarianceMode) -> Option<f64> {
    let g = data.len() as f64;
    let mut cov = sample_covariance(data).scale((g - 1.0) / g);
    if mode == CovarianceMode::Diagonal {
        cov = Matrix::from_diag(&cov.diag());
    }
    let chol = cholesky(&cov).ok()?;
    let d = data.dim();
    let mut mean = vec![0.0; d];
    for r in data.rows() {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v / g;
        }
    }
    Some(data.rows().map(|r| mvn_logpdf(r, &mean, &chol)).sum())
}

/// Two-component EM with restarts. Components are canonicalized after
/// fitting; `theta > 0` is not imposed.
pub fn em_fit(data: &GeneTable, opts: &EmOptions) -> Result<EmResult> {
    let d = data.dim();
    if data.len() <= d + 1 {
        return Err(Error::invalid(format!(
            "EM needs more than {} items, got {}",
            d + 1,
            data.len()
        )));
    }
    let mode = opts.covariance_mode;
    let ridge = sample_covariance(data).diag();
    let starts: Vec<MixtureEstimate> = match &opts.init {
        EmInit::Params(p) => {
            if p.covariance_mode != mode {
                return Err(Error::invalid("initial parameters use a different covariance mode"));
            }
            vec![p.clone()]
        }
        EmInit::Auto => {
            let mut s = vec![principal_split(data, mode, &ridge)];
            for r in 0..opts.n_restarts {
                let mut rng = stream(derive_seed(opts.seed, r as u64), 0);
                s.push(random_start(data, mode, &mut rng));
            }
            s
        }
    };
    let fits = map_indexed(opts.execution, starts.len(), |i| {
        run_em(data, starts[i].clone(), opts.tol, opts.max_iter, &ridge)
    });
    let mut best: Option<EmResult> = None;
    for fit in fits {
        match fit {
            Ok(f) => {
                if best.as_ref().is_none_or(|b| f.loglik() > b.loglik()) {
                    best = Some(f);
                }
            }
            Err(e) => log::warn!("EM restart failed: {e}"),
        }
    }
    let mut best = canonicalize(best.ok_or_else(|| Error::invalid("every EM start failed"))?);
    if best.regularized {
        log::warn!("EM covariance collapsed and was ridge-regularized");
    }
    if let Some(ll1) = single_gaussian_loglik(data, mode) {
        let cov_params = match mode {
            CovarianceMode::General => d * (d + 1) / 2,
            CovarianceMode::Diagonal => d,
        };
        let k1 = (d + cov_params) as f64;
        let k2 = 2.0 * k1 + 1.0;
        let n = data.len() as f64;
        let bic1 = -2.0 * ll1 + k1 * n.ln();
        let bic2 = -2.0 * best.loglik() + k2 * n.ln();
        best.single_component_preferred = bic1 <= bic2;
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub parameter: String,
    pub em: f64,
    pub posterior_mean: f64,
    pub abs_diff: f64,
    pub rel_diff: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub mean_threshold: f64,
}

impl ComparisonReport {
    pub fn any_flagged(&self) -> bool {
        self.rows.iter().any(|r| r.flagged)
    }

    /// Largest absolute difference over component-mean coordinates.
    pub fn max_mean_diff(&self) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.parameter.starts_with("mu"))
            .map(|r| r.abs_diff)
            .fold(0.0, f64::max)
    }
}

/// Component-mean differences above this are flagged.
pub const MEAN_DIFF_THRESHOLD: f64 = 0.05;

/// Side-by-side EM estimates and pooled posterior means.
pub fn compare_em_vs_posterior(em: &EmResult, bayes: &MultiChainResult) -> Result<ComparisonReport> {
    if em.mixture.covariance_mode != bayes.covariance_mode {
        return Err(Error::invalid(format!(
            "covariance modes differ: EM {} vs posterior {}",
            em.mixture.covariance_mode, bayes.covariance_mode
        )));
    }
    let d = bayes.dim_names.len();
    if em.mixture.mu0.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: em.mixture.mu0.len(),
        });
    }
    let mut rows = Vec::new();
    let mut push = |name: String, e: f64, b: f64, is_mean: bool| {
        let abs = (e - b).abs();
        rows.push(ComparisonRow {
            parameter: name,
            em: e,
            posterior_mean: b,
            abs_diff: abs,
            rel_diff: if e != 0.0 {
                abs / e.abs()
            } else if abs == 0.0 {
                0.0
            } else {
                f64::INFINITY
            },
            flagged: is_mean && abs > MEAN_DIFF_THRESHOLD,
        });
    };
    if bayes.model == ModelKind::Smjm {
        if let Some(p) = bayes.mean_pi1() {
            push("pi1".into(), em.mixture.pi1, p, false);
        }
    }
    let (m0, m1) = (bayes.mean_mu0(), bayes.mean_mu1());
    for (c, name) in bayes.dim_names.iter().enumerate() {
        push(format!("mu0[{name}]"), em.mixture.mu0[c], m0[c], true);
    }
    for (c, name) in bayes.dim_names.iter().enumerate() {
        push(format!("mu1[{name}]"), em.mixture.mu1[c], m1[c], true);
    }
    for j in 0..2 {
        let s = bayes.mean_sigma(j);
        let e = if j == 0 { &em.mixture.sigma0 } else { &em.mixture.sigma1 };
        for a in 0..d {
            for b in a..d {
                push(
                    format!("sigma{j}[{},{}]", bayes.dim_names[a], bayes.dim_names[b]),
                    e[(a, b)],
                    s[(a, b)],
                    false,
                );
            }
        }
    }
    Ok(ComparisonReport {
        rows,
        mean_threshold: MEAN_DIFF_THRESHOLD,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::sample_mvn;

    fn two_cluster(seed: u64, g: usize) -> GeneTable {
        let mut rng = stream(seed, 0);
        let c = cholesky(&Matrix::identity(2)).unwrap();
        let rows: Vec<Vec<f64>> = (0..g)
            .map(|i| {
                let mu = if i % 4 == 0 { [4.0, 3.0] } else { [0.0, 0.0] };
                sample_mvn(&mu, &c, &mut rng)
            })
            .collect();
        GeneTable::new(
            (0..g).map(|i| format!("g{i}")).collect(),
            vec!["a".into(), "b".into()],
            rows,
        )
        .unwrap()
    }

    #[test]
    fn recovers_separated_clusters() {
        let t = two_cluster(1, 800);
        let r = em_fit(&t, &EmOptions::default()).unwrap();
        assert!(r.converged);
        assert!((r.mixture.pi1 - 0.25).abs() < 0.05);
        assert!((r.mixture.mu1[0] - 4.0).abs() < 0.2);
        assert!(r.mixture.mu0[0].abs() < 0.2);
        assert!(!r.single_component_preferred);
        assert!(r.responsibilities.iter().all(|&p| (0.0..=1.0).contains(&p)));
    }

    #[test]
    fn fixed_point_loglik_matches_direct_evaluation() {
        let t = two_cluster(2, 300);
        let r = em_fit(&t, &EmOptions::default()).unwrap();
        let direct = mixture_loglik(&t, &r.mixture).unwrap();
        assert!((direct - r.loglik()).abs() < 1e-10 * direct.abs());
    }

    #[test]
    fn canonical_order_puts_larger_mean_in_component_one() {
        let t = two_cluster(3, 400);
        let r = em_fit(&t, &EmOptions::default()).unwrap();
        assert!(r.mixture.mu1[0] > r.mixture.mu0[0]);
    }

    #[test]
    fn too_few_items() {
        let t = two_cluster(4, 3);
        assert!(em_fit(&t, &EmOptions::default()).is_err());
    }
}
