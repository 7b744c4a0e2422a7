//! Full-conditional updates. Each function reads the other quantities from
//! the state, draws from its own RNG stream and writes the new value back.

use rand::Rng;

use super::{ModelKind, ADAPT_BATCH};
use crate::dist::{logistic, sample_beta, sample_gamma, sample_mvn, sample_truncated_mvn_positive, sample_wishart};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, spd_inverse, Matrix, MAX_DIM};
use crate::mrf::{conditional_logit, log_pseudolikelihood_from_fields};
use crate::types::{CovarianceMode, GeneTable, MrfParams, NetworkSet, PriorSpec};

use super::state::ChainState;

fn numerical(state: &ChainState, what: impl Into<String>) -> Error {
    Error::Numerical {
        iteration: state.iteration,
        what: what.into(),
    }
}

/// `(n Σ⁻¹ + C⁻¹)⁻¹` and the matching posterior mean for a normal mean with
/// a diagonal normal prior centred at zero.
fn normal_mean_posterior(
    state: &ChainState,
    sigma: &Matrix,
    n: usize,
    sum: &[f64],
    prior: &PriorSpec,
    what: &str,
) -> Result<(Vec<f64>, Matrix)> {
    let sigma_inv =
        spd_inverse(sigma).map_err(|_| numerical(state, format!("{what}: covariance not positive definite")))?;
    let mut precision = sigma_inv.scale(n as f64);
    for (i, c) in prior.c_diag.iter().enumerate() {
        precision[(i, i)] += 1.0 / c;
    }
    let cov = spd_inverse(&precision)
        .map_err(|_| numerical(state, format!("{what}: posterior precision not positive definite")))?;
    let mean = cov.mul_vec(&sigma_inv.mul_vec(sum));
    Ok((mean, cov))
}

/// Gibbs draw of the component-0 mean.
pub fn update_mu0(state: &mut ChainState, data: &GeneTable, prior: &PriorSpec) -> Result<Vec<f64>> {
    let d = data.dim();
    let mut sum = vec![0.0; d];
    let mut n0 = 0;
    for (row, &t) in data.rows().zip(&state.labels) {
        if t == 0 {
            n0 += 1;
            sum.iter_mut().zip(row).for_each(|(s, v)| *s += v);
        }
    }
    let (mean, cov) = normal_mean_posterior(state, &state.mixture.sigma0, n0, &sum, prior, "mu0")?;
    let chol = cholesky(&cov).map_err(|_| numerical(state, "mu0: posterior covariance not positive definite"))?;
    let draw = sample_mvn(&mean, &chol, &mut state.rng.mu0);
    state.mixture.mu0 = draw.clone();
    Ok(draw)
}

/// Gibbs draw of the positive mean shift `theta = mu1 − mu0`.
pub fn update_theta(state: &mut ChainState, data: &GeneTable, prior: &PriorSpec) -> Result<Vec<f64>> {
    let d = data.dim();
    let mut sum = vec![0.0; d];
    let mut n1 = 0;
    let mu0 = &state.mixture.mu0;
    for (row, &t) in data.rows().zip(&state.labels) {
        if t == 1 {
            n1 += 1;
            for ((s, v), m) in sum.iter_mut().zip(row).zip(mu0) {
                *s += v - m;
            }
        }
    }
    let (mean, cov) = normal_mean_posterior(state, &state.mixture.sigma1, n1, &sum, prior, "theta")?;
    let chol = cholesky(&cov).map_err(|_| numerical(state, "theta: posterior covariance not positive definite"))?;
    let previous = state.mixture.theta.clone();
    let draw = sample_truncated_mvn_positive(&mean, &chol, Some(&previous), &mut state.rng.theta);
    state.mixture.theta = draw.clone();
    Ok(draw)
}

/// Gibbs draw of component `component`'s covariance. In general mode the
/// precision is Wishart; in diagonal mode each coordinate's precision is the
/// one-dimensional restriction (a Gamma draw).
pub fn update_sigma(state: &mut ChainState, data: &GeneTable, prior: &PriorSpec, component: usize) -> Result<Matrix> {
    let d = data.dim();
    let mu = if component == 0 {
        state.mixture.mu0.clone()
    } else {
        state.mixture.mu1()
    };
    let label = component as u8;
    let mut scatter = prior.r.scale(prior.rho);
    let mut n = 0usize;
    let mut resid = vec![0.0; d];
    for (row, &t) in data.rows().zip(&state.labels) {
        if t == label {
            n += 1;
            for ((r, v), m) in resid.iter_mut().zip(row).zip(&mu) {
                *r = v - m;
            }
            scatter.add_outer(&resid, 1.0);
        }
    }
    let dof = n as f64 + prior.rho;
    let sigma = match state.mixture.covariance_mode {
        CovarianceMode::General => {
            let scale = spd_inverse(&scatter)
                .map_err(|_| numerical(state, format!("sigma{component}: scale matrix not positive definite")))?;
            let scale_chol = cholesky(&scale)
                .map_err(|_| numerical(state, format!("sigma{component}: scale matrix not positive definite")))?;
            let precision = sample_wishart(&scale_chol, dof, &mut state.rng.sigma)?;
            spd_inverse(&precision).map_err(|_| numerical(state, format!("sigma{component}: Wishart draw singular")))?
        }
        CovarianceMode::Diagonal => {
            let mut var = Vec::with_capacity(d);
            for c in 0..d {
                let tau = sample_gamma(0.5 * dof, 0.5 * scatter[(c, c)], &mut state.rng.sigma);
                if !(tau > 0.0 && tau.is_finite()) {
                    return Err(numerical(state, format!("sigma{component}: precision draw {tau}")));
                }
                var.push(1.0 / tau);
            }
            Matrix::from_diag(&var)
        }
    };
    if component == 0 {
        state.mixture.sigma0 = sigma.clone();
    } else {
        state.mixture.sigma1 = sigma.clone();
    }
    Ok(sigma)
}

/// Allocation-free Gaussian log density for the label sweep.
struct GaussKernel {
    mean: [f64; MAX_DIM],
    precision: Matrix,
    log_norm: f64,
    d: usize,
}

impl GaussKernel {
    fn new(mean: &[f64], sigma: &Matrix) -> Result<Self> {
        let chol = cholesky(sigma)?;
        let d = mean.len();
        let mut m = [0.0; MAX_DIM];
        m[..d].copy_from_slice(mean);
        Ok(GaussKernel {
            mean: m,
            precision: chol.inverse(),
            log_norm: -0.5 * d as f64 * (2.0 * std::f64::consts::PI).ln() - chol.half_log_det(),
            d,
        })
    }

    #[inline]
    fn logpdf(&self, x: &[f64]) -> f64 {
        let d = self.d;
        let mut r = [0.0; MAX_DIM];
        for c in 0..d {
            r[c] = x[c] - self.mean[c];
        }
        let p = self.precision.as_slice();
        let mut quad = 0.0;
        for i in 0..d {
            let row = &p[i * d..(i + 1) * d];
            let mut s = 0.0;
            for j in 0..d {
                s += row[j] * r[j];
            }
            quad += r[i] * s;
        }
        self.log_norm - 0.5 * quad
    }
}

/// One systematic-scan Gibbs sweep over all labels, ascending index order.
/// Returns the number of labels that changed.
pub fn update_labels(state: &mut ChainState, data: &GeneTable, nets: &NetworkSet) -> Result<usize> {
    let k0 = GaussKernel::new(&state.mixture.mu0, &state.mixture.sigma0)
        .map_err(|_| numerical(state, "labels: sigma0 not positive definite"))?;
    let k1 = GaussKernel::new(&state.mixture.mu1(), &state.mixture.sigma1)
        .map_err(|_| numerical(state, "labels: sigma1 not positive definite"))?;
    let mut flips = 0;
    match state.model {
        ModelKind::Smjm => {
            let pi1 = state
                .mixture
                .pi1
                .ok_or_else(|| numerical(state, "labels: pi1 missing"))?;
            let prior_logit = (pi1 / (1.0 - pi1)).ln();
            for (i, row) in data.rows().enumerate() {
                let eta = prior_logit + k1.logpdf(row) - k0.logpdf(row);
                let new = (state.rng.labels.random::<f64>() < logistic(eta)) as u8;
                if new != state.labels[i] {
                    state.labels[i] = new;
                    flips += 1;
                }
            }
        }
        ModelKind::Mrf => {
            if state.stats.is_none() {
                state.refresh_stats(nets)?;
            }
            let phi = state.mrf.clone().expect("MRF state carries parameters");
            let stats = state.stats.as_mut().expect("stats refreshed above");
            for (i, row) in data.rows().enumerate() {
                let eta = conditional_logit(i, stats, &phi) + k1.logpdf(row) - k0.logpdf(row);
                let new = (state.rng.labels.random::<f64>() < logistic(eta)) as u8;
                if new != state.labels[i] {
                    state.labels[i] = new;
                    stats.apply_flip(i, new, nets);
                    flips += 1;
                }
            }
        }
    }
    Ok(flips)
}

/// Conjugate Beta update of the prior target probability.
pub fn update_pi1(state: &mut ChainState) -> Result<f64> {
    if state.model != ModelKind::Smjm {
        return Err(Error::WrongModel {
            model: "mrf",
            op: "update_pi1",
        });
    }
    let n1 = state.n_targets() as f64;
    let n0 = state.n_items() as f64 - n1;
    let draw = sample_beta(1.0 + n1, 1.0 + n0, &mut state.rng.prior);
    state.mixture.pi1 = Some(draw);
    Ok(draw)
}

/// Outcome of one Metropolis step on Φ.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiStep {
    pub proposal: MrfParams,
    pub accepted: bool,
    /// Rejected without evaluation because a weight left `[0, upper)`.
    pub out_of_support: bool,
    pub log_ratio: f64,
}

/// Gain on the batch acceptance error in the log-step update; roughly the
/// inverse slope of acceptance against log step for a random walk.
const RM_GAIN: f64 = 4.0;

/// Random-walk Metropolis step on `(gamma, beta_1..beta_K)` against the
/// pseudolikelihood (flat priors on gamma and on each weight within its
/// support). When `adapt` is set the step sizes are tuned toward the target
/// acceptance rate once per batch.
pub fn update_phi(
    state: &mut ChainState,
    nets: &NetworkSet,
    beta_upper: f64,
    target_accept: f64,
    adapt: bool,
) -> Result<PhiStep> {
    let current = match (&state.mrf, state.model) {
        (Some(phi), ModelKind::Mrf) => phi.clone(),
        _ => {
            return Err(Error::WrongModel {
                model: "smjm",
                op: "update_phi",
            })
        }
    };
    let mut proposed = current.to_vec();
    for (p, s) in proposed.iter_mut().zip(&state.rw_step) {
        *p += s * crate::dist::sample_std_normal(&mut state.rng.prior);
    }
    let proposal = MrfParams::from_slice(&proposed);
    let step = propose_phi(state, nets, current, proposal, beta_upper)?;
    state.propose_count += 1;
    state.batch_propose += 1;
    if step.accepted {
        state.accept_count += 1;
        state.batch_accept += 1;
        state.mrf = Some(step.proposal.clone());
    }
    if state.batch_propose >= ADAPT_BATCH {
        if adapt {
            state.batch_index += 1;
            let rate = state.batch_accept as f64 / state.batch_propose as f64;
            let factor = (RM_GAIN * (rate - target_accept) / state.batch_index as f64).exp();
            state.rw_step.iter_mut().for_each(|s| *s *= factor);
        }
        state.batch_accept = 0;
        state.batch_propose = 0;
    }
    Ok(step)
}

fn propose_phi(
    state: &mut ChainState,
    nets: &NetworkSet,
    current: MrfParams,
    proposal: MrfParams,
    beta_upper: f64,
) -> Result<PhiStep> {
    if !proposal.in_support(beta_upper) {
        return Ok(PhiStep {
            proposal,
            accepted: false,
            out_of_support: true,
            log_ratio: f64::NEG_INFINITY,
        });
    }
    if state.stats.is_none() {
        state.refresh_stats(nets)?;
    }
    let fields = state.stats.as_ref().expect("stats present").field_matrix();
    let log_ratio = log_pseudolikelihood_from_fields(&state.labels, &fields, &proposal)
        - log_pseudolikelihood_from_fields(&state.labels, &fields, &current);
    // Compare in log space; a zero ratio always accepts.
    let u: f64 = state.rng.prior.random();
    let accepted = log_ratio >= 0.0 || u.ln() < log_ratio;
    Ok(PhiStep {
        proposal,
        accepted,
        out_of_support: false,
        log_ratio,
    })
}

/// Metropolis decision for a caller-supplied proposal, with the same
/// bookkeeping-free accept rule as [`update_phi`]. Used to test the
/// acceptance rule directly.
pub fn evaluate_phi_proposal(
    state: &mut ChainState,
    nets: &NetworkSet,
    proposal: MrfParams,
    beta_upper: f64,
) -> Result<PhiStep> {
    let current = state.mrf.clone().ok_or(Error::WrongModel {
        model: "smjm",
        op: "evaluate_phi_proposal",
    })?;
    propose_phi(state, nets, current, proposal, beta_upper)
}
