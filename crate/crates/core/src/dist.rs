//! Densities and samplers used by the Gibbs updates.

use rand::Rng;
use rand_distr::{Beta, ChiSquared, Distribution, Gamma, StandardNormal};
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};
use crate::linalg::{CholFactor, Matrix};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Rejection attempts before the truncated MVN sampler falls back to a
/// coordinate-wise Gibbs sweep.
pub const TRUNCATED_MVN_REJECTION_ATTEMPTS: usize = 100;

/// Sweeps used by the coordinate-wise fallback when no previous draw is
/// available to start from.
const COLD_START_SWEEPS: usize = 50;

/// Above this standardized bound the inverse-CDF tail loses all precision
/// and the exponential-proposal rejection sampler is used instead.
const DEEP_TAIL: f64 = 30.0;

/// Log density of `MVN(mu, L·Lᵀ)` at `x`.
pub fn mvn_logpdf(x: &[f64], mu: &[f64], chol: &CholFactor) -> f64 {
    let d = chol.dim();
    debug_assert_eq!(x.len(), d);
    debug_assert_eq!(mu.len(), d);
    let diff: Vec<f64> = x.iter().zip(mu).map(|(a, b)| a - b).collect();
    let z = chol.solve_lower(&diff);
    let quad: f64 = z.iter().map(|v| v * v).sum();
    -0.5 * d as f64 * LN_2PI - chol.half_log_det() - 0.5 * quad
}

/// Univariate normal log density.
pub fn normal_logpdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * LN_2PI - sd.ln() - 0.5 * z * z
}

pub fn sample_std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Draws `mu + L·z` with `z ~ N(0, I)`.
pub fn sample_mvn<R: Rng + ?Sized>(mu: &[f64], chol: &CholFactor, rng: &mut R) -> Vec<f64> {
    let z: Vec<f64> = (0..chol.dim()).map(|_| sample_std_normal(rng)).collect();
    chol.mul_lower(&z).into_iter().zip(mu).map(|(a, m)| a + m).collect()
}

/// Standard normal CDF.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal upper tail `P(Z > x)`, accurate far into the tail.
pub fn std_normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Inverse of [`std_normal_sf`].
fn std_normal_isf(p: f64) -> f64 {
    std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}

fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Standard normal conditioned on `z > a`.
pub fn sample_std_normal_above<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    if a >= DEEP_TAIL {
        // Exponential proposal with the optimal rate; acceptance is ~1 here.
        let rate = 0.5 * (a + (a * a + 4.0).sqrt());
        loop {
            let z = a - open_unit(rng).ln() / rate;
            let log_accept = -0.5 * (z - rate) * (z - rate);
            if open_unit(rng).ln() <= log_accept {
                return z;
            }
        }
    }
    loop {
        let z = if a >= 0.0 {
            // Invert the survival function: P(Z > z) = u·P(Z > a).
            std_normal_isf(open_unit(rng) * std_normal_sf(a))
        } else {
            let lo = std_normal_cdf(a);
            let p = lo + open_unit(rng) * (1.0 - lo);
            -std_normal_isf(p)
        };
        if z > a && z.is_finite() {
            return z;
        }
    }
}

/// `N(mean, sd²)` conditioned on `x > lower`.
pub fn sample_truncated_normal_above<R: Rng + ?Sized>(mean: f64, sd: f64, lower: f64, rng: &mut R) -> f64 {
    loop {
        let x = mean + sd * sample_std_normal_above((lower - mean) / sd, rng);
        if x > lower {
            return x;
        }
    }
}

/// One draw from `MVN(mu, L·Lᵀ)` restricted to the open positive orthant.
///
/// Plain rejection is tried first. If it fails [`TRUNCATED_MVN_REJECTION_ATTEMPTS`]
/// times, one coordinate-wise Gibbs sweep over univariate truncated normals is
/// run from `previous` (which must be strictly positive). Without a previous
/// value the sweep starts from a positive projection of `mu` and runs several
/// sweeps.
pub fn sample_truncated_mvn_positive<R: Rng + ?Sized>(
    mu: &[f64],
    chol: &CholFactor,
    previous: Option<&[f64]>,
    rng: &mut R,
) -> Vec<f64> {
    for _ in 0..TRUNCATED_MVN_REJECTION_ATTEMPTS {
        let x = sample_mvn(mu, chol, rng);
        if x.iter().all(|&v| v > 0.0) {
            return x;
        }
    }
    let precision = chol.inverse();
    match previous {
        Some(prev) if prev.iter().all(|&v| v > 0.0) => {
            let mut x = prev.to_vec();
            gibbs_positive_sweep(&mut x, mu, &precision, rng);
            x
        }
        _ => {
            let diag = chol.reconstruct().diag();
            let mut x: Vec<f64> = mu
                .iter()
                .zip(&diag)
                .map(|(&m, &v)| if m > 0.0 { m } else { 0.1 * v.sqrt() })
                .collect();
            for _ in 0..COLD_START_SWEEPS {
                gibbs_positive_sweep(&mut x, mu, &precision, rng);
            }
            x
        }
    }
}

fn gibbs_positive_sweep<R: Rng + ?Sized>(x: &mut [f64], mu: &[f64], precision: &Matrix, rng: &mut R) {
    let d = x.len();
    for j in 0..d {
        let qjj = precision[(j, j)];
        let shift: f64 = (0..d)
            .filter(|&k| k != j)
            .map(|k| precision[(j, k)] * (x[k] - mu[k]))
            .sum();
        let cond_mean = mu[j] - shift / qjj;
        let cond_sd = (1.0 / qjj).sqrt();
        x[j] = sample_truncated_normal_above(cond_mean, cond_sd, 0.0, rng);
    }
}

/// Wishart draw with the given scale (through its Cholesky factor) and
/// degrees of freedom, via the Bartlett decomposition. The mean is
/// `dof · scale`.
pub fn sample_wishart<R: Rng + ?Sized>(scale_chol: &CholFactor, dof: f64, rng: &mut R) -> Result<Matrix> {
    let d = scale_chol.dim();
    if !(dof >= d as f64) {
        return Err(Error::invalid(format!(
            "Wishart degrees of freedom {dof} below dimension {d}"
        )));
    }
    let mut a = Matrix::zeros(d);
    for i in 0..d {
        let chi = ChiSquared::new(dof - i as f64).map_err(|e| Error::invalid(format!("chi-square: {e}")))?;
        a[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = sample_std_normal(rng);
        }
    }
    let la = scale_chol.lower().matmul(&a);
    let mut w = la.matmul(&la.transpose());
    w.symmetrize();
    Ok(w)
}

/// Gamma draw parameterized by shape and rate.
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    Gamma::new(shape, 1.0 / rate)
        .expect("gamma shape and rate must be positive")
        .sample(rng)
}

/// Beta draw strictly inside (0, 1).
pub fn sample_beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    let dist = Beta::new(a, b).expect("beta parameters must be positive");
    loop {
        let x: f64 = dist.sample(rng);
        if x > 0.0 && x < 1.0 {
            return x;
        }
    }
}

/// `log(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}
