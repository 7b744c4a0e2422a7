use approx::assert_abs_diff_eq;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

use netmix::dist::{
    mvn_logpdf, sample_beta, sample_mvn, sample_truncated_mvn_positive, sample_truncated_normal_above, sample_wishart,
};
use netmix::linalg::{cholesky, Matrix};
use netmix::rng::stream;

fn random_spd<R: Rng>(d: usize, rng: &mut R) -> Matrix {
    let mut out = Matrix::identity(d).scale(0.5);
    for _ in 0..d {
        let row: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        out.add_outer(&row, 1.0);
    }
    out
}

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.dim(), m.dim(), m.as_slice())
}

/// Log density computed independently with nalgebra's LU determinant and
/// inverse.
fn oracle_logpdf(x: &[f64], mu: &[f64], sigma: &Matrix) -> f64 {
    let s = to_na(sigma);
    let d = x.len() as f64;
    let r = DVector::from_iterator(x.len(), x.iter().zip(mu).map(|(a, b)| a - b));
    let inv = s.clone().try_inverse().unwrap();
    let quad = (r.transpose() * inv * &r)[(0, 0)];
    -0.5 * (d * (2.0 * std::f64::consts::PI).ln() + s.determinant().ln() + quad)
}

#[test]
fn logpdf_matches_nalgebra_oracle() {
    let mut rng = stream(11, 0);
    for _ in 0..300 {
        let d = rng.random_range(1..=5);
        let sigma = random_spd(d, &mut rng);
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mu: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
        let got = mvn_logpdf(&x, &mu, &cholesky(&sigma).unwrap());
        let want = oracle_logpdf(&x, &mu, &sigma);
        assert!((got - want).abs() < 1e-9 * want.abs().max(1.0), "{got} vs {want}");
    }
}

#[test]
fn mvn_draws_have_requested_moments() {
    let mut rng = stream(12, 0);
    let sigma = Matrix::from_rows(&[&[2.0, 0.6, 0.0], &[0.6, 1.0, -0.3], &[0.0, -0.3, 0.5]]);
    let mu = [1.0, -2.0, 0.5];
    let chol = cholesky(&sigma).unwrap();
    let n = 200_000;
    let mut mean = [0.0; 3];
    let mut cov = Matrix::zeros(3);
    let draws: Vec<Vec<f64>> = (0..n).map(|_| sample_mvn(&mu, &chol, &mut rng)).collect();
    for x in &draws {
        for c in 0..3 {
            mean[c] += x[c] / n as f64;
        }
    }
    for x in &draws {
        let r: Vec<f64> = x.iter().zip(&mean).map(|(a, b)| a - b).collect();
        cov.add_outer(&r, 1.0 / (n as f64 - 1.0));
    }
    for c in 0..3 {
        let se = (sigma[(c, c)] / n as f64).sqrt();
        assert!((mean[c] - mu[c]).abs() < 5.0 * se);
    }
    assert!(cov.max_abs_diff(&sigma) < 0.03);
}

#[test]
fn half_normal_mean() {
    let mut rng = stream(13, 0);
    let n = 200_000;
    let m: f64 = (0..n)
        .map(|_| sample_truncated_normal_above(0.0, 1.0, 0.0, &mut rng))
        .sum::<f64>()
        / n as f64;
    let want = (2.0 / std::f64::consts::PI).sqrt();
    let se = (1.0 - 2.0 / std::f64::consts::PI).sqrt() / (n as f64).sqrt();
    assert!((m - want).abs() < 5.0 * se, "{m}");
}

#[test]
fn truncated_mvn_far_from_boundary_is_plain_mvn() {
    let mut rng = stream(14, 0);
    let chol = cholesky(&Matrix::identity(2)).unwrap();
    let n = 50_000;
    let mut s = [0.0; 2];
    for _ in 0..n {
        let x = sample_truncated_mvn_positive(&[10.0, 10.0], &chol, None, &mut rng);
        assert!(x.iter().all(|&v| v > 0.0));
        s[0] += x[0] / n as f64;
        s[1] += x[1] / n as f64;
    }
    assert_abs_diff_eq!(s[0], 10.0, epsilon = 0.03);
    assert_abs_diff_eq!(s[1], 10.0, epsilon = 0.03);
}

#[test]
fn truncated_mvn_deep_in_negative_orthant_stays_positive() {
    let mut rng = stream(15, 0);
    let chol = cholesky(&Matrix::from_rows(&[&[1.0, 0.5], &[0.5, 1.0]])).unwrap();
    let mut prev = vec![0.1, 0.1];
    for _ in 0..2000 {
        prev = sample_truncated_mvn_positive(&[-8.0, -6.0], &chol, Some(&prev), &mut rng);
        assert!(prev.iter().all(|&v| v > 0.0 && v.is_finite()));
    }
}

#[test]
fn wishart_mean_is_dof_times_scale() {
    let mut rng = stream(16, 0);
    let d = 3;
    let dof = 7.0;
    let scale = Matrix::identity(d).scale(1.0 / dof);
    let chol = cholesky(&scale).unwrap();
    let n = 40_000;
    let mut mean = Matrix::zeros(d);
    for _ in 0..n {
        let w = sample_wishart(&chol, dof, &mut rng).unwrap();
        mean = mean.add(&w.scale(1.0 / n as f64));
    }
    assert!(mean.max_abs_diff(&Matrix::identity(d)) < 0.05, "{mean:?}");
}

#[test]
fn one_dimensional_wishart_is_scaled_chi_square() {
    let mut rng = stream(17, 0);
    let chol = cholesky(&Matrix::from_diag(&[2.0])).unwrap();
    let dof = 4.0;
    let n = 100_000;
    let draws: Vec<f64> = (0..n)
        .map(|_| sample_wishart(&chol, dof, &mut rng).unwrap()[(0, 0)])
        .collect();
    let m = draws.iter().sum::<f64>() / n as f64;
    let v = draws.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n as f64 - 1.0);
    // 2·χ²₄: mean 8, variance 32.
    assert!((m - 8.0).abs() < 5.0 * (32.0 / n as f64).sqrt());
    assert!((v - 32.0).abs() < 1.5);
}

#[test]
fn beta_moments() {
    let mut rng = stream(18, 0);
    for (a, b) in [(1.0, 1.0), (2.0, 5.0), (30.0, 400.0)] {
        let n = 100_000;
        let m = (0..n).map(|_| sample_beta(a, b, &mut rng)).sum::<f64>() / n as f64;
        let want = a / (a + b);
        let sd = (a * b / ((a + b) * (a + b) * (a + b + 1.0))).sqrt();
        assert!(
            (m - want).abs() < 5.0 * sd / (n as f64).sqrt(),
            "Beta({a},{b}) mean {m}"
        );
    }
}
