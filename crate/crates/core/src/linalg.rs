//! Small dense linear algebra for the d×d covariance work done by the samplers.
//!
//! Score dimensions are tiny (three in the motivating application, at most a
//! handful in practice), so everything here is a straightforward row-major
//! `Vec<f64>` with O(d³) routines. No attempt is made to be a general matrix
//! library.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported score dimension.
pub const MAX_DIM: usize = 16;

/// Square row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Matrix::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from row slices. Panics if the rows are ragged or
    /// not square.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n, "matrix rows must form a square");
            data.extend_from_slice(r);
        }
        Matrix { n, data }
    }

    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: data.len(),
            });
        }
        Ok(Matrix { n, data })
    }

    /// Covariance matrix with the given standard deviations and correlation
    /// matrix: `D·Corr·D`.
    pub fn from_sd_corr(sd: &[f64], corr: &Matrix) -> Self {
        let n = sd.len();
        assert_eq!(corr.dim(), n);
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = sd[i] * sd[j] * corr[(i, j)];
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.n, v.len());
        (0..self.n)
            .map(|i| {
                self.data[i * self.n..(i + 1) * self.n]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        Matrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            n: self.n,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    /// Adds `w · v vᵀ` in place.
    pub fn add_outer(&mut self, v: &[f64], w: f64) {
        let n = self.n;
        for i in 0..n {
            let vi = w * v[i];
            for j in 0..n {
                self.data[i * n + j] += vi * v[j];
            }
        }
    }

    /// Replaces the matrix with `(A + Aᵀ)/2`, removing round-off asymmetry.
    pub fn symmetrize(&mut self) {
        let n = self.n;
        for i in 0..n {
            for j in (i + 1)..n {
                let m = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = m;
                self[(j, i)] = m;
            }
        }
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| {
            (0..i).all(|j| {
                let (a, b) = (self[(i, j)], self[(j, i)]);
                (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
            })
        })
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| i == j || self[(i, j)] == 0.0))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Correlation matrix `D⁻¹·A·D⁻¹` with `D = sqrt(diag(A))`.
    pub fn to_correlation(&self) -> Matrix {
        let sd: Vec<f64> = self.diag().iter().map(|v| v.sqrt()).collect();
        let mut c = Matrix::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                c[(i, j)] = if i == j { 1.0 } else { self[(i, j)] / (sd[i] * sd[j]) };
            }
        }
        c
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Lower Cholesky factor `L` with `A = L·Lᵀ` and strictly positive diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CholFactor {
    l: Matrix,
}

/// Factorizes a symmetric matrix. Only the lower triangle is read.
pub fn cholesky(a: &Matrix) -> Result<CholFactor> {
    let n = a.dim();
    let mut l = Matrix::zeros(n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        // Pivots at rounding level relative to the diagonal count as zero.
        if !(d > f64::EPSILON * n as f64 * a[(j, j)].abs()) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(CholFactor { l })
}

/// Inverse of a symmetric positive-definite matrix.
pub fn spd_inverse(a: &Matrix) -> Result<Matrix> {
    Ok(cholesky(a)?.inverse())
}

impl CholFactor {
    pub fn dim(&self) -> usize {
        self.l.dim()
    }

    pub fn lower(&self) -> &Matrix {
        &self.l
    }

    /// `L · z`.
    pub fn mul_lower(&self, z: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|i| (0..=i).map(|k| self.l[(i, k)] * z[k]).sum()).collect()
    }

    /// Solves `L y = b`.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }

    /// Solves `Lᵀ x = y`.
    pub fn solve_upper(&self, y: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut x = y.to_vec();
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * x[k];
            }
            x[i] = s / self.l[(i, i)];
        }
        x
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_upper(&self.solve_lower(b))
    }

    pub fn inverse(&self) -> Matrix {
        let n = self.dim();
        let mut inv = Matrix::zeros(n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv.symmetrize();
        inv
    }

    /// `Σ log L_ii`, i.e. half the log-determinant of `A`.
    pub fn half_log_det(&self) -> f64 {
        (0..self.dim()).map(|i| self.l[(i, i)].ln()).sum()
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.half_log_det()
    }

    /// `L · Lᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        self.l.matmul(&self.l.transpose())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_factors_to_identity() {
        let c = cholesky(&Matrix::identity(4)).unwrap();
        assert_eq!(c.lower(), &Matrix::identity(4));
    }

    #[test]
    fn hand_factorization() {
        let a = Matrix::from_rows(&[&[4.0, 2.0], &[2.0, 3.0]]);
        let c = cholesky(&a).unwrap();
        let l = c.lower();
        assert_abs_diff_eq!(l[(0, 0)], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(l[(0, 1)], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(l[(1, 0)], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(l[(1, 1)], 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]);
        match cholesky(&a) {
            Err(Error::NotPositiveDefinite { pivot }) => assert_eq!(pivot, 1),
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn reconstruct_and_inverse() {
        let a = Matrix::from_rows(&[&[2.0, 0.3, -0.4], &[0.3, 1.5, 0.2], &[-0.4, 0.2, 3.0]]);
        let c = cholesky(&a).unwrap();
        let rel = c.reconstruct().max_abs_diff(&a) / a.frobenius_norm();
        assert!(rel < 1e-10);
        let prod = a.matmul(&c.inverse());
        assert!(prod.max_abs_diff(&Matrix::identity(3)) < 1e-12);
        let b = [1.0, -2.0, 0.5];
        let x = c.solve(&b);
        let ax = a.mul_vec(&x);
        for (u, v) in ax.iter().zip(&b) {
            assert_abs_diff_eq!(u, v, epsilon = 1e-12);
        }
    }
}
