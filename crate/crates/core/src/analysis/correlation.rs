use serde::{Deserialize, Serialize};

use super::diagnostics::quantile;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const MIN_CORRELATION_DRAWS: usize = 100;

/// Posterior mean and equal-tailed 95% interval of every pairwise
/// correlation implied by a set of covariance draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSummary {
    pub mean: Matrix,
    pub lower: Matrix,
    pub upper: Matrix,
    pub n_draws: usize,
}

impl CorrelationSummary {
    pub fn dim(&self) -> usize {
        self.mean.dim()
    }

    pub fn covers(&self, i: usize, j: usize, value: f64) -> bool {
        self.lower[(i, j)] <= value && value <= self.upper[(i, j)]
    }
}

pub fn posterior_correlations(draws: &[&Matrix]) -> Result<CorrelationSummary> {
    if draws.len() < MIN_CORRELATION_DRAWS {
        return Err(Error::invalid(format!(
            "need at least {MIN_CORRELATION_DRAWS} covariance draws, got {}",
            draws.len()
        )));
    }
    let d = draws[0].dim();
    let corrs: Vec<Matrix> = draws.iter().map(|s| s.to_correlation()).collect();
    let mut mean = Matrix::identity(d);
    let mut lower = Matrix::identity(d);
    let mut upper = Matrix::identity(d);
    let mut buf = Vec::with_capacity(corrs.len());
    for i in 0..d {
        for j in (i + 1)..d {
            buf.clear();
            buf.extend(corrs.iter().map(|c| c[(i, j)].clamp(-1.0, 1.0)));
            let m = buf.iter().sum::<f64>() / buf.len() as f64;
            buf.sort_by(f64::total_cmp);
            let (lo, hi) = (quantile(&buf, 0.025), quantile(&buf, 0.975));
            for (a, b) in [(i, j), (j, i)] {
                mean[(a, b)] = m;
                lower[(a, b)] = lo;
                upper[(a, b)] = hi;
            }
        }
    }
    Ok(CorrelationSummary {
        mean,
        lower,
        upper,
        n_draws: draws.len(),
    })
}
