use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Conventional convergence threshold for the potential scale reduction.
pub const RHAT_THRESHOLD: f64 = 1.1;

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn var(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Potential scale reduction factor `sqrt(((n−1)/n·W + B/n) / W)` over
/// `m ≥ 2` chains of (at least) 10 draws. Chains are truncated to the
/// shortest length.
///
/// Constant chains that agree give 1; constant chains that disagree give
/// infinity.
pub fn rhat(chains: &[Vec<f64>]) -> Result<f64> {
    if chains.len() < 2 {
        return Err(Error::invalid("R-hat needs at least two chains"));
    }
    let n = chains.iter().map(Vec::len).min().unwrap_or(0);
    if n < 10 {
        return Err(Error::invalid(format!(
            "R-hat needs at least 10 draws per chain, got {n}"
        )));
    }
    let chains: Vec<&[f64]> = chains.iter().map(|c| &c[..n]).collect();
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let w = chains.iter().map(|c| var(c)).sum::<f64>() / chains.len() as f64;
    let nf = n as f64;
    let b = nf * var(&means);
    if w == 0.0 {
        return Ok(if b == 0.0 { 1.0 } else { f64::INFINITY });
    }
    Ok((((nf - 1.0) / nf * w + b / nf) / w).sqrt())
}

/// Linear-interpolation sample quantile (type 7). `sorted` must be
/// ascending and non-empty.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q975: f64,
    pub rhat: Option<f64>,
}

/// Pooled summary of one scalar across chains, with R-hat when at least
/// two chains of 10 draws are available.
pub fn summarize(name: &str, chains: &[Vec<f64>]) -> ParamSummary {
    let mut pooled: Vec<f64> = chains.iter().flatten().copied().collect();
    pooled.sort_by(f64::total_cmp);
    let (m, sd) = if pooled.is_empty() {
        (f64::NAN, f64::NAN)
    } else if pooled.len() == 1 {
        (pooled[0], 0.0)
    } else {
        (mean(&pooled), var(&pooled).sqrt())
    };
    let (q025, q975) = if pooled.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        (quantile(&pooled, 0.025), quantile(&pooled, 0.975))
    };
    ParamSummary {
        name: name.to_string(),
        mean: m,
        sd,
        q025,
        q975,
        rhat: rhat(chains).ok(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::sample_std_normal;
    use crate::rng::stream;

    #[test]
    fn constant_chains() {
        assert_eq!(rhat(&[vec![2.0; 20], vec![2.0; 20]]).unwrap(), 1.0);
        assert!(rhat(&[vec![2.0; 20], vec![3.0; 20]]).unwrap().is_infinite());
    }

    #[test]
    fn needs_two_chains_of_ten() {
        assert!(rhat(&[vec![0.0; 100]]).is_err());
        assert!(rhat(&[vec![0.0; 9], vec![1.0; 9]]).is_err());
    }

    #[test]
    fn iid_chains_near_one() {
        let mut rng = stream(7, 0);
        let chains: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..10_000).map(|_| sample_std_normal(&mut rng)).collect())
            .collect();
        let r = rhat(&chains).unwrap();
        assert!((0.99..=1.05).contains(&r), "{r}");
    }

    #[test]
    fn separated_chains_flagged() {
        let mut rng = stream(8, 0);
        let chains: Vec<Vec<f64>> = [0.0, 10.0]
            .iter()
            .map(|m| (0..1000).map(|_| m + sample_std_normal(&mut rng)).collect())
            .collect();
        assert!(rhat(&chains).unwrap() > 1.1);
    }

    #[test]
    fn identical_copies_give_the_finite_sample_factor() {
        let mut rng = stream(9, 0);
        let c: Vec<f64> = (0..50).map(|_| sample_std_normal(&mut rng)).collect();
        let r = rhat(&[c.clone(), c.clone(), c]).unwrap();
        assert!((r - (49.0f64 / 50.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn quantile_interpolates() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&x, 0.0), 1.0);
        assert_eq!(quantile(&x, 1.0), 4.0);
        assert!((quantile(&x, 0.5) - 2.5).abs() < 1e-15);
    }
}
