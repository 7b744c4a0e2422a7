use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// ROC curve as a polyline from (0, 0) to (1, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub fpr: Vec<f64>,
    pub tpr: Vec<f64>,
    pub auc: f64,
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| (xs[1] - xs[0]) * (ys[0] + ys[1]) * 0.5)
        .sum()
}

/// Threshold sweep over descending scores. Tied scores enter together, so
/// each distinct score contributes one vertex.
pub fn roc(scores: &[f64], truth: &[u8]) -> Result<RocCurve> {
    if scores.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: scores.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("scores contain NaN"));
    }
    let n_pos = truth.iter().filter(|&&t| t == 1).count();
    let n_neg = truth.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::invalid("ROC needs both classes in the truth labels"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut fpr = vec![0.0];
    let mut tpr = vec![0.0];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        while k < order.len() && scores[order[k]] == s {
            if truth[order[k]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        fpr.push(fp as f64 / n_neg as f64);
        tpr.push(tp as f64 / n_pos as f64);
    }
    let auc = trapezoid(&fpr, &tpr);
    Ok(RocCurve { fpr, tpr, auc })
}

/// AUC through the Mann–Whitney statistic, counting ties as one half.
pub fn auc_mann_whitney(scores: &[f64], truth: &[u8]) -> f64 {
    let pos: Vec<f64> = scores
        .iter()
        .zip(truth)
        .filter(|(_, &t)| t == 1)
        .map(|(&s, _)| s)
        .collect();
    let neg: Vec<f64> = scores
        .iter()
        .zip(truth)
        .filter(|(_, &t)| t != 1)
        .map(|(&s, _)| s)
        .collect();
    let mut u = 0.0;
    for p in &pos {
        for n in &neg {
            if p > n {
                u += 1.0;
            } else if p == n {
                u += 0.5;
            }
        }
    }
    u / (pos.len() * neg.len()) as f64
}

/// `n` evenly spaced points on [0, 1].
pub fn fpr_grid(n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

/// Highest TPR the curve reaches at false-positive rate `f`, interpolating
/// linearly between vertices.
fn tpr_at(curve: &RocCurve, f: f64) -> f64 {
    let (x, y) = (&curve.fpr, &curve.tpr);
    // Last vertex with fpr <= f.
    let idx = x.partition_point(|&v| v <= f);
    if idx == 0 {
        return 0.0;
    }
    let i = idx - 1;
    if x[i] == f || i + 1 == x.len() {
        return y[i];
    }
    let t = (f - x[i]) / (x[i + 1] - x[i]);
    y[i] + t * (y[i + 1] - y[i])
}

/// Vertical averaging: mean TPR across curves at each grid FPR.
pub fn average_roc(curves: &[RocCurve], grid: &[f64]) -> Result<RocCurve> {
    if curves.is_empty() {
        return Err(Error::invalid("no curves to average"));
    }
    let mut fpr = Vec::with_capacity(grid.len() + 2);
    let mut tpr = Vec::with_capacity(grid.len() + 2);
    for &f in grid {
        let t = curves.iter().map(|c| tpr_at(c, f)).sum::<f64>() / curves.len() as f64;
        fpr.push(f);
        tpr.push(t);
    }
    if fpr.first() != Some(&0.0) || tpr[0] != 0.0 {
        fpr.insert(0, 0.0);
        tpr.insert(0, 0.0);
    }
    if fpr.last() != Some(&1.0) {
        fpr.push(1.0);
        tpr.push(1.0);
    }
    let auc = trapezoid(&fpr, &tpr);
    Ok(RocCurve { fpr, tpr, auc })
}
