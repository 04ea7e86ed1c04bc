//! Binary classification metrics: per-class precision/recall/F1, the
//! support-weighted F1, its percentile bootstrap interval, and AUC-ROC as
//! the Mann-Whitney statistic with ties counted one half.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::seeded;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricError {
    #[error("length mismatch: {0} labels vs {1} predictions")]
    LengthMismatch(usize, usize),
    #[error("AUC is undefined without both classes ({positives} positives, {negatives} negatives)")]
    UndefinedAuc { positives: usize, negatives: usize },
    #[error("empty evaluation set")]
    Empty,
    #[error("score {0} is not finite")]
    NonFiniteScore(usize),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Metrics of one evaluated cell.
///
/// The percentile interval need not bracket `f1_weighted` on pathological
/// inputs; only `ci_lo <= ci_hi` is guaranteed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricCell {
    pub f1_weighted: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub auc: f64,
    /// Indexed by class label.
    pub per_class: [ClassStats; 2],
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Confusion {
    tp: usize,
    fp: usize,
    fn_: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn check_lengths(a: usize, b: usize) -> Result<(), MetricError> {
    if a != b {
        Err(MetricError::LengthMismatch(a, b))
    } else {
        Ok(())
    }
}

/// Precision, recall, F1 and support for classes 0 and 1. Any 0/0 is 0.
pub fn prf_per_class(y_true: &[u8], y_pred: &[u8]) -> Result<[ClassStats; 2], MetricError> {
    check_lengths(y_true.len(), y_pred.len())?;
    let mut conf = [Confusion::default(); 2];
    let mut support = [0usize; 2];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        let (t, p) = (usize::from(t != 0), usize::from(p != 0));
        support[t] += 1;
        if t == p {
            conf[t].tp += 1;
        } else {
            conf[p].fp += 1;
            conf[t].fn_ += 1;
        }
    }
    Ok([0, 1].map(|c| {
        let precision = ratio(conf[c].tp, conf[c].tp + conf[c].fp);
        let recall = ratio(conf[c].tp, conf[c].tp + conf[c].fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        ClassStats {
            precision,
            recall,
            f1,
            support: support[c],
        }
    }))
}

fn weighted(stats: &[ClassStats; 2]) -> f64 {
    let total: usize = stats.iter().map(|s| s.support).sum();
    if total == 0 {
        return 0.0;
    }
    stats.iter().map(|s| s.support as f64 * s.f1).sum::<f64>() / total as f64
}

/// Support-weighted mean of the per-class F1 scores.
pub fn weighted_f1(y_true: &[u8], y_pred: &[u8]) -> Result<f64, MetricError> {
    Ok(weighted(&prf_per_class(y_true, y_pred)?))
}

/// Probability that a random positive outscores a random negative, ties
/// counted one half. Computed from tie-averaged ranks in `O(n log n)`.
pub fn auc_roc(y_true: &[u8], y_score: &[f64]) -> Result<f64, MetricError> {
    check_lengths(y_true.len(), y_score.len())?;
    if let Some(i) = y_score.iter().position(|s| !s.is_finite()) {
        return Err(MetricError::NonFiniteScore(i));
    }
    let positives = y_true.iter().filter(|&&y| y != 0).count();
    let negatives = y_true.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(MetricError::UndefinedAuc {
            positives,
            negatives,
        });
    }
    let mut order: Vec<usize> = (0..y_score.len()).collect();
    order.sort_by(|&a, &b| y_score[a].total_cmp(&y_score[b]));

    // Twice the positive rank sum, kept integral: a tie block covering
    // 1-based ranks lo..=hi contributes (lo + hi) per positive member.
    let mut twice_rank_sum: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && y_score[order[j]] == y_score[order[i]] {
            j += 1;
        }
        let pos_in_block = order[i..j].iter().filter(|&&k| y_true[k] != 0).count() as u128;
        twice_rank_sum += pos_in_block * (i as u128 + 1 + j as u128);
        i = j;
    }
    let p = positives as u128;
    // 2U = 2R - P(P + 1); AUC = 2U / (2PN).
    let twice_u = twice_rank_sum - p * (p + 1);
    Ok(twice_u as f64 / (2 * p * negatives as u128) as f64)
}

/// Percentile bootstrap interval of the weighted F1 over `resamples` paired
/// resamples of the evaluation set. Quantiles interpolate linearly between
/// order statistics.
pub fn bootstrap_ci(
    y_true: &[u8],
    y_pred: &[u8],
    resamples: usize,
    level: f64,
    seed: u64,
) -> Result<(f64, f64), MetricError> {
    check_lengths(y_true.len(), y_pred.len())?;
    let n = y_true.len();
    if n == 0 {
        return Err(MetricError::Empty);
    }
    let resamples = resamples.max(1);
    let mut rng = seeded(seed);
    let mut t = vec![0u8; n];
    let mut p = vec![0u8; n];
    let mut stats: Vec<f64> = (0..resamples)
        .map(|_| {
            for k in 0..n {
                let i = rng.gen_range(0..n);
                t[k] = y_true[i];
                p[k] = y_pred[i];
            }
            weighted_f1(&t, &p).expect("equal lengths")
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let alpha = (1.0 - level.clamp(0.0, 1.0)) / 2.0;
    Ok((quantile(&stats, alpha), quantile(&stats, 1.0 - alpha)))
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Weighted F1 with bootstrap interval, AUC and per-class statistics.
pub fn evaluate(
    y_true: &[u8],
    y_pred: &[u8],
    y_score: &[f64],
    resamples: usize,
    level: f64,
    seed: u64,
) -> Result<MetricCell, MetricError> {
    if y_true.is_empty() {
        return Err(MetricError::Empty);
    }
    let per_class = prf_per_class(y_true, y_pred)?;
    let auc = auc_roc(y_true, y_score)?;
    let (ci_lo, ci_hi) = bootstrap_ci(y_true, y_pred, resamples, level, seed)?;
    Ok(MetricCell {
        f1_weighted: weighted(&per_class),
        ci_lo,
        ci_hi,
        auc,
        per_class,
    })
}
