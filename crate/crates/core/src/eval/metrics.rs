use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_EPS: f64 = 1e-15;

fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::ShapeMismatch(format!("{a} predictions but {b} labels")));
    }
    if a == 0 {
        return Err(Error::Empty("no rows to score".into()));
    }
    Ok(())
}

/// Index order by score, ties kept in input order.
fn order_by(scores: &[f64], descending: bool) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    if descending {
        idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    } else {
        idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    }
    idx
}

/// Probability that a random positive outscores a random negative, ties
/// counted as one half.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_len(scores.len(), labels.len())?;
    let n_pos = labels.iter().filter(|&&l| l).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric("ROC AUC needs both classes".into()));
    }
    let idx = order_by(scores, false);
    // Twice the Mann-Whitney U statistic, kept in integers.
    let mut twice_u: u128 = 0;
    let mut neg_below: u64 = 0;
    let mut k = 0;
    while k < idx.len() {
        let s = scores[idx[k]];
        let (mut p, mut q) = (0u64, 0u64);
        while k < idx.len() && scores[idx[k]] == s {
            if labels[idx[k]] {
                p += 1;
            } else {
                q += 1;
            }
            k += 1;
        }
        twice_u += u128::from(p) * u128::from(2 * neg_below + q);
        neg_below += q;
    }
    Ok(twice_u as f64 / (2.0 * n_pos as f64 * n_neg as f64))
}

/// Average precision: Σ ΔRecall × Precision over a descending sweep with
/// tied scores processed as one block.
pub fn pr_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_len(scores.len(), labels.len())?;
    let n_pos = labels.iter().filter(|&&l| l).count();
    if n_pos == 0 {
        return Err(Error::UndefinedMetric("PR AUC needs at least one positive".into()));
    }
    let idx = order_by(scores, true);
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut ap = 0.0;
    let mut k = 0;
    while k < idx.len() {
        let s = scores[idx[k]];
        let mut block_pos = 0;
        while k < idx.len() && scores[idx[k]] == s {
            if labels[idx[k]] {
                block_pos += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        tp += block_pos;
        if block_pos > 0 {
            ap += block_pos as f64 * (tp as f64 / (tp + fp) as f64);
        }
    }
    Ok(ap / n_pos as f64)
}

/// Mean negative log-likelihood of the true class with probabilities
/// clipped to `[eps, 1 - eps]`.
pub fn log_loss(probs: &[Vec<f64>], labels: &[usize], eps: f64) -> Result<f64> {
    check_len(probs.len(), labels.len())?;
    let mut total = 0.0;
    for (p, &y) in probs.iter().zip(labels) {
        let Some(&py) = p.get(y) else {
            return Err(Error::LabelOutOfRange {
                label: y,
                n_classes: p.len(),
            });
        };
        total -= py.clamp(eps, 1.0 - eps).ln();
    }
    Ok(total / probs.len() as f64)
}

/// Binary log loss of the score `p` for the indicator `labels`.
pub fn binary_log_loss(p: &[f64], labels: &[bool], eps: f64) -> Result<f64> {
    check_len(p.len(), labels.len())?;
    let s: f64 = p
        .iter()
        .zip(labels)
        .map(|(&q, &l)| {
            let q = q.clamp(eps, 1.0 - eps);
            -(if l { q } else { 1.0 - q }).ln()
        })
        .sum();
    Ok(s / p.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub per_class: Vec<ClassScores>,
    /// Support-weighted means; `support` is the row count.
    pub weighted: ClassScores,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub fn classification_metrics(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<ClassificationMetrics> {
    check_len(y_pred.len(), y_true.len())?;
    let mut tp = vec![0usize; n_classes];
    let mut pred_count = vec![0usize; n_classes];
    let mut support = vec![0usize; n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        for c in [t, p] {
            if c >= n_classes {
                return Err(Error::LabelOutOfRange { label: c, n_classes });
            }
        }
        support[t] += 1;
        pred_count[p] += 1;
        if t == p {
            tp[t] += 1;
        }
    }
    let n = y_true.len();
    let per_class: Vec<ClassScores> = (0..n_classes)
        .map(|c| {
            let precision = ratio(tp[c], pred_count[c]);
            let recall = ratio(tp[c], support[c]);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassScores {
                precision,
                recall,
                f1,
                support: support[c],
            }
        })
        .collect();
    let wmean = |f: fn(&ClassScores) -> f64| per_class.iter().map(|s| s.support as f64 * f(s)).sum::<f64>() / n as f64;
    let weighted = ClassScores {
        precision: wmean(|s| s.precision),
        recall: wmean(|s| s.recall),
        f1: wmean(|s| s.f1),
        support: n,
    };
    Ok(ClassificationMetrics {
        accuracy: ratio(tp.iter().sum(), n),
        per_class,
        weighted,
    })
}

/// Per-class one-vs-rest values plus their support-weighted mean over the
/// classes where the metric is defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneVsRest {
    pub per_class: Vec<Option<f64>>,
    pub weighted: Option<f64>,
}

fn one_vs_rest(
    probs: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
    metric: fn(&[f64], &[bool]) -> Result<f64>,
) -> Result<OneVsRest> {
    check_len(probs.len(), labels.len())?;
    let mut per_class = Vec::with_capacity(n_classes);
    let (mut acc, mut weight) = (0.0, 0usize);
    for c in 0..n_classes {
        let scores: Vec<f64> = probs.iter().map(|p| p.get(c).copied().unwrap_or(0.0)).collect();
        let ind: Vec<bool> = labels.iter().map(|&y| y == c).collect();
        let v = metric(&scores, &ind).ok();
        if let Some(v) = v {
            let s = ind.iter().filter(|&&b| b).count();
            acc += s as f64 * v;
            weight += s;
        }
        per_class.push(v);
    }
    Ok(OneVsRest {
        per_class,
        weighted: (weight > 0).then(|| acc / weight as f64),
    })
}

pub fn one_vs_rest_roc_auc(probs: &[Vec<f64>], labels: &[usize], n_classes: usize) -> Result<OneVsRest> {
    one_vs_rest(probs, labels, n_classes, roc_auc)
}

pub fn one_vs_rest_pr_auc(probs: &[Vec<f64>], labels: &[usize], n_classes: usize) -> Result<OneVsRest> {
    one_vs_rest(probs, labels, n_classes, pr_auc)
}
