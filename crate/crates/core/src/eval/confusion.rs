use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    /// `counts[i][j]`: rows of true class `i` predicted as `j`.
    pub counts: Vec<Vec<u64>>,
    /// Row-normalized fractions; `None` for a class with no true rows.
    pub normalized: Vec<Option<Vec<f64>>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }
}

/// Confusion counts over class indices into `labels`.
pub fn confusion(y_true: &[usize], y_pred: &[usize], labels: &[String]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions but {} labels",
            y_pred.len(),
            y_true.len()
        )));
    }
    let k = labels.len();
    let mut counts = vec![vec![0u64; k]; k];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        for c in [t, p] {
            if c >= k {
                return Err(Error::LabelOutOfRange { label: c, n_classes: k });
            }
        }
        counts[t][p] += 1;
    }
    let normalized = counts
        .iter()
        .map(|row| {
            let n: u64 = row.iter().sum();
            (n > 0).then(|| row.iter().map(|&c| c as f64 / n as f64).collect())
        })
        .collect();
    Ok(ConfusionMatrix {
        labels: labels.to_vec(),
        counts,
        normalized,
    })
}
