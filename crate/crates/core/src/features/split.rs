//! Stratified partitioning with largest-remainder rounding.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::{stream_rng, STREAM_SPLIT};

fn check_fractions(fractions: &[f64]) -> Result<()> {
    if fractions.is_empty() {
        return Err(Error::InvalidFractions("no parts".into()));
    }
    if fractions.iter().any(|f| !f.is_finite() || *f <= 0.0) {
        return Err(Error::InvalidFractions("fractions must be positive".into()));
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidFractions(format!("fractions sum to {total}")));
    }
    Ok(())
}

/// Per-part counts for `n` items: floors of the exact shares, then the
/// leftover items go to the largest fractional parts (earlier part on ties).
pub fn largest_remainder(n: usize, fractions: &[f64]) -> Vec<usize> {
    let exact: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| (x + 1e-9).floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    let rem = |i: usize| exact[i] - counts[i] as f64;
    order.sort_by(|&a, &b| rem(b).total_cmp(&rem(a)).then(a.cmp(&b)));
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Assign every row to a part. Within each class, rows are shuffled by a
/// seeded stream and cut at the largest-remainder counts.
pub fn stratified_split(labels: &[usize], fractions: &[f64], seed: u64) -> Result<Vec<usize>> {
    check_fractions(fractions)?;
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &y) in labels.iter().enumerate() {
        by_class.entry(y).or_default().push(i);
    }
    let mut part = vec![0usize; labels.len()];
    for (&class, rows) in &mut by_class {
        if rows.len() < fractions.len() {
            return Err(Error::ClassTooSmall {
                class,
                count: rows.len(),
                parts: fractions.len(),
            });
        }
        rows.shuffle(&mut stream_rng(seed, STREAM_SPLIT, class as u64));
        let counts = largest_remainder(rows.len(), fractions);
        let mut at = 0;
        for (p, &c) in counts.iter().enumerate() {
            for &row in &rows[at..at + c] {
                part[row] = p;
            }
            at += c;
        }
    }
    Ok(part)
}

/// Row indices of each part, in ascending row order.
pub fn part_indices(assignment: &[usize], n_parts: usize) -> Vec<Vec<usize>> {
    let mut parts = vec![Vec::new(); n_parts];
    for (i, &p) in assignment.iter().enumerate() {
        parts[p].push(i);
    }
    parts
}
