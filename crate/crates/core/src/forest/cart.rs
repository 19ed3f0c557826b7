//! Greedy CART classification trees with Gini impurity.
//!
//! Split candidates are midpoints between consecutive distinct values of
//! a feature within the node. Candidates are ranked by the exact rational
//! score `ΣL²/nL + ΣR²/nR` (integer class counts), which orders splits the
//! same way as the weighted Gini decrease without rounding. Ties go to the
//! lowest feature index, then the lowest threshold.

use std::cmp::Ordering;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{Node, Split, Tree};
use crate::error::{Error, Result};
use crate::features::EncodedMatrix;
use crate::rng::{stream_rng, STREAM_TREE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    All,
    Sqrt,
    Fraction(f64),
}

impl MaxFeatures {
    pub fn resolve(self, d: usize) -> usize {
        let k = match self {
            MaxFeatures::All => d,
            MaxFeatures::Sqrt => (d as f64).sqrt().ceil() as usize,
            MaxFeatures::Fraction(f) => (f * d as f64).floor() as usize,
        };
        k.clamp(1, d.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub max_features: MaxFeatures,
    pub seed: u64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 10,
            min_samples_split: 2,
            max_features: MaxFeatures::All,
            seed: 0,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth < 1 {
            return Err(Error::InvalidParam("max_depth must be >= 1".into()));
        }
        if let MaxFeatures::Fraction(f) = self.max_features {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::InvalidParam("max_features fraction must be in (0, 1]".into()));
            }
        }
        Ok(())
    }
}

/// Column-major training view with per-feature presorted row orders,
/// shared by every tree of an ensemble.
pub struct Columns {
    pub n_rows: usize,
    pub n_features: usize,
    values: Vec<f64>,
    order: Vec<Vec<u32>>,
}

impl Columns {
    pub fn new(x: &EncodedMatrix) -> Self {
        let n_rows = x.n_rows();
        let values = x.to_column_major();
        let order = (0..x.n_cols())
            .map(|j| {
                let col = &values[j * n_rows..(j + 1) * n_rows];
                let mut idx: Vec<u32> = (0..n_rows as u32).collect();
                idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]));
                idx
            })
            .collect();
        Columns {
            n_rows,
            n_features: x.n_cols(),
            values,
            order,
        }
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        &self.values[j * self.n_rows..(j + 1) * self.n_rows]
    }

    /// Sorted row lists restricted to rows with nonzero weight.
    pub(crate) fn sorted_lists(&self, weight: &[u32]) -> Vec<Vec<u32>> {
        self.order
            .iter()
            .map(|o| o.iter().copied().filter(|&i| weight[i as usize] > 0).collect())
            .collect()
    }
}

/// Stable partition of every sorted list by the `go_left` mask.
pub(crate) fn partition_lists(lists: Vec<Vec<u32>>, go_left: &[bool]) -> (Vec<Vec<u32>>, Vec<Vec<u32>>) {
    let mut left = Vec::with_capacity(lists.len());
    let mut right = Vec::with_capacity(lists.len());
    for list in lists {
        let (l, r): (Vec<u32>, Vec<u32>) = list.into_iter().partition(|&i| go_left[i as usize]);
        left.push(l);
        right.push(r);
    }
    (left, right)
}

pub(crate) fn check_inputs(x: &EncodedMatrix, y: &[usize], n_classes: usize) -> Result<()> {
    if x.n_rows() == 0 || x.n_cols() == 0 {
        return Err(Error::Empty("training matrix has no rows or no columns".into()));
    }
    if x.n_rows() != y.len() {
        return Err(Error::ShapeMismatch(format!("{} rows but {} labels", x.n_rows(), y.len())));
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= n_classes) {
        return Err(Error::LabelOutOfRange { label: bad, n_classes });
    }
    Ok(())
}

/// A split candidate scored by the rational `num / den`.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    num: u128,
    den: u128,
    feature: usize,
    threshold: f64,
}

impl Candidate {
    /// `Greater` means `self` is the better split.
    fn rank(&self, other: &Candidate) -> Ordering {
        (self.num * other.den)
            .cmp(&(other.num * self.den))
            .then_with(|| other.feature.cmp(&self.feature))
            .then_with(|| other.threshold.total_cmp(&self.threshold))
    }
}

fn sum_sq(counts: &[u64]) -> u128 {
    counts.iter().map(|&c| u128::from(c) * u128::from(c)).sum()
}

fn gini(counts: &[u64], n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    1.0 - sum_sq(counts) as f64 / (u128::from(n) * u128::from(n)) as f64
}

/// Midpoint threshold that still sends `lo` left and `hi` right.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let t = lo / 2.0 + hi / 2.0;
    if t >= hi || !t.is_finite() {
        lo
    } else {
        t
    }
}

struct Grower<'a> {
    cols: &'a Columns,
    y: &'a [usize],
    weight: &'a [u32],
    n_classes: usize,
    params: TreeParams,
    n_try: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
    go_left: Vec<bool>,
}

impl Grower<'_> {
    fn node_counts(&self, rows: &[u32]) -> (Vec<u64>, u64) {
        let mut counts = vec![0u64; self.n_classes];
        for &i in rows {
            counts[self.y[i as usize]] += u64::from(self.weight[i as usize]);
        }
        let n = counts.iter().sum();
        (counts, n)
    }

    fn best_on_feature(&self, sorted: &[u32], feature: usize, total: &[u64], n: u64) -> Option<Candidate> {
        let col = self.cols.column(feature);
        let first = col[sorted[0] as usize];
        let last = col[sorted[sorted.len() - 1] as usize];
        if first == last {
            return None;
        }
        let mut left = vec![0u64; self.n_classes];
        let mut left_sq: u128 = 0;
        let mut right_sq: u128 = sum_sq(total);
        let mut n_left: u64 = 0;
        let mut best: Option<Candidate> = None;
        for k in 0..sorted.len() - 1 {
            let i = sorted[k] as usize;
            let (x, class, w) = (col[i], self.y[i], u64::from(self.weight[i]));
            // Incremental update of the squared count sums.
            let l = u128::from(left[class]);
            let r = u128::from(total[class] - left[class]);
            let wd = u128::from(w);
            left_sq = left_sq + 2 * l * wd + wd * wd;
            right_sq = right_sq + wd * wd - 2 * r * wd;
            left[class] += w;
            n_left += w;
            let next = col[sorted[k + 1] as usize];
            if next == x {
                continue;
            }
            let (nl, nr) = (u128::from(n_left), u128::from(n - n_left));
            let cand = Candidate {
                num: left_sq * nr + right_sq * nl,
                den: nl * nr,
                feature,
                threshold: midpoint(x, next),
            };
            if best.as_ref().is_none_or(|b| cand.rank(b) == Ordering::Greater) {
                best = Some(cand);
            }
        }
        best
    }

    fn find_split(&mut self, lists: &[Vec<u32>], total: &[u64], n: u64) -> Option<Candidate> {
        let d = self.cols.n_features;
        let mut best: Option<Candidate> = None;
        let consider = |c: Option<Candidate>, best: &mut Option<Candidate>| {
            if let Some(c) = c {
                if best.as_ref().is_none_or(|b| c.rank(b) == Ordering::Greater) {
                    *best = Some(c);
                }
            }
        };
        if self.n_try >= d {
            for f in 0..d {
                consider(self.best_on_feature(&lists[f], f, total, n), &mut best);
            }
        } else {
            // Lazy Fisher-Yates over features; constant features do not
            // count toward the quota.
            let mut order: Vec<usize> = (0..d).collect();
            let mut evaluated = 0;
            for pos in 0..d {
                if evaluated >= self.n_try {
                    break;
                }
                let pick = self.rng.gen_range(pos..d);
                order.swap(pos, pick);
                let f = order[pos];
                let c = self.best_on_feature(&lists[f], f, total, n);
                if c.is_some() {
                    evaluated += 1;
                }
                consider(c, &mut best);
            }
        }
        best
    }

    fn grow(&mut self, lists: Vec<Vec<u32>>, depth: usize) -> usize {
        let (counts, n) = self.node_counts(&lists[0]);
        let value: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
        let impurity = gini(&counts, n);
        let id = self.nodes.len();
        self.nodes.push(Node {
            split: None,
            value,
            cover: n as f64,
            impurity,
        });
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.params.max_depth || n < self.params.min_samples_split as u64 {
            return id;
        }
        let Some(best) = self.find_split(&lists, &counts, n) else {
            return id;
        };
        let col = self.cols.column(best.feature);
        for &i in &lists[0] {
            self.go_left[i as usize] = col[i as usize] <= best.threshold;
        }
        let (left_lists, right_lists) = partition_lists(lists, &self.go_left);
        let (lc, ln) = self.node_counts(&left_lists[0]);
        let (rc, rn) = self.node_counts(&right_lists[0]);
        let gain = (n as f64 * impurity - ln as f64 * gini(&lc, ln) - rn as f64 * gini(&rc, rn)).max(0.0);
        let left = self.grow(left_lists, depth + 1);
        let right = self.grow(right_lists, depth + 1);
        self.nodes[id].split = Some(Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
            gain,
        });
        id
    }
}

/// Grow one tree on the rows with nonzero `weight` (bootstrap multiplicities).
pub(crate) fn grow_classifier(
    cols: &Columns,
    y: &[usize],
    weight: &[u32],
    n_classes: usize,
    params: TreeParams,
    rng: ChaCha8Rng,
) -> Tree {
    let mut g = Grower {
        cols,
        y,
        weight,
        n_classes,
        params,
        n_try: params.max_features.resolve(cols.n_features),
        rng,
        nodes: Vec::new(),
        go_left: vec![false; cols.n_rows],
    };
    g.grow(cols.sorted_lists(weight), 0);
    Tree {
        n_features: cols.n_features,
        nodes: g.nodes,
    }
}

/// Feature-subsampling stream of tree `index` under `seed`.
pub(crate) fn feature_rng(seed: u64, index: usize) -> ChaCha8Rng {
    stream_rng(seed, STREAM_TREE, 2 * index as u64 + 1)
}

pub(crate) fn bootstrap_rng(seed: u64, index: usize) -> ChaCha8Rng {
    stream_rng(seed, STREAM_TREE, 2 * index as u64)
}

/// Train a single CART tree on every row.
pub fn train_tree(x: &EncodedMatrix, y: &[usize], n_classes: usize, params: &TreeParams) -> Result<Tree> {
    check_inputs(x, y, n_classes)?;
    params.validate()?;
    let cols = Columns::new(x);
    let weight = vec![1u32; y.len()];
    Ok(grow_classifier(&cols, y, &weight, n_classes, *params, feature_rng(params.seed, 0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit(rows: &[Vec<f64>], y: &[usize], depth: usize) -> Tree {
        let x = EncodedMatrix::from_rows(rows).unwrap();
        let params = TreeParams {
            max_depth: depth,
            ..TreeParams::default()
        };
        train_tree(&x, y, 2, &params).unwrap()
    }

    #[test]
    fn two_point_separation() {
        let t = fit(&[vec![0.0], vec![1.0]], &[0, 1], 10);
        assert_eq!(t.nodes.len(), 3);
        let s = t.nodes[0].split.as_ref().unwrap();
        assert_eq!(s.threshold, 0.5);
        // Decrease per sample at the root.
        assert_eq!(s.gain / t.nodes[0].cover, 0.5);
        assert_eq!(t.nodes[s.left].value, vec![1.0, 0.0]);
        assert_eq!(t.nodes[s.right].value, vec![0.0, 1.0]);
    }

    #[test]
    fn xor_needs_depth_two() {
        let rows = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let y = [0, 1, 1, 0];
        let t = fit(&rows, &y, 2);
        for (r, &c) in rows.iter().zip(&y) {
            assert_eq!(t.predict_row(r)[c], 1.0);
        }
        // Zero-gain root split ties broken toward feature 0.
        assert_eq!(t.nodes[0].split.as_ref().unwrap().feature, 0);
    }

    #[test]
    fn pure_node_is_a_leaf() {
        let t = fit(&[vec![0.0], vec![1.0], vec![2.0]], &[1, 1, 1], 10);
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.nodes[0].value, vec![0.0, 1.0]);
    }

    #[test]
    fn input_errors() {
        let x = EncodedMatrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        assert!(matches!(train_tree(&x, &[0], 2, &TreeParams::default()), Err(Error::ShapeMismatch(_))));
        assert!(matches!(
            train_tree(&x, &[0, 2], 2, &TreeParams::default()),
            Err(Error::LabelOutOfRange { .. })
        ));
        let empty = EncodedMatrix::from_rows(&[]).unwrap();
        assert!(matches!(train_tree(&empty, &[], 2, &TreeParams::default()), Err(Error::Empty(_))));
        let p = TreeParams {
            max_depth: 0,
            ..TreeParams::default()
        };
        assert!(train_tree(&x, &[0, 1], 2, &p).is_err());
    }

    #[test]
    fn midpoint_stays_below_upper_value() {
        let lo = 1.0f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        assert_eq!(midpoint(lo, hi), lo);
        assert_eq!(midpoint(1.0, 3.0), 2.0);
    }

    #[test]
    fn max_features_resolution() {
        assert_eq!(MaxFeatures::Sqrt.resolve(17), 5);
        assert_eq!(MaxFeatures::Sqrt.resolve(1), 1);
        assert_eq!(MaxFeatures::Fraction(0.3).resolve(10), 3);
        assert_eq!(MaxFeatures::Fraction(0.01).resolve(10), 1);
        assert_eq!(MaxFeatures::All.resolve(4), 4);
    }
}
