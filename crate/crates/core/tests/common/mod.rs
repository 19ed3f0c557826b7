//! Independent reference implementations used as test oracles. Each one is
//! the textbook definition evaluated by brute force.

#![allow(dead_code)]

use pendency::forest::{Node, Split, Tree};
use rand::Rng;

/// Exact rational `num / den` with positive `den`.
#[derive(Debug, Clone, Copy)]
pub struct Frac {
    pub num: i128,
    pub den: i128,
}

impl Frac {
    pub fn new(num: i128, den: i128) -> Self {
        let g = gcd(num.abs(), den.abs()).max(1);
        Frac {
            num: num / g,
            den: den / g,
        }
    }

    pub fn add(self, o: Frac) -> Frac {
        Frac::new(self.num * o.den + o.num * self.den, self.den * o.den)
    }

    pub fn sub(self, o: Frac) -> Frac {
        Frac::new(self.num * o.den - o.num * self.den, self.den * o.den)
    }

    pub fn cmp(self, o: Frac) -> std::cmp::Ordering {
        (self.num * o.den).cmp(&(o.num * self.den))
    }

    pub fn eq(self, o: Frac) -> bool {
        self.cmp(o) == std::cmp::Ordering::Equal
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn sum_sq_over_n(counts: &[i128]) -> Frac {
    let n: i128 = counts.iter().sum();
    Frac::new(counts.iter().map(|c| c * c).sum(), n.max(1))
}

/// Weighted Gini decrease `n·G(parent) − nL·G(L) − nR·G(R)` of the
/// partition `x[f] <= t`, as an exact fraction.
pub fn gini_decrease(x: &[Vec<f64>], y: &[usize], k: usize, f: usize, t: f64) -> Frac {
    let mut all = vec![0i128; k];
    let mut left = vec![0i128; k];
    for (row, &c) in x.iter().zip(y) {
        all[c] += 1;
        if row[f] <= t {
            left[c] += 1;
        }
    }
    let right: Vec<i128> = all.iter().zip(&left).map(|(a, l)| a - l).collect();
    sum_sq_over_n(&left).add(sum_sq_over_n(&right)).sub(sum_sq_over_n(&all))
}

/// Best decrease over every feature and every cut between distinct values.
pub fn best_split_by_enumeration(x: &[Vec<f64>], y: &[usize], k: usize) -> Option<Frac> {
    let d = x[0].len();
    let mut best: Option<Frac> = None;
    for f in 0..d {
        let mut vals: Vec<f64> = x.iter().map(|r| r[f]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for &t in &vals[..vals.len() - 1] {
            let g = gini_decrease(x, y, k, f, t);
            if best.is_none_or(|b| g.cmp(b).is_gt()) {
                best = Some(g);
            }
        }
    }
    best
}

pub fn pairwise_roc_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let (mut p, mut n) = (0.0, 0.0);
    for (i, &li) in labels.iter().enumerate() {
        if li {
            p += 1.0;
        } else {
            n += 1.0;
        }
        if !li {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / (p * n)
}

/// Average precision from the full threshold sweep: one operating point
/// per distinct score, `Σ (R_k − R_{k−1}) · P_k`.
pub fn sweep_average_precision(scores: &[f64], labels: &[bool]) -> f64 {
    let n_pos = labels.iter().filter(|&&l| l).count() as f64;
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for t in thresholds {
        let tp = scores.iter().zip(labels).filter(|(s, l)| **s >= t && **l).count() as f64;
        let fp = scores.iter().zip(labels).filter(|(s, l)| **s >= t && !**l).count() as f64;
        let recall = tp / n_pos;
        if tp + fp > 0.0 {
            ap += (recall - prev_recall) * tp / (tp + fp);
        }
        prev_recall = recall;
    }
    ap
}

/// Conditional expectation of the tree output when only the features in
/// `mask` are known: unknown splits average children by cover.
pub fn cond_expectation(tree: &Tree, row: &[f64], mask: u32, out: usize, node: usize) -> f64 {
    let n = &tree.nodes[node];
    match &n.split {
        None => n.value[out],
        Some(s) => {
            if mask & (1 << s.feature) != 0 {
                let next = if row[s.feature] <= s.threshold { s.left } else { s.right };
                cond_expectation(tree, row, mask, out, next)
            } else {
                let (l, r) = (&tree.nodes[s.left], &tree.nodes[s.right]);
                (l.cover * cond_expectation(tree, row, mask, out, s.left)
                    + r.cover * cond_expectation(tree, row, mask, out, s.right))
                    / n.cover
            }
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Shapley values by enumerating every coalition of the `m` features.
pub fn brute_force_shapley(tree: &Tree, row: &[f64], out: usize) -> Vec<f64> {
    let m = tree.n_features;
    let mut phi = vec![0.0; m];
    for (i, p) in phi.iter_mut().enumerate() {
        for mask in 0u32..(1 << m) {
            if mask & (1 << i) != 0 {
                continue;
            }
            let s = mask.count_ones() as usize;
            let w = factorial(s) * factorial(m - s - 1) / factorial(m);
            *p += w * (cond_expectation(tree, row, mask | (1 << i), out, 0) - cond_expectation(tree, row, mask, out, 0));
        }
    }
    phi
}

/// A random tree with consistent covers: leaf covers are positive integers
/// and each internal cover is the sum of its children.
pub fn random_tree<R: Rng>(rng: &mut R, n_features: usize, max_depth: usize) -> Tree {
    fn grow<R: Rng>(rng: &mut R, nodes: &mut Vec<Node>, d: usize, depth: usize, max_depth: usize) -> usize {
        let id = nodes.len();
        nodes.push(Node {
            split: None,
            value: vec![rng.gen_range(-2.0..2.0)],
            cover: 0.0,
            impurity: 0.0,
        });
        if depth < max_depth && (depth == 0 || rng.gen_bool(0.7)) {
            let feature = rng.gen_range(0..d);
            let threshold = rng.gen_range(0..4) as f64 + 0.5;
            let left = grow(rng, nodes, d, depth + 1, max_depth);
            let right = grow(rng, nodes, d, depth + 1, max_depth);
            nodes[id].cover = nodes[left].cover + nodes[right].cover;
            nodes[id].split = Some(Split {
                feature,
                threshold,
                left,
                right,
                gain: 1.0,
            });
        } else {
            nodes[id].cover = rng.gen_range(1..20) as f64;
        }
        id
    }
    let mut nodes = Vec::new();
    grow(rng, &mut nodes, n_features, 0, max_depth);
    Tree { n_features, nodes }
}

/// Singular values of a dense row-major matrix, descending.
pub fn dense_singular_values(rows: usize, cols: usize, values: &[f64]) -> Vec<f64> {
    let m = nalgebra::DMatrix::from_row_slice(rows, cols, values);
    let mut s: Vec<f64> = m.svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}
