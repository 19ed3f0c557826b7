//! Binary logistic boosting with second-order (Newton) regression trees.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cart::{check_inputs, midpoint, partition_lists, Columns};
use super::tree::{Node, Split, Tree};
use crate::error::{Error, Result};
use crate::features::EncodedMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbdtParams {
    pub n_rounds: usize,
    pub eta: f64,
    pub lambda: f64,
    pub max_depth: usize,
    pub min_child_weight: f64,
    /// Initial margin; `None` uses the log-odds of the training positive rate.
    pub base_score: Option<f64>,
}

impl Default for GbdtParams {
    fn default() -> Self {
        GbdtParams {
            n_rounds: 100,
            eta: 0.3,
            lambda: 1.0,
            max_depth: 6,
            min_child_weight: 1.0,
            base_score: None,
        }
    }
}

impl GbdtParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_rounds < 1 {
            return Err(Error::InvalidParam("n_rounds must be >= 1".into()));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidParam("eta must be positive".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParam("lambda must be >= 0".into()));
        }
        if !(self.min_child_weight >= 0.0) {
            return Err(Error::InvalidParam("min_child_weight must be >= 0".into()));
        }
        Ok(())
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary log loss of margins `f` against 0/1 labels, natural log.
pub fn margin_log_loss(f: &[f64], y: &[usize]) -> f64 {
    let s: f64 = f
        .iter()
        .zip(y)
        .map(|(&m, &c)| {
            // log(1 + e^-m) for positives, log(1 + e^m) for negatives.
            let z = if c == 1 { -m } else { m };
            if z > 0.0 {
                z + (-z).exp().ln_1p()
            } else {
                z.exp().ln_1p()
            }
        })
        .sum();
    s / f.len() as f64
}

fn default_base_score(y: &[usize]) -> f64 {
    let pos = y.iter().filter(|&&c| c == 1).count() as f64;
    let p = (pos / y.len() as f64).clamp(1e-6, 1.0 - 1e-6);
    (p / (1.0 - p)).ln()
}

#[derive(Debug, Clone, Copy)]
struct Best {
    gain: f64,
    feature: usize,
    threshold: f64,
}

struct Booster<'a> {
    cols: &'a Columns,
    g: &'a [f64],
    h: &'a [f64],
    params: GbdtParams,
    nodes: Vec<Node>,
    go_left: Vec<bool>,
}

impl Booster<'_> {
    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.params.lambda)
    }

    fn best_on_feature(&self, sorted: &[u32], feature: usize, gs: f64, hs: f64) -> Option<Best> {
        let col = self.cols.column(feature);
        let parent = self.score(gs, hs);
        let mut gl = 0.0;
        let mut hl = 0.0;
        let mut best: Option<Best> = None;
        for k in 0..sorted.len().saturating_sub(1) {
            let i = sorted[k] as usize;
            gl += self.g[i];
            hl += self.h[i];
            let x = col[i];
            let next = col[sorted[k + 1] as usize];
            if next == x {
                continue;
            }
            let (gr, hr) = (gs - gl, hs - hl);
            if hl < self.params.min_child_weight || hr < self.params.min_child_weight {
                continue;
            }
            let gain = 0.5 * (self.score(gl, hl) + self.score(gr, hr) - parent);
            if best.is_none_or(|b| gain > b.gain) {
                best = Some(Best {
                    gain,
                    feature,
                    threshold: midpoint(x, next),
                });
            }
        }
        best
    }

    fn grow(&mut self, lists: Vec<Vec<u32>>, depth: usize) -> usize {
        let rows = &lists[0];
        let (mut gs, mut hs) = (0.0, 0.0);
        for &i in rows {
            gs += self.g[i as usize];
            hs += self.h[i as usize];
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            split: None,
            value: vec![-gs / (hs + self.params.lambda)],
            cover: rows.len() as f64,
            impurity: 0.0,
        });
        if depth >= self.params.max_depth || rows.len() < 2 {
            return id;
        }
        let found: Vec<Option<Best>> = lists
            .par_iter()
            .enumerate()
            .map(|(f, l)| self.best_on_feature(l, f, gs, hs))
            .collect();
        // Strictly greater keeps the lowest (feature, threshold) on ties.
        let best = found
            .into_iter()
            .flatten()
            .fold(None, |acc: Option<Best>, c| match acc {
                Some(a) if c.gain <= a.gain => Some(a),
                _ => Some(c),
            });
        let Some(best) = best.filter(|b| b.gain > 0.0) else {
            return id;
        };
        let col = self.cols.column(best.feature);
        for &i in rows {
            self.go_left[i as usize] = col[i as usize] <= best.threshold;
        }
        let (left_lists, right_lists) = partition_lists(lists, &self.go_left);
        let left = self.grow(left_lists, depth + 1);
        let right = self.grow(right_lists, depth + 1);
        self.nodes[id].split = Some(Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
            gain: best.gain,
        });
        id
    }
}

/// Boosted trees plus the resolved initial margin.
#[derive(Debug, Clone)]
pub struct GbdtFit {
    pub base_score: f64,
    pub trees: Vec<Tree>,
    /// Training log loss before round 1 and after every round.
    pub train_loss: Vec<f64>,
}

pub(crate) fn fit_gbdt(x: &EncodedMatrix, y: &[usize], params: &GbdtParams) -> Result<GbdtFit> {
    check_inputs(x, y, usize::MAX)?;
    if let Some(&bad) = y.iter().find(|&&c| c > 1) {
        return Err(Error::NonBinaryLabels(bad));
    }
    params.validate()?;
    let cols = Columns::new(x);
    let n = y.len();
    let base_score = params.base_score.unwrap_or_else(|| default_base_score(y));
    let mut margin = vec![base_score; n];
    let ones = vec![1u32; n];
    let mut trees = Vec::with_capacity(params.n_rounds);
    let mut train_loss = vec![margin_log_loss(&margin, y)];
    let mut g = vec![0.0; n];
    let mut h = vec![0.0; n];
    for _ in 0..params.n_rounds {
        for i in 0..n {
            let p = sigmoid(margin[i]);
            g[i] = p - y[i] as f64;
            h[i] = p * (1.0 - p);
        }
        let mut b = Booster {
            cols: &cols,
            g: &g,
            h: &h,
            params: *params,
            nodes: Vec::new(),
            go_left: vec![false; n],
        };
        b.grow(cols.sorted_lists(&ones), 0);
        let tree = Tree {
            n_features: cols.n_features,
            nodes: b.nodes,
        };
        let mut row = vec![0.0; cols.n_features];
        for (i, m) in margin.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = cols.column(j)[i];
            }
            *m += params.eta * tree.predict_row(&row)[0];
        }
        train_loss.push(margin_log_loss(&margin, y));
        trees.push(tree);
    }
    Ok(GbdtFit {
        base_score,
        trees,
        train_loss,
    })
}
