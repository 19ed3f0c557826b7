//! Path-dependent TreeSHAP: exact Shapley values of the conditional
//! expectation defined by training cover counts.

use serde::{Deserialize, Serialize};

use super::model::{Model, ModelKind};
use super::tree::Tree;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub base_value: f64,
    pub contributions: Vec<f64>,
    pub output: f64,
}

#[derive(Debug, Clone, Copy)]
struct PathElement {
    feature: i64,
    zero: f64,
    one: f64,
    weight: f64,
}

fn extend(path: &mut Vec<PathElement>, zero: f64, one: f64, feature: i64) {
    let depth = path.len();
    path.push(PathElement {
        feature,
        zero,
        one,
        weight: if depth == 0 { 1.0 } else { 0.0 },
    });
    let d1 = (depth + 1) as f64;
    for i in (0..depth).rev() {
        path[i + 1].weight += one * path[i].weight * (i + 1) as f64 / d1;
        path[i].weight = zero * path[i].weight * (depth - i) as f64 / d1;
    }
}

fn unwind(path: &mut Vec<PathElement>, index: usize) {
    let depth = path.len() - 1;
    let (one, zero) = (path[index].one, path[index].zero);
    let d1 = (depth + 1) as f64;
    let mut next = path[depth].weight;
    for i in (0..depth).rev() {
        if one != 0.0 {
            let tmp = path[i].weight;
            path[i].weight = next * d1 / ((i + 1) as f64 * one);
            next = tmp - path[i].weight * zero * (depth - i) as f64 / d1;
        } else {
            path[i].weight = path[i].weight * d1 / (zero * (depth - i) as f64);
        }
    }
    for i in index..depth {
        path[i].feature = path[i + 1].feature;
        path[i].zero = path[i + 1].zero;
        path[i].one = path[i + 1].one;
    }
    path.pop();
}

fn unwound_sum(path: &[PathElement], index: usize) -> f64 {
    let depth = path.len() - 1;
    let (one, zero) = (path[index].one, path[index].zero);
    let d1 = (depth + 1) as f64;
    let mut next = path[depth].weight;
    let mut total = 0.0;
    for i in (0..depth).rev() {
        if one != 0.0 {
            let tmp = next * d1 / ((i + 1) as f64 * one);
            total += tmp;
            next = path[i].weight - tmp * zero * (depth - i) as f64 / d1;
        } else if zero != 0.0 {
            total += path[i].weight / zero / ((depth - i) as f64 / d1);
        }
    }
    total
}

struct Walk<'a> {
    tree: &'a Tree,
    row: &'a [f64],
    output: usize,
    phi: Vec<f64>,
}

impl Walk<'_> {
    fn recurse(&mut self, node: usize, mut path: Vec<PathElement>, zero: f64, one: f64, feature: i64) {
        extend(&mut path, zero, one, feature);
        let n = &self.tree.nodes[node];
        let Some(s) = &n.split else {
            let leaf = n.value[self.output];
            for i in 1..path.len() {
                let w = unwound_sum(&path, i);
                let el = path[i];
                self.phi[el.feature as usize] += w * (el.one - el.zero) * leaf;
            }
            return;
        };
        let (hot, cold) = if self.row[s.feature] <= s.threshold {
            (s.left, s.right)
        } else {
            (s.right, s.left)
        };
        let cover = n.cover;
        let hot_zero = self.tree.nodes[hot].cover / cover;
        let cold_zero = self.tree.nodes[cold].cover / cover;
        let (mut in_zero, mut in_one) = (1.0, 1.0);
        if let Some(k) = (1..path.len()).find(|&k| path[k].feature == s.feature as i64) {
            in_zero = path[k].zero;
            in_one = path[k].one;
            unwind(&mut path, k);
        }
        let f = s.feature as i64;
        self.recurse(hot, path.clone(), hot_zero * in_zero, in_one, f);
        self.recurse(cold, path, cold_zero * in_zero, 0.0, f);
    }
}

/// Cover-weighted mean leaf output of one tree.
pub fn expected_value(tree: &Tree, output: usize) -> f64 {
    let root = tree.nodes[0].cover;
    tree.nodes
        .iter()
        .filter(|n| n.is_leaf())
        .map(|n| n.cover / root * n.value[output])
        .sum()
}

/// Shapley values of a single tree's `output` component.
pub fn tree_contributions(tree: &Tree, row: &[f64], output: usize) -> Vec<f64> {
    let mut w = Walk {
        tree,
        row,
        output,
        phi: vec![0.0; tree.n_features],
    };
    w.recurse(0, Vec::with_capacity(16), 1.0, 1.0, -1);
    w.phi
}

/// Attribution of the model output for `row`. Averaging models explain the
/// probability of `class`; boosted models explain the margin and ignore it.
pub fn tree_shap(model: &Model, row: &[f64], class: usize) -> Result<Attribution> {
    if row.len() != model.n_features {
        return Err(Error::ShapeMismatch(format!(
            "row has {} values, model expects {}",
            row.len(),
            model.n_features
        )));
    }
    let mut contributions = vec![0.0; model.n_features];
    let (base_value, output, scale, leaf_out) = match model.kind() {
        ModelKind::Gbdt => (model.base_score, model.margin_row(row), model.eta(), 0),
        _ => {
            if class >= model.n_classes {
                return Err(Error::LabelOutOfRange {
                    label: class,
                    n_classes: model.n_classes,
                });
            }
            if model.trees.is_empty() {
                return Err(Error::NotFitted);
            }
            let p = model.predict_proba_row(row)[class];
            (0.0, p, 1.0 / model.trees.len() as f64, class)
        }
    };
    let mut base = base_value;
    for t in &model.trees {
        base += scale * expected_value(t, leaf_out);
        for (c, v) in contributions.iter_mut().zip(tree_contributions(t, row, leaf_out)) {
            *c += scale * v;
        }
    }
    Ok(Attribution {
        base_value: base,
        contributions,
        output,
    })
}

/// Mean absolute attribution per feature over `rows`.
pub fn mean_abs_shap(model: &Model, rows: &[Vec<f64>], class: usize) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; model.n_features];
    for r in rows {
        for (a, c) in acc.iter_mut().zip(tree_shap(model, r, class)?.contributions) {
            *a += c.abs();
        }
    }
    let n = rows.len().max(1) as f64;
    Ok(acc.into_iter().map(|a| a / n).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::tree::{Node, Split};

    fn leaf(v: f64, cover: f64) -> Node {
        Node {
            split: None,
            value: vec![v],
            cover,
            impurity: 0.0,
        }
    }

    fn internal(feature: usize, threshold: f64, left: usize, right: usize, cover: f64) -> Node {
        Node {
            split: Some(Split {
                feature,
                threshold,
                left,
                right,
                gain: 1.0,
            }),
            value: vec![0.0],
            cover,
            impurity: 0.0,
        }
    }

    #[test]
    fn single_leaf_has_no_contributions() {
        let t = Tree::leaf(3, vec![0.25], 10.0);
        assert_eq!(tree_contributions(&t, &[1.0, 2.0, 3.0], 0), vec![0.0; 3]);
        assert_eq!(expected_value(&t, 0), 0.25);
    }

    #[test]
    fn stump_attribution() {
        // Root on feature 1: left cover 3 value 1, right cover 1 value 5.
        let t = Tree {
            n_features: 2,
            nodes: vec![internal(1, 0.5, 1, 2, 4.0), leaf(1.0, 3.0), leaf(5.0, 1.0)],
        };
        let phi = tree_contributions(&t, &[0.0, 1.0], 0);
        assert_eq!(expected_value(&t, 0), 2.0);
        assert!((phi[1] - 3.0).abs() < 1e-12);
        assert_eq!(phi[0], 0.0);
    }

    #[test]
    fn repeated_feature_on_path() {
        let t = Tree {
            n_features: 1,
            nodes: vec![
                internal(0, 0.5, 1, 2, 10.0),
                leaf(0.0, 4.0),
                internal(0, 1.5, 3, 4, 6.0),
                leaf(2.0, 3.0),
                leaf(8.0, 3.0),
            ],
        };
        let base = expected_value(&t, 0);
        for x in [0.0, 1.0, 2.0] {
            let phi = tree_contributions(&t, &[x], 0);
            let out = t.predict_row(&[x])[0];
            assert!((base + phi[0] - out).abs() < 1e-12);
        }
    }
}
