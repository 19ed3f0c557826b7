use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Internal-node routing: `x[feature] <= threshold` goes left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
    /// Weighted impurity decrease (classification) or loss reduction (boosting).
    pub gain: f64,
}

/// One node. `value` is a class-probability vector for classification
/// trees and a single raw score for boosting trees.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub split: Option<Split>,
    pub value: Vec<f64>,
    /// Training samples reaching the node (bootstrap multiplicities counted).
    pub cover: f64,
    pub impurity: f64,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.split.is_none()
    }
}

/// A binary tree stored as a node arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "TreeArrays", try_from = "TreeArrays")]
pub struct Tree {
    pub n_features: usize,
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(n_features: usize, value: Vec<f64>, cover: f64) -> Self {
        Tree {
            n_features,
            nodes: vec![Node {
                split: None,
                value,
                cover,
                impurity: 0.0,
            }],
        }
    }

    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut at = 0;
        while let Some(s) = &self.nodes[at].split {
            at = if row[s.feature] <= s.threshold { s.left } else { s.right };
        }
        at
    }

    pub fn predict_row(&self, row: &[f64]) -> &[f64] {
        &self.nodes[self.leaf_index(row)].value
    }

    /// Longest root-to-leaf path, in edges.
    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, at: usize) -> usize {
            match &t.nodes[at].split {
                None => 0,
                Some(s) => 1 + walk(t, s.left).max(walk(t, s.right)),
            }
        }
        walk(self, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }
}

/// Node-parallel serialized form. Leaves carry `feature = -1`,
/// `left = right = -1` and `threshold = 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeArrays {
    pub n_features: usize,
    pub feature: Vec<i64>,
    pub threshold: Vec<f64>,
    pub left: Vec<i64>,
    pub right: Vec<i64>,
    pub gain: Vec<f64>,
    pub value: Vec<Vec<f64>>,
    pub cover: Vec<f64>,
    pub impurity: Vec<f64>,
}

impl From<Tree> for TreeArrays {
    fn from(t: Tree) -> Self {
        let n = t.nodes.len();
        let mut a = TreeArrays {
            n_features: t.n_features,
            feature: Vec::with_capacity(n),
            threshold: Vec::with_capacity(n),
            left: Vec::with_capacity(n),
            right: Vec::with_capacity(n),
            gain: Vec::with_capacity(n),
            value: Vec::with_capacity(n),
            cover: Vec::with_capacity(n),
            impurity: Vec::with_capacity(n),
        };
        for node in t.nodes {
            match node.split {
                Some(s) => {
                    a.feature.push(s.feature as i64);
                    a.threshold.push(s.threshold);
                    a.left.push(s.left as i64);
                    a.right.push(s.right as i64);
                    a.gain.push(s.gain);
                }
                None => {
                    a.feature.push(-1);
                    a.threshold.push(0.0);
                    a.left.push(-1);
                    a.right.push(-1);
                    a.gain.push(0.0);
                }
            }
            a.value.push(node.value);
            a.cover.push(node.cover);
            a.impurity.push(node.impurity);
        }
        a
    }
}

impl TryFrom<TreeArrays> for Tree {
    type Error = Error;

    fn try_from(a: TreeArrays) -> Result<Tree> {
        let n = a.feature.len();
        let lens = [
            a.threshold.len(),
            a.left.len(),
            a.right.len(),
            a.gain.len(),
            a.value.len(),
            a.cover.len(),
            a.impurity.len(),
        ];
        if n == 0 || lens.iter().any(|l| *l != n) {
            return Err(Error::ShapeMismatch("tree arrays have unequal or zero length".into()));
        }
        let mut nodes = Vec::with_capacity(n);
        for i in 0..n {
            let split = if a.feature[i] < 0 {
                None
            } else {
                let (f, l, r) = (a.feature[i] as usize, a.left[i], a.right[i]);
                let in_range = |c: i64| c > i as i64 && (c as usize) < n;
                if f >= a.n_features || !in_range(l) || !in_range(r) {
                    return Err(Error::ShapeMismatch(format!("node {i} has invalid links")));
                }
                Some(Split {
                    feature: f,
                    threshold: a.threshold[i],
                    left: l as usize,
                    right: r as usize,
                    gain: a.gain[i],
                })
            };
            nodes.push(Node {
                split,
                value: a.value[i].clone(),
                cover: a.cover[i],
                impurity: a.impurity[i],
            });
        }
        Ok(Tree {
            n_features: a.n_features,
            nodes,
        })
    }
}
