use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cart::{bootstrap_rng, check_inputs, feature_rng, grow_classifier, Columns, MaxFeatures, TreeParams};
use super::gbdt::{fit_gbdt, sigmoid, GbdtParams};
use super::tree::Tree;
use crate::error::{Error, Result};
use crate::features::EncodedMatrix;
use rand::Rng;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Tree,
    Bagging,
    RandomForest,
    Gbdt,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Tree, ModelKind::Bagging, ModelKind::RandomForest, ModelKind::Gbdt];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Tree => "tree",
            ModelKind::Bagging => "bagging",
            ModelKind::RandomForest => "rf",
            ModelKind::Gbdt => "gbdt",
        }
    }

    /// Human-readable name used in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::Tree => "Decision Tree",
            ModelKind::Bagging => "Bagging",
            ModelKind::RandomForest => "Random Forest",
            ModelKind::Gbdt => "Gradient Boosting",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tree" => Ok(ModelKind::Tree),
            "bagging" => Ok(ModelKind::Bagging),
            "rf" | "random_forest" => Ok(ModelKind::RandomForest),
            "gbdt" => Ok(ModelKind::Gbdt),
            other => Err(Error::Usage(format!("unknown model `{other}`"))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub tree: TreeParams,
    /// Draw a bootstrap sample per tree. Disabling it is a test hook.
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            tree: TreeParams::default(),
            bootstrap: true,
        }
    }
}

/// Training parameters, tagged by model kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    Tree(TreeParams),
    Bagging(ForestParams),
    RandomForest(ForestParams),
    Gbdt(GbdtParams),
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::Tree(_) => ModelKind::Tree,
            ModelParams::Bagging(_) => ModelKind::Bagging,
            ModelParams::RandomForest(_) => ModelKind::RandomForest,
            ModelParams::Gbdt(_) => ModelKind::Gbdt,
        }
    }
}

/// A trained tree model. Averaging models store class-probability leaves;
/// boosted models store raw leaf weights added as `base_score + eta * Σ w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub format_version: u32,
    pub params: ModelParams,
    pub n_features: usize,
    pub n_classes: usize,
    pub feature_names: Vec<String>,
    pub base_score: f64,
    pub trees: Vec<Tree>,
}

fn names_of(x: &EncodedMatrix) -> Vec<String> {
    x.feature_names().iter().map(ToString::to_string).collect()
}

fn bootstrap_weights(n: usize, seed: u64, index: usize) -> Vec<u32> {
    let mut rng = bootstrap_rng(seed, index);
    let mut w = vec![0u32; n];
    for _ in 0..n {
        w[rng.gen_range(0..n)] += 1;
    }
    w
}

fn train_averaging(x: &EncodedMatrix, y: &[usize], n_classes: usize, fp: &ForestParams) -> Result<Vec<Tree>> {
    check_inputs(x, y, n_classes)?;
    fp.tree.validate()?;
    if fp.n_trees < 1 {
        return Err(Error::InvalidParam("n_trees must be >= 1".into()));
    }
    let cols = Columns::new(x);
    let trees = (0..fp.n_trees)
        .into_par_iter()
        .map(|t| {
            let w = if fp.bootstrap {
                bootstrap_weights(y.len(), fp.tree.seed, t)
            } else {
                vec![1u32; y.len()]
            };
            grow_classifier(&cols, y, &w, n_classes, fp.tree, feature_rng(fp.tree.seed, t))
        })
        .collect();
    Ok(trees)
}

impl Model {
    /// Train any model kind from its parameters.
    pub fn train(x: &EncodedMatrix, y: &[usize], n_classes: usize, params: &ModelParams) -> Result<Model> {
        let (trees, base_score, n_classes) = match params {
            ModelParams::Tree(tp) => {
                let fp = ForestParams {
                    n_trees: 1,
                    tree: *tp,
                    bootstrap: false,
                };
                (train_averaging(x, y, n_classes, &fp)?, 0.0, n_classes)
            }
            ModelParams::Bagging(fp) | ModelParams::RandomForest(fp) => {
                (train_averaging(x, y, n_classes, fp)?, 0.0, n_classes)
            }
            ModelParams::Gbdt(gp) => {
                if n_classes != 2 {
                    return Err(Error::NonBinaryLabels(n_classes));
                }
                let fit = fit_gbdt(x, y, gp)?;
                (fit.trees, fit.base_score, 2)
            }
        };
        Ok(Model {
            format_version: FORMAT_VERSION,
            params: *params,
            n_features: x.n_cols(),
            n_classes,
            feature_names: names_of(x),
            base_score,
            trees,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.params.kind()
    }

    pub fn eta(&self) -> f64 {
        match self.params {
            ModelParams::Gbdt(p) => p.eta,
            _ => 1.0,
        }
    }

    /// Boosted margin for one row.
    pub fn margin_row(&self, row: &[f64]) -> f64 {
        let eta = self.eta();
        self.base_score + self.trees.iter().map(|t| eta * t.predict_row(row)[0]).sum::<f64>()
    }

    pub fn predict_proba_row(&self, row: &[f64]) -> Vec<f64> {
        match self.kind() {
            ModelKind::Gbdt => {
                let p = sigmoid(self.margin_row(row));
                vec![1.0 - p, p]
            }
            _ => {
                let mut acc = vec![0.0; self.n_classes];
                for t in &self.trees {
                    for (a, v) in acc.iter_mut().zip(t.predict_row(row)) {
                        *a += v;
                    }
                }
                let k = self.trees.len() as f64;
                acc.iter_mut().for_each(|a| *a /= k);
                acc
            }
        }
    }

    fn check_width(&self, x: &EncodedMatrix) -> Result<()> {
        if x.n_cols() != self.n_features {
            return Err(Error::ShapeMismatch(format!(
                "model expects {} columns, matrix has {}",
                self.n_features,
                x.n_cols()
            )));
        }
        Ok(())
    }

    pub fn predict_proba(&self, x: &EncodedMatrix) -> Result<Vec<Vec<f64>>> {
        self.check_width(x)?;
        Ok((0..x.n_rows())
            .into_par_iter()
            .map(|i| self.predict_proba_row(&x.row_dense(i)))
            .collect())
    }

    /// Argmax class per row; ties go to the lowest class index.
    pub fn predict(&self, x: &EncodedMatrix) -> Result<Vec<usize>> {
        Ok(self.predict_proba(x)?.iter().map(|p| argmax(p)).collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Model> {
        let raw: serde_json::Value = serde_json::from_str(text)?;
        let version = raw.get("format_version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if version != FORMAT_VERSION {
            return Err(Error::FormatVersion(version));
        }
        let m: Model = serde_json::from_value(raw)?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Model> {
        Model::from_json(&fs::read_to_string(path)?)
    }

    fn validate(&self) -> Result<()> {
        let width = if self.kind() == ModelKind::Gbdt { 1 } else { self.n_classes };
        if self.feature_names.len() != self.n_features {
            return Err(Error::ShapeMismatch("feature name count differs from n_features".into()));
        }
        if self.kind() != ModelKind::Gbdt && self.trees.is_empty() {
            return Err(Error::ShapeMismatch("averaging model has no trees".into()));
        }
        for t in &self.trees {
            if t.n_features != self.n_features || t.nodes.iter().any(|n| n.value.len() != width) {
                return Err(Error::ShapeMismatch("tree shape differs from model".into()));
            }
        }
        Ok(())
    }
}

pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

pub fn train_tree_model(x: &EncodedMatrix, y: &[usize], n_classes: usize, params: &TreeParams) -> Result<Model> {
    Model::train(x, y, n_classes, &ModelParams::Tree(*params))
}

/// Bagged trees; every split considers all features.
pub fn train_bagging(x: &EncodedMatrix, y: &[usize], n_classes: usize, params: &ForestParams) -> Result<Model> {
    let mut fp = *params;
    fp.tree.max_features = MaxFeatures::All;
    Model::train(x, y, n_classes, &ModelParams::Bagging(fp))
}

/// Random forest; `params.tree.max_features` is honored, `Sqrt` by convention.
pub fn train_random_forest(x: &EncodedMatrix, y: &[usize], n_classes: usize, params: &ForestParams) -> Result<Model> {
    Model::train(x, y, n_classes, &ModelParams::RandomForest(*params))
}

pub fn train_gbdt(x: &EncodedMatrix, y: &[usize], params: &GbdtParams) -> Result<Model> {
    Model::train(x, y, 2, &ModelParams::Gbdt(*params))
}
