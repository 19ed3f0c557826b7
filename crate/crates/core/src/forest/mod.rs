//! CART trees, bagging, random forests and gradient-boosted trees, with
//! impurity importance and TreeSHAP attribution.

mod cart;
mod gbdt;
mod importance;
mod model;
mod shap;
mod tree;

pub use cart::{train_tree, MaxFeatures, TreeParams};
pub use gbdt::{margin_log_loss, sigmoid, GbdtFit, GbdtParams};
pub use importance::{impurity_importance, ranked_importance};
pub use model::{
    argmax, train_bagging, train_gbdt, train_random_forest, train_tree_model, ForestParams, Model, ModelKind,
    ModelParams, FORMAT_VERSION,
};
pub use shap::{expected_value, mean_abs_shap, tree_contributions, tree_shap, Attribution};
pub use tree::{Node, Split, Tree, TreeArrays};

use crate::error::Result;
use crate::features::EncodedMatrix;

/// Boost and return the per-round training log loss alongside the trees.
pub fn train_gbdt_traced(x: &EncodedMatrix, y: &[usize], params: &GbdtParams) -> Result<GbdtFit> {
    gbdt::fit_gbdt(x, y, params)
}
