use super::model::Model;

/// Total split gain per feature across the ensemble, normalized to sum
/// to 1. All zeros when no tree has a split.
pub fn impurity_importance(model: &Model) -> Vec<f64> {
    let mut acc = vec![0.0; model.n_features];
    for tree in &model.trees {
        for node in &tree.nodes {
            if let Some(s) = &node.split {
                acc[s.feature] += s.gain;
            }
        }
    }
    let total: f64 = acc.iter().sum();
    if total > 0.0 {
        acc.iter_mut().for_each(|a| *a /= total);
    }
    acc
}

/// `(feature name, weight)` pairs sorted by weight descending, then name.
pub fn ranked_importance(model: &Model) -> Vec<(String, f64)> {
    let mut out: Vec<(String, f64)> = model
        .feature_names
        .iter()
        .cloned()
        .zip(impurity_importance(model))
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}
