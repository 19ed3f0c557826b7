//! Classification metrics and report writers.

mod confusion;
mod metrics;
mod report;

pub use confusion::{confusion, ConfusionMatrix};
pub use metrics::{
    binary_log_loss, classification_metrics, log_loss, one_vs_rest_pr_auc, one_vs_rest_roc_auc, pr_auc, roc_auc,
    ClassScores, ClassificationMetrics, OneVsRest, DEFAULT_EPS,
};
pub use report::{
    evaluate, importance_svg, write_accuracy_csv, write_comparative_csv, write_confusion_csv, ClassReport,
    EvaluationReport, COMPARATIVE_ROWS,
};
