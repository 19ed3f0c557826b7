use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::confusion::{confusion, ConfusionMatrix};
use super::metrics::{
    binary_log_loss, classification_metrics, log_loss, one_vs_rest_pr_auc, one_vs_rest_roc_auc, ClassScores,
    DEFAULT_EPS,
};
use crate::error::{Error, Result};
use crate::forest::argmax;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub label: String,
    pub support: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// One-vs-rest values; `None` where the class is absent from the truth.
    pub pr_auc: Option<f64>,
    pub roc_auc: Option<f64>,
    pub log_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub model: String,
    pub n_rows: usize,
    pub accuracy: f64,
    pub weighted: ClassScores,
    /// Binary: positive-class value. Multiclass: support-weighted one-vs-rest.
    pub pr_auc: Option<f64>,
    pub roc_auc: Option<f64>,
    pub log_loss: f64,
    pub per_class: Vec<ClassReport>,
    pub confusion: ConfusionMatrix,
}

/// Score class-probability predictions; the predicted class is the argmax.
pub fn evaluate(model: &str, probs: &[Vec<f64>], y_true: &[usize], labels: &[String]) -> Result<EvaluationReport> {
    let k = labels.len();
    if let Some(p) = probs.iter().find(|p| p.len() != k) {
        return Err(Error::ShapeMismatch(format!("{} probabilities for {k} classes", p.len())));
    }
    let y_pred: Vec<usize> = probs.iter().map(|p| argmax(p)).collect();
    let cm = classification_metrics(y_true, &y_pred, k)?;
    let roc = one_vs_rest_roc_auc(probs, y_true, k)?;
    let pr = one_vs_rest_pr_auc(probs, y_true, k)?;
    let per_class = (0..k)
        .map(|c| {
            let scores: Vec<f64> = probs.iter().map(|p| p[c]).collect();
            let ind: Vec<bool> = y_true.iter().map(|&y| y == c).collect();
            let s = cm.per_class[c];
            Ok(ClassReport {
                label: labels[c].clone(),
                support: s.support,
                precision: s.precision,
                recall: s.recall,
                f1: s.f1,
                pr_auc: pr.per_class[c],
                roc_auc: roc.per_class[c],
                log_loss: binary_log_loss(&scores, &ind, DEFAULT_EPS)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (pr_auc, roc_auc) = if k == 2 {
        (pr.per_class[1], roc.per_class[1])
    } else {
        (pr.weighted, roc.weighted)
    };
    Ok(EvaluationReport {
        model: model.to_string(),
        n_rows: y_true.len(),
        accuracy: cm.accuracy,
        weighted: cm.weighted,
        pr_auc,
        roc_auc,
        log_loss: log_loss(probs, y_true, DEFAULT_EPS)?,
        per_class,
        confusion: confusion(y_true, &y_pred, labels)?,
    })
}

fn two(v: f64) -> String {
    format!("{v:.2}")
}

fn opt2(v: Option<f64>) -> String {
    v.map(two).unwrap_or_default()
}

fn write_rows<W: Write>(out: W, rows: Vec<Vec<String>>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

/// Row-normalized confusion table in whole percent.
pub fn write_confusion_csv<W: Write>(cm: &ConfusionMatrix, out: W) -> Result<()> {
    let mut rows = vec![std::iter::once("True /Predicted label".to_string())
        .chain(cm.labels.iter().cloned())
        .collect::<Vec<_>>()];
    for (label, row) in cm.labels.iter().zip(&cm.normalized) {
        let mut r = vec![label.clone()];
        match row {
            Some(v) => r.extend(v.iter().map(|f| format!("{:.0}%", f * 100.0))),
            None => r.extend(std::iter::repeat_n(String::new(), cm.labels.len())),
        }
        rows.push(r);
    }
    write_rows(out, rows)
}

/// Metric rows with an aggregate column followed by one column per class.
pub fn write_accuracy_csv<W: Write>(report: &EvaluationReport, out: W) -> Result<()> {
    let header = ["".to_string(), "All Labels".to_string()]
        .into_iter()
        .chain(report.per_class.iter().map(|c| c.label.clone()))
        .collect();
    let row = |name: &str, all: String, each: &dyn Fn(&ClassReport) -> String| -> Vec<String> {
        [name.to_string(), all]
            .into_iter()
            .chain(report.per_class.iter().map(each))
            .collect()
    };
    let rows = vec![
        header,
        row("PR AUC", opt2(report.pr_auc), &|c| opt2(c.pr_auc)),
        row("ROC AUC", opt2(report.roc_auc), &|c| opt2(c.roc_auc)),
        row("Log loss", two(report.log_loss), &|c| two(c.log_loss)),
        row("F1 score", two(report.weighted.f1), &|c| two(c.f1)),
        row("Precision", two(report.weighted.precision), &|c| two(c.precision)),
        row("Recall", two(report.weighted.recall), &|c| two(c.recall)),
    ];
    write_rows(out, rows)
}

pub const COMPARATIVE_ROWS: [&str; 7] = ["Accuracy", "PR AUC", "ROC AUC", "Log loss", "F1 score", "Precision", "Recall"];

/// One column per model, one row per headline metric.
pub fn write_comparative_csv<W: Write>(reports: &[EvaluationReport], out: W) -> Result<()> {
    let mut rows = vec![std::iter::once(String::new())
        .chain(reports.iter().map(|r| r.model.clone()))
        .collect::<Vec<_>>()];
    for name in COMPARATIVE_ROWS {
        let mut r = vec![name.to_string()];
        for rep in reports {
            r.push(match name {
                "Accuracy" => two(rep.accuracy),
                "PR AUC" => opt2(rep.pr_auc),
                "ROC AUC" => opt2(rep.roc_auc),
                "Log loss" => two(rep.log_loss),
                "F1 score" => two(rep.weighted.f1),
                "Precision" => two(rep.weighted.precision),
                _ => two(rep.weighted.recall),
            });
        }
        rows.push(r);
    }
    write_rows(out, rows)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Horizontal bar chart of `(name, weight)` pairs in the given order.
pub fn importance_svg(title: &str, items: &[(String, f64)]) -> String {
    const LABEL_W: f64 = 220.0;
    const BAR_W: f64 = 420.0;
    const ROW_H: f64 = 22.0;
    const TOP: f64 = 40.0;
    let width = LABEL_W + BAR_W + 70.0;
    let height = TOP + ROW_H * items.len() as f64 + 20.0;
    let max = items.iter().map(|i| i.1).fold(0.0, f64::max);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="22" font-size="15" text-anchor="middle">{}</text>"#,
        width / 2.0,
        escape(title)
    );
    for (i, (name, w)) in items.iter().enumerate() {
        let y = TOP + ROW_H * i as f64;
        let len = if max > 0.0 { w / max * BAR_W } else { 0.0 };
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            LABEL_W - 8.0,
            y + 15.0,
            escape(name)
        );
        let _ = writeln!(
            s,
            r##"<rect x="{LABEL_W:.1}" y="{:.1}" width="{len:.2}" height="{:.1}" fill="#1f77b4"/>"##,
            y + 3.0,
            ROW_H - 6.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{w:.3}</text>"#,
            LABEL_W + len + 6.0,
            y + 15.0
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels() -> Vec<String> {
        vec!["< 3 years".into(), "3 years and >".into()]
    }

    fn sample() -> EvaluationReport {
        let probs = vec![vec![0.9, 0.1], vec![0.4, 0.6], vec![0.3, 0.7], vec![0.6, 0.4]];
        evaluate("Random Forest", &probs, &[0, 1, 0, 1], &labels()).unwrap()
    }

    #[test]
    fn binary_report() {
        let r = sample();
        assert_eq!(r.accuracy, 0.5);
        assert_eq!(r.roc_auc, Some(0.5));
        assert_eq!(r.confusion.trace(), 2);
    }

    #[test]
    fn csv_layouts() {
        let r = sample();
        let mut buf = Vec::new();
        write_confusion_csv(&r.confusion, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "True /Predicted label,< 3 years,3 years and >");
        assert_eq!(text.lines().nth(1).unwrap(), "< 3 years,50%,50%");

        let mut buf = Vec::new();
        write_accuracy_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let first: Vec<&str> = text.lines().map(|l| l.split(',').next().unwrap()).collect();
        assert_eq!(first, ["", "PR AUC", "ROC AUC", "Log loss", "F1 score", "Precision", "Recall"]);
        assert!(text.starts_with(",All Labels,< 3 years,3 years and >"));

        let mut buf = Vec::new();
        write_comparative_csv(&[r.clone(), r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 8);
        assert!(text.starts_with(",Random Forest,Random Forest\nAccuracy,0.50,0.50"));
    }

    #[test]
    fn svg_is_well_formed() {
        let svg = importance_svg("Feature importance", &[("a<b".into(), 0.7), ("c".into(), 0.3)]);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("a&lt;b"));
        assert_eq!(svg.matches("<rect").count(), 3);
    }
}
