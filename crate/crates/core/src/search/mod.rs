//! Budgeted random search over tree models and encoders.
//!
//! Trial `i` draws its configuration from its own seeded stream, so the
//! sequence of configurations is fixed before any trial runs and a larger
//! budget only appends trials.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::court_data::CaseRecord;
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvaluationReport};
use crate::features::{
    labels_for, part_indices, stratified_split, EncodedMatrix, EncoderChoice, FeatureColumn, FeaturePipeline,
    SvdOptions, TargetKind,
};
use crate::forest::{ForestParams, GbdtParams, MaxFeatures, Model, ModelKind, ModelParams, TreeParams};
use crate::rng::{derive_seed, stream_rng, STREAM_SEARCH, STREAM_TRIAL};

pub const THREE_WAY: [f64; 3] = [0.8, 0.1, 0.1];

/// Stratified 80/10/10 train/validation/test assignment.
pub fn three_way_split(labels: &[usize], seed: u64) -> Result<Vec<usize>> {
    stratified_split(labels, &THREE_WAY, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Accuracy,
    WeightedF1,
    RocAuc,
    PrAuc,
}

impl Objective {
    pub fn default_for(target: TargetKind) -> Self {
        match target {
            TargetKind::Binary3y => Objective::Accuracy,
            TargetKind::Multi5 => Objective::WeightedF1,
        }
    }

    pub fn value(self, r: &EvaluationReport) -> Option<f64> {
        match self {
            Objective::Accuracy => Some(r.accuracy),
            Objective::WeightedF1 => Some(r.weighted.f1),
            Objective::RocAuc => r.roc_auc,
            Objective::PrAuc => r.pr_auc,
        }
    }
}

/// Inclusive sampling ranges and choice lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub kinds: Vec<ModelKind>,
    pub encoders: Vec<EncoderChoice>,
    pub max_depth: (usize, usize),
    pub n_trees: (usize, usize),
    pub eta: (f64, f64),
    pub lambda: (f64, f64),
    pub max_features: Vec<MaxFeatures>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            kinds: ModelKind::ALL.to_vec(),
            encoders: vec![EncoderChoice::Label],
            max_depth: (4, 12),
            n_trees: (10, 60),
            eta: (0.05, 0.5),
            lambda: (0.0, 5.0),
            max_features: vec![MaxFeatures::Sqrt, MaxFeatures::Fraction(0.5), MaxFeatures::All],
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParam(format!("search space: {m}")));
        if self.kinds.is_empty() {
            return bad("no model kinds enabled");
        }
        if self.encoders.is_empty() {
            return bad("no encoders enabled");
        }
        if self.max_features.is_empty() {
            return bad("no max_features choices");
        }
        if self.max_depth.0 < 1 || self.max_depth.0 > self.max_depth.1 {
            return bad("max_depth range");
        }
        if self.n_trees.0 < 1 || self.n_trees.0 > self.n_trees.1 {
            return bad("n_trees range");
        }
        if !(self.eta.0 > 0.0 && self.eta.0 <= self.eta.1 && self.eta.1.is_finite()) {
            return bad("eta range");
        }
        if !(self.lambda.0 >= 0.0 && self.lambda.0 <= self.lambda.1 && self.lambda.1.is_finite()) {
            return bad("lambda range");
        }
        Ok(())
    }

    /// Configuration of trial `index`; depends only on `(seed, index)`.
    pub fn sample(&self, seed: u64, index: usize) -> (EncoderChoice, ModelParams) {
        let mut rng = stream_rng(seed, STREAM_SEARCH, index as u64);
        let kind = *self.kinds.choose(&mut rng).expect("validated");
        let encoder = *self.encoders.choose(&mut rng).expect("validated");
        let max_depth = rng.gen_range(self.max_depth.0..=self.max_depth.1);
        let n_trees = rng.gen_range(self.n_trees.0..=self.n_trees.1);
        let eta = self.eta.0 + (self.eta.1 - self.eta.0) * rng.gen::<f64>();
        let lambda = self.lambda.0 + (self.lambda.1 - self.lambda.0) * rng.gen::<f64>();
        let max_features = *self.max_features.choose(&mut rng).expect("validated");
        let tree_seed = derive_seed(seed, STREAM_TRIAL, index as u64);
        let tree = TreeParams {
            max_depth,
            seed: tree_seed,
            ..TreeParams::default()
        };
        let params = match kind {
            ModelKind::Tree => ModelParams::Tree(tree),
            ModelKind::Bagging => ModelParams::Bagging(ForestParams {
                n_trees,
                tree,
                bootstrap: true,
            }),
            ModelKind::RandomForest => ModelParams::RandomForest(ForestParams {
                n_trees,
                tree: TreeParams { max_features, ..tree },
                bootstrap: true,
            }),
            ModelKind::Gbdt => ModelParams::Gbdt(GbdtParams {
                n_rounds: n_trees,
                eta,
                lambda,
                max_depth,
                ..GbdtParams::default()
            }),
        };
        (encoder, params)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub accuracy: f64,
    pub weighted_f1: f64,
    pub roc_auc: Option<f64>,
    pub pr_auc: Option<f64>,
    pub log_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub encoder: EncoderChoice,
    pub params: ModelParams,
    pub objective: f64,
    pub validation: TrialMetrics,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub trials: Option<usize>,
    pub time_s: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub target: TargetKind,
    pub columns: Vec<FeatureColumn>,
    pub space: SearchSpace,
    pub budget: Budget,
    pub objective: Objective,
    pub seed: u64,
    pub exclude_ongoing: bool,
    pub svd_options: SvdOptions,
    /// Trials run concurrently; 0 uses the current rayon pool width.
    pub workers: usize,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    /// Completed trials ordered by (objective desc, trial asc).
    pub leaderboard: Vec<TrialResult>,
    pub failures: Vec<(usize, String)>,
    pub best: TrialResult,
    /// Best configuration retrained on train + validation.
    pub model: Model,
    pub pipeline: FeaturePipeline,
    pub test_report: EvaluationReport,
    /// SHA-256 of the test row indices.
    pub test_checksum: String,
}

fn checksum(rows: &[usize]) -> String {
    let mut h = Sha256::new();
    for r in rows {
        h.update((*r as u64).to_le_bytes());
    }
    hex::encode(h.finalize())
}

fn pick(records: &[CaseRecord], rows: &[usize]) -> Vec<CaseRecord> {
    rows.iter().map(|&i| records[i].clone()).collect()
}

fn metrics_of(r: &EvaluationReport) -> TrialMetrics {
    TrialMetrics {
        accuracy: r.accuracy,
        weighted_f1: r.weighted.f1,
        roc_auc: r.roc_auc,
        pr_auc: r.pr_auc,
        log_loss: r.log_loss,
    }
}

fn leaderboard_order(a: &TrialResult, b: &TrialResult) -> std::cmp::Ordering {
    b.objective.total_cmp(&a.objective).then(a.trial.cmp(&b.trial))
}

pub fn run_search(records: &[CaseRecord], config: &SearchConfig) -> Result<SearchOutcome> {
    config.space.validate()?;
    if config.budget.trials.is_none() && config.budget.time_s.is_none() {
        return Err(Error::InvalidParam("search needs a trial or time budget".into()));
    }
    let n_classes = config.target.n_classes();
    let mut space = config.space.clone();
    if n_classes != 2 {
        space.kinds.retain(|k| *k != ModelKind::Gbdt);
        if space.kinds.is_empty() {
            return Err(Error::InvalidParam("gradient boosting needs the binary target".into()));
        }
    }
    let kept: Vec<CaseRecord> = records
        .iter()
        .filter(|r| !(config.exclude_ongoing && r.is_ongoing()))
        .cloned()
        .collect();
    let labels = labels_for(&kept, config.target)?;
    let parts = part_indices(&three_way_split(&labels, config.seed)?, 3);
    let test_checksum = checksum(&parts[2]);
    let class_labels = config.target.class_labels();
    let train_records = pick(&kept, &parts[0]);
    let val_records = pick(&kept, &parts[1]);
    let y_train: Vec<usize> = parts[0].iter().map(|&i| labels[i]).collect();
    let y_val: Vec<usize> = parts[1].iter().map(|&i| labels[i]).collect();

    let n_trials = config.budget.trials.unwrap_or(usize::MAX);
    let deadline = config.budget.time_s.map(|s| Instant::now() + Duration::from_secs_f64(s.max(0.0)));
    let workers = if config.workers == 0 {
        rayon::current_num_threads()
    } else {
        config.workers
    };

    // Encoders are fitted once per choice, on the training part only.
    let mut encoded: BTreeMap<String, std::result::Result<(EncodedMatrix, EncodedMatrix), String>> = BTreeMap::new();
    let mut completed = Vec::new();
    let mut failures = Vec::new();
    let mut next = 0usize;
    while next < n_trials {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            break;
        }
        let batch: Vec<usize> = (next..n_trials.min(next.saturating_add(workers))).collect();
        next += batch.len();
        let configs: Vec<(usize, EncoderChoice, ModelParams)> = batch
            .iter()
            .map(|&i| {
                let (e, p) = space.sample(config.seed, i);
                (i, e, p)
            })
            .collect();
        for (_, e, _) in &configs {
            encoded.entry(e.to_string()).or_insert_with(|| {
                FeaturePipeline::fit(&train_records, &config.columns, *e, config.seed, config.svd_options)
                    .and_then(|(p, xtr)| Ok((xtr, p.transform(&val_records)?)))
                    .map_err(|err| err.to_string())
            });
        }
        let results: Vec<std::result::Result<TrialResult, (usize, String)>> = configs
            .par_iter()
            .map(|(i, e, p)| {
                let start = Instant::now();
                let (xtr, xval) = encoded[&e.to_string()].as_ref().map_err(|m| (*i, m.clone()))?;
                let run = || -> Result<TrialResult> {
                    let model = Model::train(xtr, &y_train, n_classes, p)?;
                    let report = evaluate(model.kind().display_name(), &model.predict_proba(xval)?, &y_val, &class_labels)?;
                    let objective = config
                        .objective
                        .value(&report)
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| Error::UndefinedMetric("objective undefined on validation".into()))?;
                    Ok(TrialResult {
                        trial: *i,
                        seed: derive_seed(config.seed, STREAM_TRIAL, *i as u64),
                        encoder: *e,
                        params: *p,
                        objective,
                        validation: metrics_of(&report),
                        wall_time_s: start.elapsed().as_secs_f64(),
                    })
                };
                run().map_err(|err| (*i, err.to_string()))
            })
            .collect();
        for r in results {
            match r {
                Ok(t) => completed.push(t),
                Err(f) => failures.push(f),
            }
        }
    }

    if completed.is_empty() {
        return Err(Error::NoCompletedTrials {
            failures: failures.into_iter().map(|(i, m)| format!("trial {i}: {m}")).collect(),
        });
    }
    completed.sort_by(leaderboard_order);
    let best = completed[0].clone();

    let mut fit_rows: Vec<usize> = parts[0].iter().chain(&parts[1]).copied().collect();
    fit_rows.sort_unstable();
    let fit_records = pick(&kept, &fit_rows);
    let y_fit: Vec<usize> = fit_rows.iter().map(|&i| labels[i]).collect();
    let (pipeline, x_fit) =
        FeaturePipeline::fit(&fit_records, &config.columns, best.encoder, config.seed, config.svd_options)?;
    let model = Model::train(&x_fit, &y_fit, n_classes, &best.params)?;
    if checksum(&parts[2]) != test_checksum {
        return Err(Error::InvalidParam("test rows changed during search".into()));
    }
    let test_records = pick(&kept, &parts[2]);
    let y_test: Vec<usize> = parts[2].iter().map(|&i| labels[i]).collect();
    let probs = model.predict_proba(&pipeline.transform(&test_records)?)?;
    let test_report = evaluate(model.kind().display_name(), &probs, &y_test, &class_labels)?;
    Ok(SearchOutcome {
        leaderboard: completed,
        failures,
        best,
        model,
        pipeline,
        test_report,
        test_checksum,
    })
}

/// One JSON object per line, in leaderboard order.
pub fn write_leaderboard<W: Write>(board: &[TrialResult], mut out: W) -> Result<()> {
    for t in board {
        serde_json::to_writer(&mut out, t)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
