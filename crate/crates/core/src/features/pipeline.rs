use serde::{Deserialize, Serialize};

use super::encoders::{fit_label, fit_one_hot, hashing_model, EncoderModel, FeatureColumn};
use super::matrix::EncodedMatrix;
use super::split::{part_indices, stratified_split};
use super::svd::{truncated_svd_with, SvdModel, SvdOptions};
use super::target::TargetKind;
use crate::court_data::CaseRecord;
use crate::error::{Error, Result};

/// How categorical columns become numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "encoder", rename_all = "snake_case")]
pub enum EncoderChoice {
    Label,
    OnehotSvd { k: usize },
    Hashing { m: usize },
}

impl std::fmt::Display for EncoderChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EncoderChoice::Label => f.write_str("label"),
            EncoderChoice::OnehotSvd { k } => write!(f, "onehot-svd(k={k})"),
            EncoderChoice::Hashing { m } => write!(f, "hashing(m={m})"),
        }
    }
}

/// A fitted encoder, optionally followed by a truncated SVD projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturePipeline {
    pub encoder: EncoderModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svd: Option<SvdModel>,
}

impl FeaturePipeline {
    /// Fit on `records` and return the pipeline with the transformed matrix.
    pub fn fit(
        records: &[CaseRecord],
        columns: &[FeatureColumn],
        choice: EncoderChoice,
        seed: u64,
        svd_options: SvdOptions,
    ) -> Result<(Self, EncodedMatrix)> {
        let encoder = match choice {
            EncoderChoice::Label => fit_label(records, columns),
            EncoderChoice::OnehotSvd { .. } => fit_one_hot(records, columns),
            EncoderChoice::Hashing { m } => hashing_model(columns, m)?,
        };
        let encoded = encoder.transform(records)?;
        match choice {
            EncoderChoice::OnehotSvd { k } => {
                let (svd, projected) = truncated_svd_with(&encoded, k, seed, svd_options)?;
                Ok((FeaturePipeline { encoder, svd: Some(svd) }, projected))
            }
            _ => Ok((FeaturePipeline { encoder, svd: None }, encoded)),
        }
    }

    pub fn transform(&self, records: &[CaseRecord]) -> Result<EncodedMatrix> {
        let encoded = self.encoder.transform(records)?;
        match &self.svd {
            Some(svd) => svd.transform(&encoded),
            None => Ok(encoded),
        }
    }
}

/// A labelled design matrix with its split assignment, as written by
/// `featurize` and consumed by `train`, `evaluate` and `explain`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub target: TargetKind,
    pub class_labels: Vec<String>,
    pub case_ids: Vec<String>,
    pub labels: Vec<usize>,
    /// Part index per row; part 0 is the training part.
    pub split: Vec<usize>,
    pub fractions: Vec<f64>,
    pub matrix: EncodedMatrix,
}

impl Dataset {
    pub fn part(&self, p: usize) -> Vec<usize> {
        part_indices(&self.split, self.fractions.len())
            .into_iter()
            .nth(p)
            .unwrap_or_default()
    }

    pub fn rows(&self, rows: &[usize]) -> (EncodedMatrix, Vec<usize>) {
        (
            self.matrix.select_rows(rows),
            rows.iter().map(|&i| self.labels[i]).collect(),
        )
    }
}

pub fn labels_for(records: &[CaseRecord], target: TargetKind) -> Result<Vec<usize>> {
    records
        .iter()
        .map(|r| target.label_of(r.date_of_filing, r.date_of_decision))
        .collect()
}

#[derive(Debug, Clone)]
pub struct DatasetConfig {
    pub target: TargetKind,
    pub encoder: EncoderChoice,
    pub columns: Vec<FeatureColumn>,
    pub fractions: Vec<f64>,
    pub seed: u64,
    pub exclude_ongoing: bool,
    pub svd_options: SvdOptions,
}

/// Label, split, fit the encoder on the training part only, and encode
/// every row.
pub fn build_dataset(records: &[CaseRecord], config: &DatasetConfig) -> Result<(Dataset, FeaturePipeline)> {
    let kept: Vec<CaseRecord> = records
        .iter()
        .filter(|r| !(config.exclude_ongoing && r.is_ongoing()))
        .cloned()
        .collect();
    if kept.is_empty() {
        return Err(Error::Empty("no records to featurize".into()));
    }
    let labels = labels_for(&kept, config.target)?;
    let split = stratified_split(&labels, &config.fractions, config.seed)?;
    let train: Vec<CaseRecord> = kept
        .iter()
        .zip(&split)
        .filter(|(_, p)| **p == 0)
        .map(|(r, _)| r.clone())
        .collect();
    let (pipeline, _) = FeaturePipeline::fit(&train, &config.columns, config.encoder, config.seed, config.svd_options)?;
    let matrix = pipeline.transform(&kept)?;
    Ok((
        Dataset {
            target: config.target,
            class_labels: config.target.class_labels(),
            case_ids: kept.iter().map(|r| r.case_id.clone()).collect(),
            labels,
            split,
            fractions: config.fractions.clone(),
            matrix,
        },
        pipeline,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::court_data::{generate_synthetic, SyntheticSpec};
    use crate::features::encoders::default_feature_columns;

    fn config(encoder: EncoderChoice) -> DatasetConfig {
        DatasetConfig {
            target: TargetKind::Binary3y,
            encoder,
            columns: default_feature_columns(),
            fractions: vec![0.8, 0.2],
            seed: 1,
            exclude_ongoing: false,
            svd_options: SvdOptions::default(),
        }
    }

    #[test]
    fn dataset_shapes() {
        let records = generate_synthetic(&SyntheticSpec::new(400, 2)).unwrap();
        let (ds, _) = build_dataset(&records, &config(EncoderChoice::Label)).unwrap();
        assert_eq!(ds.matrix.n_cols(), 17);
        assert_eq!(ds.part(0).len() + ds.part(1).len(), 400);

        let (ds, pipe) = build_dataset(&records, &config(EncoderChoice::OnehotSvd { k: 12 })).unwrap();
        assert_eq!(ds.matrix.n_cols(), 12);
        assert!(pipe.svd.is_some());

        let (ds, _) = build_dataset(&records, &config(EncoderChoice::Hashing { m: 64 })).unwrap();
        assert_eq!(ds.matrix.n_cols(), 64);
    }

    #[test]
    fn exclude_ongoing() {
        let mut spec = SyntheticSpec::new(200, 2);
        spec.ongoing_fraction = 0.25;
        let records = generate_synthetic(&spec).unwrap();
        let mut cfg = config(EncoderChoice::Label);
        cfg.exclude_ongoing = true;
        let (ds, _) = build_dataset(&records, &cfg).unwrap();
        assert_eq!(ds.labels.len(), 150);
    }
}
