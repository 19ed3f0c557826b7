use std::io;

use thiserror::Error;

/// Errors raised by the pipeline. Every variant maps to CLI exit code 2
/// except [`Error::Usage`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: required column `{0}` is missing")]
    MissingColumn(String),

    #[error("duplicate case_id `{0}` in auxiliary table")]
    DuplicateKey(String),

    #[error("decision date {decision} precedes filing date {filing}")]
    NegativeDuration { filing: String, decision: String },

    #[error("negative duration: {0} days")]
    NegativeDays(i64),

    #[error("invalid synthetic spec: {0}")]
    InvalidSynthetic(String),

    #[error("hash width must be a power of two >= 2, got {0}")]
    HashWidth(usize),

    #[error("encoder has not been fitted")]
    NotFitted,

    #[error("k = {k} out of range 1..={max}")]
    RankOutOfRange { k: usize, max: usize },

    #[error("class {class} has {count} rows, fewer than the {parts} requested parts")]
    ClassTooSmall {
        class: usize,
        count: usize,
        parts: usize,
    },

    #[error("invalid split fractions: {0}")]
    InvalidFractions(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("label {label} outside range 0..{n_classes}")]
    LabelOutOfRange { label: usize, n_classes: usize },

    #[error("labels must be binary (0/1) for gradient boosting, found {0}")]
    NonBinaryLabels(usize),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("no trial completed within budget ({} failed)", .failures.len())]
    NoCompletedTrials { failures: Vec<String> },

    #[error("unsupported model format version {0}")]
    FormatVersion(u32),

    #[error("usage: {0}")]
    Usage(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
