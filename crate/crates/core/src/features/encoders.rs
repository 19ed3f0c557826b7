//! Categorical encoders: label codes, one-hot indicators and feature hashing.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::matrix::{CsrMatrix, EncodedMatrix, FeatureName};
use crate::court_data::{CaseRecord, Column, NOT_AVAILABLE};
use crate::error::{Error, Result};

/// A categorical input: one of the raw case columns or the composite
/// `court_key = state-dist-court` geographic identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum FeatureColumn {
    Raw(Column),
    CourtKey,
}

impl FeatureColumn {
    pub fn name(self) -> &'static str {
        match self {
            FeatureColumn::Raw(c) => c.name(),
            FeatureColumn::CourtKey => "court_key",
        }
    }

    pub fn value(self, record: &CaseRecord) -> String {
        match self {
            FeatureColumn::Raw(c) => record.token(c).to_string(),
            FeatureColumn::CourtKey => format!(
                "{}-{}-{}",
                record.token(Column::StateCode),
                record.token(Column::DistCode),
                record.token(Column::CourtNo)
            ),
        }
    }

    pub fn is_geographic(self) -> bool {
        match self {
            FeatureColumn::Raw(c) => c.is_geographic(),
            FeatureColumn::CourtKey => true,
        }
    }
}

impl fmt::Display for FeatureColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureColumn {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "court_key" {
            Ok(FeatureColumn::CourtKey)
        } else {
            s.parse().map(FeatureColumn::Raw)
        }
    }
}

impl From<FeatureColumn> for String {
    fn from(c: FeatureColumn) -> String {
        c.name().to_string()
    }
}

impl TryFrom<String> for FeatureColumn {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse()
    }
}

/// The sixteen case columns followed by `court_key`.
pub fn default_feature_columns() -> Vec<FeatureColumn> {
    Column::ALL
        .iter()
        .map(|c| FeatureColumn::Raw(*c))
        .chain(std::iter::once(FeatureColumn::CourtKey))
        .collect()
}

/// Sorted category list; the position of a category is its code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    categories: Vec<String>,
}

impl Vocabulary {
    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    pub fn lookup(&self, value: &str) -> Option<u32> {
        self.categories
            .binary_search_by(|c| c.as_str().cmp(value))
            .ok()
            .map(|i| i as u32)
    }

    /// Code of `value`; unseen values get the code of `"Not Available"`.
    pub fn code(&self, value: &str) -> u32 {
        self.lookup(value)
            .or_else(|| self.lookup(NOT_AVAILABLE))
            .expect("vocabulary always holds the Not Available token")
    }

    pub fn decode(&self, code: u32) -> Option<&str> {
        self.categories.get(code as usize).map(String::as_str)
    }
}

/// Fit a label encoder: distinct values plus `"Not Available"`, sorted by
/// UTF-8 byte order and numbered from 0.
pub fn fit_label_encoder<'a, I>(values: I) -> Vocabulary
where
    I: IntoIterator<Item = &'a str>,
{
    let mut categories: Vec<String> = values.into_iter().map(str::to_string).collect();
    categories.push(NOT_AVAILABLE.to_string());
    categories.sort_unstable();
    categories.dedup();
    Vocabulary { categories }
}

pub fn label_transform<'a, I>(vocab: &Vocabulary, values: I) -> Vec<u32>
where
    I: IntoIterator<Item = &'a str>,
{
    values.into_iter().map(|v| vocab.code(v)).collect()
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes.iter().fold(OFFSET, |h, b| (h ^ u64::from(*b)).wrapping_mul(PRIME))
}

fn check_width(m: usize) -> Result<()> {
    if m < 2 || !m.is_power_of_two() {
        return Err(Error::HashWidth(m));
    }
    Ok(())
}

/// Bucket of a `column=value` token.
pub fn hash_bucket(token: &str, m: usize) -> Result<usize> {
    check_width(m)?;
    Ok((fnv1a64(token.as_bytes()) & (m as u64 - 1)) as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderKind {
    Label,
    OneHot,
    Hashing,
}

/// A fitted encoder. Label and one-hot models carry one vocabulary per
/// column; the hashing model carries only its width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EncoderModel {
    Label {
        columns: Vec<FeatureColumn>,
        vocabularies: Vec<Vocabulary>,
    },
    OneHot {
        columns: Vec<FeatureColumn>,
        vocabularies: Vec<Vocabulary>,
    },
    Hashing {
        columns: Vec<FeatureColumn>,
        width: usize,
    },
}

fn fit_vocabularies(records: &[CaseRecord], columns: &[FeatureColumn]) -> Vec<Vocabulary> {
    columns
        .iter()
        .map(|c| {
            let values: Vec<String> = records.iter().map(|r| c.value(r)).collect();
            fit_label_encoder(values.iter().map(String::as_str))
        })
        .collect()
}

pub fn fit_label(records: &[CaseRecord], columns: &[FeatureColumn]) -> EncoderModel {
    EncoderModel::Label {
        columns: columns.to_vec(),
        vocabularies: fit_vocabularies(records, columns),
    }
}

pub fn fit_one_hot(records: &[CaseRecord], columns: &[FeatureColumn]) -> EncoderModel {
    EncoderModel::OneHot {
        columns: columns.to_vec(),
        vocabularies: fit_vocabularies(records, columns),
    }
}

pub fn hashing_model(columns: &[FeatureColumn], width: usize) -> Result<EncoderModel> {
    check_width(width)?;
    Ok(EncoderModel::Hashing {
        columns: columns.to_vec(),
        width,
    })
}

impl EncoderModel {
    pub fn kind(&self) -> EncoderKind {
        match self {
            EncoderModel::Label { .. } => EncoderKind::Label,
            EncoderModel::OneHot { .. } => EncoderKind::OneHot,
            EncoderModel::Hashing { .. } => EncoderKind::Hashing,
        }
    }

    pub fn columns(&self) -> &[FeatureColumn] {
        match self {
            EncoderModel::Label { columns, .. }
            | EncoderModel::OneHot { columns, .. }
            | EncoderModel::Hashing { columns, .. } => columns,
        }
    }

    pub fn n_outputs(&self) -> usize {
        match self {
            EncoderModel::Label { columns, .. } => columns.len(),
            EncoderModel::OneHot { vocabularies, .. } => vocabularies.iter().map(Vocabulary::len).sum(),
            EncoderModel::Hashing { width, .. } => *width,
        }
    }

    pub fn transform(&self, records: &[CaseRecord]) -> Result<EncodedMatrix> {
        match self {
            EncoderModel::Label { columns, vocabularies } => label_matrix(records, columns, vocabularies),
            EncoderModel::OneHot { .. } => one_hot_transform(self, records),
            EncoderModel::Hashing { columns, width } => hashing_encode(records, columns, *width),
        }
    }
}

fn label_matrix(records: &[CaseRecord], columns: &[FeatureColumn], vocabs: &[Vocabulary]) -> Result<EncodedMatrix> {
    let mut values = Vec::with_capacity(records.len() * columns.len());
    for r in records {
        for (c, v) in columns.iter().zip(vocabs) {
            values.push(f64::from(v.code(&c.value(r))));
        }
    }
    let names = columns.iter().map(|c| FeatureName::raw(c.name())).collect();
    EncodedMatrix::dense(records.len(), columns.len(), values, names)
}

/// One indicator per (column, category); exactly one 1 per column per row.
pub fn one_hot_transform(model: &EncoderModel, records: &[CaseRecord]) -> Result<EncodedMatrix> {
    let EncoderModel::OneHot { columns, vocabularies } = model else {
        return Err(Error::InvalidParam("one-hot transform needs a one-hot encoder".into()));
    };
    let mut offsets = Vec::with_capacity(vocabularies.len());
    let mut names = Vec::new();
    for (c, v) in columns.iter().zip(vocabularies) {
        offsets.push(names.len());
        names.extend(v.categories().iter().map(|cat| FeatureName::with_detail(c.name(), cat.clone())));
    }
    let mut csr = CsrMatrix {
        indptr: Vec::with_capacity(records.len() + 1),
        indices: Vec::with_capacity(records.len() * columns.len()),
        values: Vec::with_capacity(records.len() * columns.len()),
    };
    csr.indptr.push(0);
    for r in records {
        for ((c, v), off) in columns.iter().zip(vocabularies).zip(&offsets) {
            csr.indices.push(off + v.code(&c.value(r)) as usize);
            csr.values.push(1.0);
        }
        csr.indptr.push(csr.indices.len());
    }
    let n_cols = names.len();
    EncodedMatrix::sparse(records.len(), n_cols, csr, names)
}

/// Stateless hashing: each `column=value` token adds 1 to bucket
/// `fnv1a64(token) mod m`.
pub fn hashing_encode(records: &[CaseRecord], columns: &[FeatureColumn], m: usize) -> Result<EncodedMatrix> {
    check_width(m)?;
    let mut csr = CsrMatrix {
        indptr: vec![0],
        indices: Vec::new(),
        values: Vec::new(),
    };
    let mut row: Vec<(usize, f64)> = Vec::with_capacity(columns.len());
    for r in records {
        row.clear();
        for c in columns {
            let token = format!("{}={}", c.name(), c.value(r));
            row.push((hash_bucket(&token, m)?, 1.0));
        }
        row.sort_unstable_by_key(|e| e.0);
        let start = csr.indices.len();
        for &(b, v) in &row {
            if csr.indices.len() > start && *csr.indices.last().expect("nonempty") == b {
                *csr.values.last_mut().expect("nonempty") += v;
            } else {
                csr.indices.push(b);
                csr.values.push(v);
            }
        }
        csr.indptr.push(csr.indices.len());
    }
    let names = (0..m).map(|b| FeatureName::with_detail("hash", b.to_string())).collect();
    EncodedMatrix::sparse(records.len(), m, csr, names)
}
