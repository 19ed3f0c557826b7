use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Provenance of one design-matrix column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureName {
    /// Source column (`state_code`, `court_key`) or a derived family (`svd`, `hash`).
    pub source: String,
    /// Category, component or bucket, when the column is not the raw source.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl FeatureName {
    pub fn raw(source: impl Into<String>) -> Self {
        FeatureName {
            source: source.into(),
            detail: None,
        }
    }

    pub fn with_detail(source: impl Into<String>, detail: impl Into<String>) -> Self {
        FeatureName {
            source: source.into(),
            detail: Some(detail.into()),
        }
    }
}

impl fmt::Display for FeatureName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.detail {
            Some(d) => write!(f, "{}={}", self.source, d),
            None => f.write_str(&self.source),
        }
    }
}

/// Compressed sparse rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsrMatrix {
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "layout", rename_all = "snake_case")]
pub enum MatrixData {
    /// Row-major values.
    Dense { values: Vec<f64> },
    Sparse(CsrMatrix),
}

/// Numeric design matrix with a feature-name registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedMatrix {
    n_rows: usize,
    n_cols: usize,
    data: MatrixData,
    feature_names: Vec<FeatureName>,
}

impl EncodedMatrix {
    pub fn dense(n_rows: usize, n_cols: usize, values: Vec<f64>, feature_names: Vec<FeatureName>) -> Result<Self> {
        if values.len() != n_rows * n_cols {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {n_rows}x{n_cols} matrix",
                values.len()
            )));
        }
        Self::check_names(n_cols, &feature_names)?;
        Ok(EncodedMatrix {
            n_rows,
            n_cols,
            data: MatrixData::Dense { values },
            feature_names,
        })
    }

    /// Dense matrix from rows, with generic `x0, x1, ...` names.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::ShapeMismatch("ragged rows".into()));
        }
        let names = (0..n_cols).map(|j| FeatureName::raw(format!("x{j}"))).collect();
        Self::dense(rows.len(), n_cols, rows.concat(), names)
    }

    pub fn sparse(n_rows: usize, n_cols: usize, csr: CsrMatrix, feature_names: Vec<FeatureName>) -> Result<Self> {
        if csr.indptr.len() != n_rows + 1
            || csr.indices.len() != csr.values.len()
            || csr.indptr.last() != Some(&csr.indices.len())
            || csr.indptr.windows(2).any(|w| w[0] > w[1])
            || csr.indices.iter().any(|&j| j >= n_cols)
        {
            return Err(Error::ShapeMismatch("malformed CSR structure".into()));
        }
        Self::check_names(n_cols, &feature_names)?;
        Ok(EncodedMatrix {
            n_rows,
            n_cols,
            data: MatrixData::Sparse(csr),
            feature_names,
        })
    }

    fn check_names(n_cols: usize, names: &[FeatureName]) -> Result<()> {
        if names.len() != n_cols {
            return Err(Error::ShapeMismatch(format!(
                "{} feature names for {n_cols} columns",
                names.len()
            )));
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn feature_names(&self) -> &[FeatureName] {
        &self.feature_names
    }

    pub fn data(&self) -> &MatrixData {
        &self.data
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.data, MatrixData::Sparse(_))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.data {
            MatrixData::Dense { values } => values[i * self.n_cols + j],
            MatrixData::Sparse(csr) => {
                let (lo, hi) = (csr.indptr[i], csr.indptr[i + 1]);
                csr.indices[lo..hi]
                    .iter()
                    .zip(&csr.values[lo..hi])
                    .filter(|(c, _)| **c == j)
                    .map(|(_, v)| *v)
                    .sum()
            }
        }
    }

    /// Stored entries of row `i` as `(col, value)`; dense rows yield every column.
    pub fn row_entries(&self, i: usize) -> Vec<(usize, f64)> {
        match &self.data {
            MatrixData::Dense { values } => values[i * self.n_cols..(i + 1) * self.n_cols]
                .iter()
                .copied()
                .enumerate()
                .collect(),
            MatrixData::Sparse(csr) => {
                let (lo, hi) = (csr.indptr[i], csr.indptr[i + 1]);
                csr.indices[lo..hi]
                    .iter()
                    .copied()
                    .zip(csr.values[lo..hi].iter().copied())
                    .collect()
            }
        }
    }

    pub fn row_dense(&self, i: usize) -> Vec<f64> {
        match &self.data {
            MatrixData::Dense { values } => values[i * self.n_cols..(i + 1) * self.n_cols].to_vec(),
            MatrixData::Sparse(_) => {
                let mut row = vec![0.0; self.n_cols];
                for (j, v) in self.row_entries(i) {
                    row[j] += v;
                }
                row
            }
        }
    }

    /// Row-major dense copy of the values.
    pub fn to_dense_values(&self) -> Vec<f64> {
        match &self.data {
            MatrixData::Dense { values } => values.clone(),
            MatrixData::Sparse(_) => (0..self.n_rows).flat_map(|i| self.row_dense(i)).collect(),
        }
    }

    pub fn to_dense(&self) -> EncodedMatrix {
        EncodedMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            data: MatrixData::Dense {
                values: self.to_dense_values(),
            },
            feature_names: self.feature_names.clone(),
        }
    }

    /// Column-major dense copy, the layout the tree learners scan.
    pub fn to_column_major(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows * self.n_cols];
        for i in 0..self.n_rows {
            for (j, v) in self.row_entries(i) {
                out[j * self.n_rows + i] += v;
            }
        }
        out
    }

    pub fn select_rows(&self, rows: &[usize]) -> EncodedMatrix {
        let data = match &self.data {
            MatrixData::Dense { values } => MatrixData::Dense {
                values: rows
                    .iter()
                    .flat_map(|&i| values[i * self.n_cols..(i + 1) * self.n_cols].iter().copied())
                    .collect(),
            },
            MatrixData::Sparse(csr) => {
                let mut out = CsrMatrix {
                    indptr: vec![0],
                    indices: Vec::new(),
                    values: Vec::new(),
                };
                for &i in rows {
                    let (lo, hi) = (csr.indptr[i], csr.indptr[i + 1]);
                    out.indices.extend_from_slice(&csr.indices[lo..hi]);
                    out.values.extend_from_slice(&csr.values[lo..hi]);
                    out.indptr.push(out.indices.len());
                }
                MatrixData::Sparse(out)
            }
        };
        EncodedMatrix {
            n_rows: rows.len(),
            n_cols: self.n_cols,
            data,
            feature_names: self.feature_names.clone(),
        }
    }

    /// Debug export: `row,col,value` for every nonzero entry.
    pub fn write_triplets_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["row", "col", "value"])?;
        for i in 0..self.n_rows {
            for (j, v) in self.row_entries(i) {
                if v != 0.0 {
                    w.write_record([i.to_string(), j.to_string(), v.to_string()])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_sparse() -> EncodedMatrix {
        let csr = CsrMatrix {
            indptr: vec![0, 2, 2, 3],
            indices: vec![0, 2, 1],
            values: vec![1.0, 3.0, 2.0],
        };
        let names = (0..3).map(|j| FeatureName::raw(format!("c{j}"))).collect();
        EncodedMatrix::sparse(3, 3, csr, names).unwrap()
    }

    #[test]
    fn sparse_and_dense_agree() {
        let s = sample_sparse();
        let d = s.to_dense();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(s.get(i, j), d.get(i, j));
            }
        }
        assert_eq!(d.to_dense_values(), vec![1.0, 0.0, 3.0, 0.0, 0.0, 0.0, 0.0, 2.0, 0.0]);
        assert_eq!(s.to_column_major(), vec![1.0, 0.0, 0.0, 0.0, 0.0, 2.0, 3.0, 0.0, 0.0]);
        assert_eq!(s.select_rows(&[2, 0]).to_dense_values(), vec![0.0, 2.0, 0.0, 1.0, 0.0, 3.0]);
    }

    #[test]
    fn shape_checks() {
        assert!(EncodedMatrix::dense(2, 2, vec![0.0; 3], vec![FeatureName::raw("a"); 2]).is_err());
        assert!(EncodedMatrix::dense(1, 2, vec![0.0; 2], vec![FeatureName::raw("a")]).is_err());
        let bad = CsrMatrix {
            indptr: vec![0, 1],
            indices: vec![5],
            values: vec![1.0],
        };
        assert!(EncodedMatrix::sparse(1, 2, bad, vec![FeatureName::raw("a"); 2]).is_err());
    }

    #[test]
    fn triplets() {
        let mut out = Vec::new();
        sample_sparse().write_triplets_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "row,col,value\n0,0,1\n0,2,3\n2,1,2\n");
    }
}
