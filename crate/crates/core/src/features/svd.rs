//! Truncated SVD of an uncentered design matrix.
//!
//! Subspace iteration on the Gram operator `AᵀA` in feature space with a
//! seeded Gaussian start, followed by a Rayleigh–Ritz step. The working
//! block is `k + oversample` wide; when that covers every column the
//! decomposition is exact after one pass.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::matrix::{EncodedMatrix, FeatureName, MatrixData};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, STREAM_SVD};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvdOptions {
    pub oversample: usize,
    pub max_iter: usize,
    /// Stop when no top-k Ritz value moves by more than `tol * largest`.
    pub tol: f64,
}

impl Default for SvdOptions {
    fn default() -> Self {
        SvdOptions {
            oversample: 10,
            max_iter: 200,
            tol: 1e-13,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvdModel {
    pub k: usize,
    pub n_features: usize,
    /// `k x n_features`, row-major, rows orthonormal.
    pub components: Vec<f64>,
    /// Nonincreasing, nonnegative.
    pub singular_values: Vec<f64>,
}

impl SvdModel {
    pub fn component(&self, i: usize) -> &[f64] {
        &self.components[i * self.n_features..(i + 1) * self.n_features]
    }

    /// Project rows onto the components: `X · componentsᵀ`.
    pub fn transform(&self, m: &EncodedMatrix) -> Result<EncodedMatrix> {
        if m.n_cols() != self.n_features {
            return Err(Error::ShapeMismatch(format!(
                "matrix has {} columns, SVD was fitted on {}",
                m.n_cols(),
                self.n_features
            )));
        }
        let k = self.k;
        let values: Vec<f64> = (0..m.n_rows())
            .into_par_iter()
            .flat_map_iter(|i| {
                let entries = m.row_entries(i);
                (0..k).map(move |c| {
                    let comp = self.component(c);
                    entries.iter().map(|&(j, v)| v * comp[j]).sum::<f64>()
                })
            })
            .collect();
        let names = (0..k).map(|c| FeatureName::with_detail("svd", c.to_string())).collect();
        EncodedMatrix::dense(m.n_rows(), k, values, names)
    }
}

const CHUNK: usize = 2048;

/// `Aᵀ (A V)`, reduced in fixed row chunks so the result does not depend
/// on the worker count.
fn gram_apply(a: &EncodedMatrix, v: &DMatrix<f64>) -> DMatrix<f64> {
    let (d, l) = v.shape();
    let n = a.n_rows();
    let starts: Vec<usize> = (0..n).step_by(CHUNK).collect();
    let partials: Vec<DMatrix<f64>> = starts
        .par_iter()
        .map(|&lo| {
            let hi = (lo + CHUNK).min(n);
            let mut z = DMatrix::<f64>::zeros(d, l);
            let mut r = vec![0.0; l];
            for i in lo..hi {
                let entries = row_view(a, i);
                r.iter_mut().for_each(|x| *x = 0.0);
                for &(j, x) in &entries {
                    for (c, rc) in r.iter_mut().enumerate() {
                        *rc += x * v[(j, c)];
                    }
                }
                for &(j, x) in &entries {
                    for (c, rc) in r.iter().enumerate() {
                        z[(j, c)] += x * rc;
                    }
                }
            }
            z
        })
        .collect();
    let mut z = DMatrix::<f64>::zeros(d, l);
    for p in partials {
        z += p;
    }
    z
}

fn row_view(a: &EncodedMatrix, i: usize) -> Vec<(usize, f64)> {
    match a.data() {
        MatrixData::Dense { .. } => a.row_entries(i).into_iter().filter(|e| e.1 != 0.0).collect(),
        MatrixData::Sparse(_) => a.row_entries(i),
    }
}

fn orthonormalize(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

/// Descending eigenpairs of a symmetric matrix.
fn sorted_eigen(g: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = g.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn truncated_svd(m: &EncodedMatrix, k: usize, seed: u64) -> Result<(SvdModel, EncodedMatrix)> {
    truncated_svd_with(m, k, seed, SvdOptions::default())
}

pub fn truncated_svd_with(
    m: &EncodedMatrix,
    k: usize,
    seed: u64,
    opts: SvdOptions,
) -> Result<(SvdModel, EncodedMatrix)> {
    let (n, d) = (m.n_rows(), m.n_cols());
    let max_k = n.min(d);
    if k == 0 || k > max_k {
        return Err(Error::RankOutOfRange { k, max: max_k });
    }
    let l = (k + opts.oversample).min(max_k);

    let mut rng = stream_rng(seed, STREAM_SVD, 0);
    let omega = DMatrix::from_fn(d, l, |_, _| StandardNormal.sample(&mut rng));
    let mut basis = orthonormalize(omega);
    let mut previous: Option<Vec<f64>> = None;
    let (mut values, mut rotation);
    let mut iter = 0;
    loop {
        let z = gram_apply(m, &basis);
        let g = basis.transpose() * &z;
        let g = (&g + g.transpose()) * 0.5;
        (values, rotation) = sorted_eigen(g);
        iter += 1;
        let scale = values[0].abs().max(f64::MIN_POSITIVE);
        let converged = l == d
            || previous
                .as_ref()
                .is_some_and(|p| (0..k).all(|i| (values[i] - p[i]).abs() <= opts.tol * scale));
        if converged || iter >= opts.max_iter {
            break;
        }
        previous = Some(values[..k].to_vec());
        basis = orthonormalize(z);
    }

    let vectors = &basis * rotation;
    let mut components = Vec::with_capacity(k * d);
    for c in 0..k {
        let col = vectors.column(c);
        // Sign convention: largest-magnitude entry positive.
        let pivot = col.iter().copied().fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        components.extend(col.iter().map(|x| sign * x));
    }
    let singular_values = values[..k].iter().map(|v| v.max(0.0).sqrt()).collect();
    let model = SvdModel {
        k,
        n_features: d,
        components,
        singular_values,
    };
    let projected = model.transform(m)?;
    Ok((model, projected))
}
