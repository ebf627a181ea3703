//! Principal component projection keeping a target share of total variance.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{FeatureDescriptor, FeatureName, FeatureSet, FeatureVector};
use crate::error::{Error, Result};

pub const DEFAULT_RETAINED_VARIANCE: f64 = 0.90;

const EIGEN_EPS: f64 = 1e-12;
const EIGEN_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// One orthonormal component per row, `components x input_dim`.
    pub components: Vec<Vec<f64>>,
    /// Eigenvalues of every component, descending, including dropped ones.
    pub eigenvalues: Vec<f64>,
    pub retained_variance_ratio: f64,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn project(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.input_dim() {
            return Err(Error::WidthMismatch {
                expected: self.input_dim(),
                got: row.len(),
            });
        }
        Ok(self
            .components
            .iter()
            .map(|c| c.iter().zip(row).zip(&self.mean).map(|((w, v), m)| w * (v - m)).sum())
            .collect())
    }
}

/// Fits on the rows of `train`, keeping the fewest leading components whose
/// eigenvalue sum reaches `target_ratio` of the total.
pub fn pca_fit(train: &[Vec<f64>], target_ratio: f64) -> Result<PcaModel> {
    if train.len() < 2 {
        return Err(Error::EmptyInput);
    }
    if !(target_ratio > 0.0 && target_ratio <= 1.0) {
        return Err(Error::config("target_ratio", format!("must lie in (0, 1], got {target_ratio}")));
    }
    let n = train.len();
    let dim = train[0].len();
    if let Some(bad) = train.iter().find(|r| r.len() != dim) {
        return Err(Error::WidthMismatch {
            expected: dim,
            got: bad.len(),
        });
    }
    let mut mean = vec![0.0; dim];
    for r in train {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let centered = DMatrix::from_fn(n, dim, |i, j| train[i][j] - mean[j]);
    let cov = (centered.transpose() * &centered) / (n - 1) as f64;
    let eig = SymmetricEigen::try_new(cov, EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or_else(|| Error::NumericalFailure("covariance eigendecomposition did not converge".into()))?;

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let total: f64 = eigenvalues.iter().sum();

    let (keep, ratio) = if total <= 0.0 {
        (1, 1.0)
    } else {
        let mut acc = 0.0;
        let mut keep = dim;
        for (k, v) in eigenvalues.iter().enumerate() {
            acc += v;
            // Tolerate round-off so exactly-rank-deficient data stops on time.
            if acc / total >= target_ratio - 1e-12 {
                keep = k + 1;
                break;
            }
        }
        let kept: f64 = eigenvalues[..keep].iter().sum();
        (keep, (kept / total).min(1.0))
    };

    let components = order[..keep]
        .iter()
        .map(|&i| {
            let col = eig.eigenvectors.column(i);
            // Fix the sign so the largest-magnitude loading is positive.
            let pivot = col.iter().copied().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
            let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
            col.iter().map(|v| v * sign).collect()
        })
        .collect();

    Ok(PcaModel {
        mean,
        components,
        eigenvalues,
        retained_variance_ratio: ratio,
    })
}

pub fn pca_layout(model: &PcaModel) -> Arc<[FeatureDescriptor]> {
    (0..model.n_components())
        .map(|k| FeatureDescriptor {
            channel: None,
            band: None,
            feature: FeatureName::Pc(k as u16 + 1),
        })
        .collect()
}

/// Projects a (z-scored) FS4 vector into FS5 space.
pub fn pca_apply(model: &PcaModel, v: &FeatureVector, layout: &Arc<[FeatureDescriptor]>) -> Result<FeatureVector> {
    Ok(FeatureVector {
        values: model.project(&v.values)?,
        feature_set: FeatureSet::Fs5,
        label: v.label,
        layout: Arc::clone(layout),
        origin: v.origin,
    })
}
