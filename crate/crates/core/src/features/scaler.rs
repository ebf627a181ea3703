use serde::{Deserialize, Serialize};

use super::FeatureVector;
use crate::error::{Error, Result};

/// Per-dimension z-score with population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerModel {
    pub mean: Vec<f64>,
    /// Degenerate (zero-spread) dimensions store 1.
    pub std: Vec<f64>,
}

const DEGENERATE_STD: f64 = 1e-12;

impl ScalerModel {
    pub fn fit_rows<'a>(rows: impl IntoIterator<Item = &'a [f64]>) -> Result<Self> {
        let rows: Vec<&[f64]> = rows.into_iter().collect();
        let first = rows.first().ok_or(Error::EmptyInput)?;
        let dim = first.len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for r in &rows {
            if r.len() != dim {
                return Err(Error::WidthMismatch {
                    expected: dim,
                    got: r.len(),
                });
            }
            for (m, v) in mean.iter_mut().zip(r.iter()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for r in &rows {
            for ((s, v), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
                *s += (v - m).powi(2);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > DEGENERATE_STD {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn apply_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.mean.len() {
            return Err(Error::WidthMismatch {
                expected: self.mean.len(),
                got: row.len(),
            });
        }
        Ok(row
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }
}

pub fn scaler_fit(train: &[FeatureVector]) -> Result<ScalerModel> {
    ScalerModel::fit_rows(train.iter().map(|v| v.values.as_slice()))
}

pub fn scaler_apply(model: &ScalerModel, v: &FeatureVector) -> Result<FeatureVector> {
    Ok(FeatureVector {
        values: model.apply_row(&v.values)?,
        ..v.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_matrix_population_std() {
        let rows = [vec![0.0, 10.0], vec![2.0, 10.0], vec![4.0, 10.0]];
        let m = ScalerModel::fit_rows(rows.iter().map(|r| r.as_slice())).unwrap();
        assert_eq!(m.std[1], 1.0);
        let z: Vec<Vec<f64>> = rows.iter().map(|r| m.apply_row(r).unwrap()).collect();
        let s = 1.5f64.sqrt();
        for (row, want) in z.iter().zip([-s, 0.0, s]) {
            assert!((row[0] - want).abs() < 1e-12);
            assert_eq!(row[1], 0.0);
        }
        assert!((z[2][0] - 1.2247).abs() < 1e-4);
    }

    #[test]
    fn standardizes_training_set() {
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|i| vec![(i as f64).sin() * 3.0 + 1.0, i as f64 * 0.2 - 4.0, ((i * 7) % 5) as f64])
            .collect();
        let m = ScalerModel::fit_rows(rows.iter().map(|r| r.as_slice())).unwrap();
        let z: Vec<Vec<f64>> = rows.iter().map(|r| m.apply_row(r).unwrap()).collect();
        for d in 0..3 {
            let mean = z.iter().map(|r| r[d]).sum::<f64>() / 50.0;
            let var = z.iter().map(|r| (r[d] - mean).powi(2)).sum::<f64>() / 50.0;
            assert!(mean.abs() < 1e-9);
            assert!((var.sqrt() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn single_vector_centers_to_zero() {
        let row = [3.0, -2.0, 8.5];
        let m = ScalerModel::fit_rows([row.as_slice()]).unwrap();
        assert_eq!(m.apply_row(&row).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn empty_and_width_errors() {
        assert!(matches!(ScalerModel::fit_rows(Vec::<&[f64]>::new()), Err(Error::EmptyInput)));
        let m = ScalerModel::fit_rows([[1.0, 2.0].as_slice()]).unwrap();
        assert!(matches!(m.apply_row(&[1.0]), Err(Error::WidthMismatch { .. })));
    }
}
