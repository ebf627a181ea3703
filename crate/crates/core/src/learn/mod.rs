//! Binary classifiers and the per-subject fold scheme.
//!
//! Labels are bits: 0 for the idle state, 1 for the imagined word.

mod folds;
mod forest;
mod knn;
mod logreg;

pub use folds::{make_fold_plan, Fold, FoldPlan, FOLD_COUNT, TRAIN_RATIO};
pub use forest::{DecisionTree, RandomForest};
pub use knn::Knn;
pub use logreg::{Logreg, LossTrace, GRAD_TOLERANCE, MAX_ITERATIONS};

use std::fmt;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::WidthMismatch {
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_vectors(vectors: &[FeatureVector]) -> Result<Self> {
        let rows: Vec<&[f64]> = vectors.iter().map(|v| v.values.as_slice()).collect();
        Self::from_rows(&rows)
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassifierKind {
    #[serde(rename = "rf", alias = "random_forest")]
    RandomForest,
    #[serde(rename = "knn")]
    Knn,
    #[serde(rename = "logreg")]
    Logreg,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 3] = [Self::RandomForest, Self::Knn, Self::Logreg];
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassifierKind::RandomForest => "rf",
            ClassifierKind::Knn => "knn",
            ClassifierKind::Logreg => "logreg",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierSpec {
    pub kind: ClassifierKind,
    pub rf_trees: usize,
    /// Candidate features per split; `None` means `floor(sqrt(m))`.
    pub rf_max_features: Option<usize>,
    pub rf_bootstrap: bool,
    pub knn_k: usize,
    /// Inverse L2 strength.
    pub logreg_c: f64,
    pub seed: u64,
}

impl Default for ClassifierSpec {
    fn default() -> Self {
        Self {
            kind: ClassifierKind::RandomForest,
            rf_trees: 100,
            rf_max_features: None,
            rf_bootstrap: true,
            knn_k: 50,
            logreg_c: 1.0,
            seed: 0,
        }
    }
}

impl ClassifierSpec {
    pub fn new(kind: ClassifierKind, seed: u64) -> Self {
        Self {
            kind,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ClassifierKind::RandomForest => {
                if self.rf_trees == 0 {
                    return Err(Error::config("rf_trees", "must be positive"));
                }
                if self.rf_max_features == Some(0) {
                    return Err(Error::config("rf_max_features", "must be positive"));
                }
            }
            ClassifierKind::Knn if self.knn_k == 0 => return Err(Error::config("knn_k", "must be positive")),
            ClassifierKind::Logreg if !(self.logreg_c > 0.0 && self.logreg_c.is_finite()) => {
                return Err(Error::config("logreg_c", "must be positive and finite"))
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum Classifier {
    RandomForest(RandomForest),
    Knn(Knn),
    Logreg(Logreg),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub width: usize,
    pub classifier: Classifier,
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    model: Model,
}

fn check_training_data(x: &Matrix, y: &[u8]) -> Result<()> {
    if x.rows != y.len() {
        return Err(Error::LengthMismatch {
            left: x.rows,
            right: y.len(),
        });
    }
    if x.rows < 2 {
        return Err(Error::InputTooShort { needed: 2, got: x.rows });
    }
    if let Some(v) = y.iter().find(|&&v| v > 1) {
        return Err(Error::InvariantViolation(format!("label {v} is not a bit")));
    }
    if x.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure("training matrix has non-finite values".into()));
    }
    Ok(())
}

/// Fits the classifier described by `spec`.
pub fn train(spec: &ClassifierSpec, x: &Matrix, y: &[u8]) -> Result<Model> {
    spec.validate()?;
    check_training_data(x, y)?;
    let single_class = y.iter().all(|&v| v == y[0]);
    let classifier = match spec.kind {
        ClassifierKind::RandomForest => {
            if single_class {
                return Err(Error::SingleClassTraining);
            }
            let max_features = spec
                .rf_max_features
                .unwrap_or_else(|| ((x.cols as f64).sqrt().floor() as usize).max(1));
            Classifier::RandomForest(RandomForest::fit(
                x,
                y,
                &forest::ForestParams {
                    n_trees: spec.rf_trees,
                    max_features,
                    bootstrap: spec.rf_bootstrap,
                    seed: spec.seed,
                },
            ))
        }
        ClassifierKind::Knn => {
            let k = if x.rows < spec.knn_k {
                warn!("k-NN: {} training rows < k = {}; using k = {}", x.rows, spec.knn_k, x.rows);
                x.rows
            } else {
                spec.knn_k
            };
            Classifier::Knn(Knn::fit(x, y, k))
        }
        ClassifierKind::Logreg => {
            if single_class {
                return Err(Error::SingleClassTraining);
            }
            Classifier::Logreg(Logreg::fit(x, y, spec.logreg_c)?.0)
        }
    };
    Ok(Model {
        width: x.cols,
        classifier,
    })
}

/// Logistic regression fit that also returns the loss of every accepted step.
pub fn train_logreg_traced(x: &Matrix, y: &[u8], c: f64) -> Result<(Logreg, LossTrace)> {
    check_training_data(x, y)?;
    if y.iter().all(|&v| v == y[0]) {
        return Err(Error::SingleClassTraining);
    }
    Logreg::fit(x, y, c)
}

impl Model {
    pub fn predict_row(&self, row: &[f64]) -> Result<u8> {
        if row.len() != self.width {
            return Err(Error::WidthMismatch {
                expected: self.width,
                got: row.len(),
            });
        }
        Ok(match &self.classifier {
            Classifier::RandomForest(m) => m.predict_row(row),
            Classifier::Knn(m) => m.predict_row(row),
            Classifier::Logreg(m) => m.predict_row(row),
        })
    }

    pub fn predict<R: AsRef<[f64]>>(&self, rows: &[R]) -> Result<Vec<u8>> {
        rows.iter().map(|r| self.predict_row(r.as_ref())).collect()
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        };
        serde_json::to_string(&file).expect("models serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let malformed = |field: &str, message: String| Error::MalformedFile {
            path: "<model>".into(),
            field: field.into(),
            message,
        };
        let file: ModelFile = serde_json::from_str(text).map_err(|e| malformed("model", e.to_string()))?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(malformed(
                "format_version",
                format!("expected {MODEL_FORMAT_VERSION}, got {}", file.format_version),
            ));
        }
        Ok(file.model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::MalformedFile { field, message, .. } => Error::MalformedFile {
                path: path.into(),
                field,
                message,
            },
            other => other,
        })
    }
}
