//! Bin-level scoring, aggregation and the run report.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::SubjectDataset;
use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::learn::ClassifierKind;
use crate::postprocess::truth_bins;
use crate::preprocess::WindowingParams;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// JSON Schema (draft 2020-12) of the report document.
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    F1,
    Precision,
    Recall,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::F1, Metric::Precision, Metric::Recall];
}

impl Metrics {
    pub fn get(&self, m: Metric) -> f64 {
        match m {
            Metric::F1 => self.f1,
            Metric::Precision => self.precision,
            Metric::Recall => self.recall,
        }
    }

    fn from_fn(f: impl Fn(Metric) -> f64) -> Self {
        Self {
            precision: f(Metric::Precision),
            recall: f(Metric::Recall),
            f1: f(Metric::F1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialScore {
    pub trial_id: String,
    #[serde(flatten)]
    pub metrics: Metrics,
}

/// Bin-wise precision, recall and F1 with 1 as the positive class. Every
/// zero denominator yields 0.
pub fn score_trial(pred: &[u8], truth: &[u8]) -> Result<Metrics> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (mut tp, mut fp, mut fne) = (0usize, 0usize, 0usize);
    for (&p, &t) in pred.iter().zip(truth) {
        match (p == 1, t == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fne += 1,
            (false, false) => {}
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fne);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(Metrics { precision, recall, f1 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: Metrics,
    /// Population standard deviation.
    pub std: Metrics,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn aggregate(scores: &[Metrics]) -> Result<Summary> {
    if scores.is_empty() {
        return Err(Error::EmptyInput);
    }
    let stats = |m: Metric| mean_std(&scores.iter().map(|s| s.get(m)).collect::<Vec<_>>());
    Ok(Summary {
        mean: Metrics::from_fn(|m| stats(m).0),
        std: Metrics::from_fn(|m| stats(m).1),
    })
}

/// Quartile with linear interpolation between order statistics.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Indices of values outside `[Q1 - 1.5 IQR, Q3 + 1.5 IQR]`.
pub fn iqr_outliers(values: &[f64]) -> Vec<usize> {
    if values.len() < 2 {
        return Vec::new();
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (q1, q3) = (quantile(&sorted, 0.25), quantile(&sorted, 0.75));
    let iqr = q3 - q1;
    let (lo, hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v < lo || v > hi)
        .map(|(i, _)| i)
        .collect()
}

/// Scores of one fold of one subject under one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    /// Seed the fold's models were derived from.
    pub seed: u64,
    pub train_trials: Vec<String>,
    pub test_trials: Vec<String>,
    /// Retained principal components, for feature set 5 only.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pca_dims: Option<usize>,
    pub trials: Vec<TrialScore>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectResult {
    pub subject_id: String,
    pub feature_set: FeatureSet,
    pub classifier: ClassifierKind,
    pub folds: Vec<FoldResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectReport {
    pub subject_id: String,
    pub feature_set: FeatureSet,
    pub classifier: ClassifierKind,
    pub folds: Vec<FoldResult>,
    /// Over every test trial of every fold.
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub feature_set: FeatureSet,
    pub classifier: ClassifierKind,
    pub subjects: Vec<SubjectReport>,
    /// Mean and std across per-subject means.
    pub population: Summary,
    /// Subject ids beyond 1.5 IQR of the per-subject means, per metric.
    pub outliers: BTreeMap<Metric, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestCell {
    pub feature_set: FeatureSet,
    pub classifier: ClassifierKind,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTarget {
    pub dataset: u8,
    pub classifier: String,
    pub feature_set: u8,
    pub f1_mean: f64,
    pub f1_std: f64,
}

/// Best published F1 per original dataset, for comparison only.
pub fn reference_targets() -> Vec<ReferenceTarget> {
    [(1, "rf", 5, 0.73, 0.07), (2, "rf", 5, 0.79, 0.04), (3, "logreg", 4, 0.68, 0.04)]
        .into_iter()
        .map(|(dataset, c, fs, f1_mean, f1_std)| ReferenceTarget {
            dataset,
            classifier: c.into(),
            feature_set: fs,
            f1_mean,
            f1_std,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub config: serde_json::Value,
    pub reference_targets: Vec<ReferenceTarget>,
    pub results: Vec<CellReport>,
    /// Highest population mean per metric, in the layout of a best-results table.
    pub best: BTreeMap<Metric, BestCell>,
}

/// Groups subject results by `(feature_set, classifier)` and summarizes them.
/// Cells and subjects are ordered by key so the output does not depend on
/// the order results arrive in.
pub fn build_report(config: serde_json::Value, results: Vec<SubjectResult>) -> Result<Report> {
    if results.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut cells: BTreeMap<(FeatureSet, ClassifierKind), Vec<SubjectReport>> = BTreeMap::new();
    for r in results {
        let scores: Vec<Metrics> = r.folds.iter().flat_map(|f| f.trials.iter().map(|t| t.metrics)).collect();
        let summary = aggregate(&scores)?;
        cells.entry((r.feature_set, r.classifier)).or_default().push(SubjectReport {
            subject_id: r.subject_id,
            feature_set: r.feature_set,
            classifier: r.classifier,
            folds: r.folds,
            summary,
        });
    }
    let mut out = Vec::with_capacity(cells.len());
    for ((feature_set, classifier), mut subjects) in cells {
        subjects.sort_by(|a, b| a.subject_id.cmp(&b.subject_id));
        let means: Vec<Metrics> = subjects.iter().map(|s| s.summary.mean).collect();
        let population = aggregate(&means)?;
        let outliers = Metric::ALL
            .iter()
            .map(|&m| {
                let vals: Vec<f64> = means.iter().map(|s| s.get(m)).collect();
                let ids = iqr_outliers(&vals).into_iter().map(|i| subjects[i].subject_id.clone()).collect();
                (m, ids)
            })
            .collect();
        out.push(CellReport {
            feature_set,
            classifier,
            subjects,
            population,
            outliers,
        });
    }
    let best = Metric::ALL
        .iter()
        .map(|&m| {
            let top = out
                .iter()
                .fold(None::<&CellReport>, |acc, c| match acc {
                    Some(a) if a.population.mean.get(m) >= c.population.mean.get(m) => Some(a),
                    _ => Some(c),
                })
                .expect("at least one cell");
            (
                m,
                BestCell {
                    feature_set: top.feature_set,
                    classifier: top.classifier,
                    mean: top.population.mean.get(m),
                    std: top.population.std.get(m),
                },
            )
        })
        .collect();
    Ok(Report {
        schema_version: REPORT_SCHEMA_VERSION,
        config,
        reference_targets: reference_targets(),
        results: out,
        best,
    })
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    /// One row per subject, feature set and classifier.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "subject_id,feature_set,classifier,n_trials,f1_mean,f1_std,precision_mean,precision_std,recall_mean,recall_std,f1_outlier\n",
        );
        for cell in &self.results {
            let flagged = &cell.outliers[&Metric::F1];
            for sub in &cell.subjects {
                let n: usize = sub.folds.iter().map(|f| f.trials.len()).sum();
                let (m, d) = (sub.summary.mean, sub.summary.std);
                s.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{}\n",
                    sub.subject_id,
                    cell.feature_set.id(),
                    cell.classifier,
                    n,
                    m.f1,
                    d.f1,
                    m.precision,
                    d.precision,
                    m.recall,
                    d.recall,
                    flagged.contains(&sub.subject_id)
                ));
            }
        }
        s
    }

    /// Writes the JSON report and a `.csv` sibling, each via a temporary
    /// file renamed into place.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        write_atomic(path, self.to_json().as_bytes())?;
        write_atomic(&path.with_extension("csv"), self.to_csv().as_bytes())
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::config("out", format!("{} has no file name", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = std::fs::File::create(&tmp)
        .and_then(|mut f| {
            f.write_all(bytes)?;
            f.sync_all()
        })
        .and_then(|_| std::fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = std::fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

/// Externally produced bin labels, one vector per trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionFile {
    pub trials: Vec<TrialBins>,
}

impl PredictionFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        crate::data::io::parse_json(path.as_ref())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialBins {
    pub trial_id: String,
    pub bins: Vec<u8>,
}

/// Scores predicted bin vectors against the truth bins of the named trials.
pub fn score_predictions(pred: &PredictionFile, dataset: &[SubjectDataset]) -> Result<Vec<TrialScore>> {
    let trials: HashMap<String, _> = dataset
        .iter()
        .flat_map(|s| s.trials.iter().enumerate().map(move |(i, t)| (s.trial_id(i), t)))
        .collect();
    let params = WindowingParams::default();
    pred.trials
        .iter()
        .map(|p| {
            let trial = trials.get(&p.trial_id).ok_or_else(|| {
                Error::InvariantViolation(format!("unknown trial id {}", p.trial_id))
            })?;
            let truth = truth_bins(trial, params.bin_count(trial.n_samples()));
            let metrics = score_trial(&p.bins, &truth).map_err(|e| e.in_trial(p.trial_id.clone()))?;
            Ok(TrialScore {
                trial_id: p.trial_id.clone(),
                metrics,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bits(s: &str) -> Vec<u8> {
        s.bytes().map(|b| b - b'0').collect()
    }

    #[test]
    fn hand_counted_example() {
        let m = score_trial(&bits("0001111100"), &bits("0000011111")).unwrap();
        for v in [m.precision, m.recall, m.f1] {
            assert!((v - 0.6).abs() < 1e-12);
        }
    }

    #[test]
    fn perfect_and_empty_predictions() {
        let t = bits("0011100");
        assert_eq!(score_trial(&t, &t).unwrap(), Metrics { precision: 1.0, recall: 1.0, f1: 1.0 });
        assert_eq!(score_trial(&bits("0000000"), &t).unwrap(), Metrics::default());
        assert_eq!(score_trial(&bits("000"), &bits("000")).unwrap(), Metrics::default());
        assert!(matches!(score_trial(&t, &t[1..]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn aggregate_examples() {
        let m = |f1| Metrics { precision: f1, recall: f1, f1 };
        let s = aggregate(&[m(0.6), m(0.8)]).unwrap();
        assert!((s.mean.f1 - 0.7).abs() < 1e-12);
        assert!((s.std.f1 - 0.1).abs() < 1e-12);
        let s = aggregate(&[m(0.3)]).unwrap();
        assert_eq!((s.mean.f1, s.std.f1), (0.3, 0.0));
        assert!(matches!(aggregate(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn outliers_by_iqr() {
        // Q1 = 0.71, Q3 = 0.79 with linear interpolation; fences 0.59 and 0.91.
        let v = [0.7, 0.72, 0.75, 0.78, 0.8, 0.2, 0.96];
        let mut sorted = v.to_vec();
        sorted.sort_by(f64::total_cmp);
        assert!((quantile(&sorted, 0.25) - 0.71).abs() < 1e-12);
        assert!((quantile(&sorted, 0.75) - 0.79).abs() < 1e-12);
        assert_eq!(iqr_outliers(&v), vec![5, 6]);
        assert!(iqr_outliers(&[0.5]).is_empty());
    }

    proptest! {
        #[test]
        fn f1_symmetric_and_bounded(pairs in proptest::collection::vec((0u8..2, 0u8..2), 1..60)) {
            let (p, t): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
            let a = score_trial(&p, &t).unwrap();
            let b = score_trial(&t, &p).unwrap();
            prop_assert!((a.f1 - b.f1).abs() < 1e-12);
            prop_assert!(a.f1 >= 0.0 && a.f1 <= 1.0);
            prop_assert!(a.f1 <= 2.0 * a.precision.max(a.recall) + 1e-12);
            prop_assert!(a.f1 <= a.precision.max(a.recall) + 1e-12);
            prop_assert!(a.f1 >= a.precision.min(a.recall) - 1e-12);
        }
    }
}
