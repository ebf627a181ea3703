//! End-to-end per-subject evaluation.
//!
//! For every subject: CAR, fold plan, then per fold and per requested
//! (feature set, classifier): z-score (and PCA for set 5) fitted on the
//! training trials, train, predict the continuous test windows, reduce to
//! bins, correct and score. Features of each trial are computed once and
//! shared by all folds.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::data::{SignalInstance, SubjectDataset, WINDOW_SAMPLES};
use crate::error::{Error, Result};
use crate::eval::{build_report, score_trial, FoldResult, Report, SubjectResult, TrialScore};
use crate::features::{
    assemble_fs4, extract_features, pca_fit, FeatureSet, ScalerModel, DEFAULT_RETAINED_VARIANCE,
};
use crate::learn::{train, ClassifierKind, ClassifierSpec, FoldPlan, Matrix, FOLD_COUNT, TRAIN_RATIO};
use crate::postprocess::TrialPrediction;
use crate::preprocess::{car_trial, segment_test_trial, segment_training_trial, WindowingParams};
use crate::seed;

/// Parses a JSON config, reporting failures as [`Error::Config`] with the
/// path of the offending field.
pub fn parse_config<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        Error::config(field, e.into_inner().to_string())
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Dataset directory; relative paths resolve against the config file.
    pub dataset_path: PathBuf,
    #[serde(default = "default_feature_sets")]
    pub feature_sets: Vec<FeatureSet>,
    #[serde(default = "default_classifiers")]
    pub classifiers: Vec<ClassifierKind>,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_train_ratio")]
    pub train_ratio: f64,
    #[serde(default)]
    pub windowing: WindowingParams,
    #[serde(default = "default_pca_variance")]
    pub pca_variance: f64,
    #[serde(default = "default_rf_trees")]
    pub rf_trees: usize,
    #[serde(default = "default_knn_k")]
    pub knn_k: usize,
    #[serde(default = "default_logreg_c")]
    pub logreg_c: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_feature_sets() -> Vec<FeatureSet> {
    vec![FeatureSet::Fs1]
}
fn default_classifiers() -> Vec<ClassifierKind> {
    vec![ClassifierKind::RandomForest]
}
fn default_folds() -> usize {
    FOLD_COUNT
}
fn default_train_ratio() -> f64 {
    TRAIN_RATIO
}
fn default_pca_variance() -> f64 {
    DEFAULT_RETAINED_VARIANCE
}
fn default_rf_trees() -> usize {
    ClassifierSpec::default().rf_trees
}
fn default_knn_k() -> usize {
    ClassifierSpec::default().knn_k
}
fn default_logreg_c() -> f64 {
    ClassifierSpec::default().logreg_c
}

impl RunConfig {
    pub fn new(dataset_path: impl Into<PathBuf>) -> Self {
        Self {
            dataset_path: dataset_path.into(),
            feature_sets: default_feature_sets(),
            classifiers: default_classifiers(),
            folds: FOLD_COUNT,
            train_ratio: TRAIN_RATIO,
            windowing: WindowingParams::default(),
            pca_variance: DEFAULT_RETAINED_VARIANCE,
            rf_trees: default_rf_trees(),
            knn_k: default_knn_k(),
            logreg_c: default_logreg_c(),
            seed: 0,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = parse_config(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file and resolves `dataset_path` against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        if cfg.dataset_path.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            cfg.dataset_path = base.join(&cfg.dataset_path);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.feature_sets.is_empty() {
            return Err(Error::config("feature_sets", "must name at least one set"));
        }
        if self.classifiers.is_empty() {
            return Err(Error::config("classifiers", "must name at least one classifier"));
        }
        let mut fs = self.feature_sets.clone();
        fs.sort();
        fs.dedup();
        if fs.len() != self.feature_sets.len() {
            return Err(Error::config("feature_sets", "contains duplicates"));
        }
        let mut cl = self.classifiers.clone();
        cl.sort();
        cl.dedup();
        if cl.len() != self.classifiers.len() {
            return Err(Error::config("classifiers", "contains duplicates"));
        }
        if self.folds == 0 {
            return Err(Error::config("folds", "must be at least 1"));
        }
        if !(self.train_ratio > 0.0 && self.train_ratio < 1.0) {
            return Err(Error::config("train_ratio", "must lie in (0, 1)"));
        }
        if !(self.pca_variance > 0.0 && self.pca_variance <= 1.0) {
            return Err(Error::config("pca_variance", "must lie in (0, 1]"));
        }
        self.windowing.validate()?;
        if self.windowing.window_samples != WINDOW_SAMPLES {
            return Err(Error::config(
                "windowing.window_samples",
                format!("feature layouts require {WINDOW_SAMPLES}-sample windows"),
            ));
        }
        for kind in &self.classifiers {
            self.classifier_spec(*kind, 0).validate()?;
        }
        Ok(())
    }

    fn classifier_spec(&self, kind: ClassifierKind, seed: u64) -> ClassifierSpec {
        ClassifierSpec {
            kind,
            rf_trees: self.rf_trees,
            knn_k: self.knn_k,
            logreg_c: self.logreg_c,
            seed,
            ..ClassifierSpec::default()
        }
    }

    /// Feature sets that must be extracted directly from instances.
    fn base_sets(&self) -> Vec<FeatureSet> {
        let combined = self
            .feature_sets
            .iter()
            .any(|s| matches!(s, FeatureSet::Fs4 | FeatureSet::Fs5));
        let mut base: Vec<FeatureSet> = [FeatureSet::Fs1, FeatureSet::Fs2, FeatureSet::Fs3]
            .into_iter()
            .filter(|s| combined || self.feature_sets.contains(s))
            .collect();
        if combined {
            base.push(FeatureSet::Fs4);
        }
        base
    }
}

/// Feature values of one instance keyed by set; set 5 reads set 4.
type InstanceFeatures = BTreeMap<FeatureSet, Vec<f64>>;

struct TrialFeatures {
    train: Vec<(u8, InstanceFeatures)>,
    test: Vec<InstanceFeatures>,
}

fn featurize(inst: &SignalInstance, base: &[FeatureSet]) -> Result<InstanceFeatures> {
    let mut out = BTreeMap::new();
    let mut parts = Vec::new();
    for &set in base {
        if set == FeatureSet::Fs4 {
            let v = assemble_fs4(&parts[0], &parts[1], &parts[2])?;
            out.insert(set, v.values);
        } else {
            let v = extract_features(inst, set)?;
            out.insert(set, v.values.clone());
            parts.push(v);
        }
    }
    Ok(out)
}

fn source_set(set: FeatureSet) -> FeatureSet {
    if set == FeatureSet::Fs5 {
        FeatureSet::Fs4
    } else {
        set
    }
}

struct Subject<'a> {
    index: usize,
    data: &'a SubjectDataset,
}

fn run_fold(
    cfg: &RunConfig,
    subject: &Subject<'_>,
    trials: &[TrialFeatures],
    fold_index: usize,
    fold: &crate::learn::Fold,
    set: FeatureSet,
    kind: ClassifierKind,
) -> Result<FoldResult> {
    let key = source_set(set);
    let stage = |name: &str| format!("subject {} fold {fold_index} {set} {kind}: {name}", subject.data.subject_id);

    let mut rows: Vec<&[f64]> = Vec::new();
    let mut labels = Vec::new();
    for &t in &fold.train {
        for (label, feats) in &trials[t].train {
            rows.push(&feats[&key]);
            labels.push(*label);
        }
    }
    let scaler = ScalerModel::fit_rows(rows.iter().copied()).map_err(|e| e.in_stage(stage("scaling")))?;
    let mut train_rows: Vec<Vec<f64>> = rows.iter().map(|r| scaler.apply_row(r)).collect::<Result<_>>()?;

    let pca = if set == FeatureSet::Fs5 {
        let model = pca_fit(&train_rows, cfg.pca_variance).map_err(|e| e.in_stage(stage("pca")))?;
        train_rows = train_rows.iter().map(|r| model.project(r)).collect::<Result<_>>()?;
        Some(model)
    } else {
        None
    };
    let transform = |r: &[f64]| -> Result<Vec<f64>> {
        let z = scaler.apply_row(r)?;
        match &pca {
            Some(m) => m.project(&z),
            None => Ok(z),
        }
    };

    let fold_seed = seed::derive(cfg.seed, &[subject.index as u64, fold_index as u64]);
    let model_seed = seed::derive(fold_seed, &[set.id() as u64, kind as u64]);
    let x = Matrix::from_rows(&train_rows)?;
    let model = train(&cfg.classifier_spec(kind, model_seed), &x, &labels).map_err(|e| e.in_stage(stage("training")))?;

    let mut scores = Vec::with_capacity(fold.test.len());
    for &t in &fold.test {
        let trial_id = subject.data.trial_id(t);
        let test_rows: Vec<Vec<f64>> = trials[t]
            .test
            .iter()
            .map(|f| transform(&f[&key]))
            .collect::<Result<_>>()?;
        let raw = model.predict(&test_rows).map_err(|e| e.in_stage(stage("prediction")))?;
        let pred = TrialPrediction::new(raw, &subject.data.trials[t], &cfg.windowing)
            .map_err(|e| e.in_trial(trial_id.clone()))?;
        let metrics = score_trial(&pred.corrected_labels, &pred.truth_labels)?;
        scores.push(TrialScore { trial_id, metrics });
    }
    Ok(FoldResult {
        fold: fold_index,
        seed: fold_seed,
        train_trials: fold.train.iter().map(|&t| subject.data.trial_id(t)).collect(),
        test_trials: fold.test.iter().map(|&t| subject.data.trial_id(t)).collect(),
        pca_dims: pca.map(|m| m.n_components()),
        trials: scores,
    })
}

fn run_subject(cfg: &RunConfig, subject: Subject<'_>) -> Result<Vec<SubjectResult>> {
    let id = &subject.data.subject_id;
    let t0 = Instant::now();
    subject.data.validate()?;
    let cleaned: Vec<_> = subject
        .data
        .trials
        .iter()
        .enumerate()
        .map(|(i, t)| car_trial(t).map_err(|e| e.in_trial(subject.data.trial_id(i))))
        .collect::<Result<_>>()?;
    let t_car = t0.elapsed();

    let plan = FoldPlan::new(
        cleaned.len(),
        cfg.folds,
        cfg.train_ratio,
        seed::derive(cfg.seed, &[subject.index as u64]),
    )?;

    let t1 = Instant::now();
    let base = cfg.base_sets();
    let trials: Vec<TrialFeatures> = cleaned
        .par_iter()
        .enumerate()
        .map(|(i, trial)| {
            let wrap = |e: Error| e.in_trial(subject.data.trial_id(i));
            let train = segment_training_trial(trial, &cfg.windowing)
                .map_err(wrap)?
                .iter()
                .map(|inst| {
                    let label = inst.label.expect("training instances are labeled").bit();
                    Ok((label, featurize(inst, &base).map_err(wrap)?))
                })
                .collect::<Result<_>>()?;
            let test = segment_test_trial(trial, &cfg.windowing)
                .map_err(wrap)?
                .iter()
                .map(|inst| featurize(inst, &base).map_err(wrap))
                .collect::<Result<_>>()?;
            Ok(TrialFeatures { train, test })
        })
        .collect::<Result<_>>()?;
    let t_feat = t1.elapsed();

    let t2 = Instant::now();
    let subject_data = Subject {
        index: subject.index,
        data: subject.data,
    };
    let mut results = Vec::new();
    for &set in &cfg.feature_sets {
        for &kind in &cfg.classifiers {
            let folds = plan
                .folds
                .par_iter()
                .enumerate()
                .map(|(f, fold)| run_fold(cfg, &subject_data, &trials, f, fold, set, kind))
                .collect::<Result<Vec<_>>>()?;
            results.push(SubjectResult {
                subject_id: id.clone(),
                feature_set: set,
                classifier: kind,
                folds,
            });
        }
    }
    info!(
        "subject {id}: car {:.3}s, features {:.3}s, train+score {:.3}s",
        t_car.as_secs_f64(),
        t_feat.as_secs_f64(),
        t2.elapsed().as_secs_f64()
    );
    Ok(results)
}

/// Runs every subject and assembles the report. `config_echo` is embedded
/// verbatim so a report records what produced it.
pub fn run(cfg: &RunConfig, datasets: &[SubjectDataset], config_echo: serde_json::Value) -> Result<Report> {
    cfg.validate()?;
    if datasets.is_empty() {
        return Err(Error::EmptyInput);
    }
    let per_subject: Vec<Vec<SubjectResult>> = datasets
        .par_iter()
        .enumerate()
        .map(|(index, data)| run_subject(cfg, Subject { index, data }))
        .collect::<Result<_>>()?;
    build_report(config_echo, per_subject.into_iter().flatten().collect())
}
