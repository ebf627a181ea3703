use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::SubjectDataset;
use crate::error::{Error, Result};
use crate::seed;

pub const FOLD_COUNT: usize = 4;
pub const TRAIN_RATIO: f64 = 0.75;

/// Trial indices of one train/test split, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Independent random splits at trial granularity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub folds: Vec<Fold>,
}

impl FoldPlan {
    /// `folds` shuffles of `0..n_trials`, the first `floor(ratio * n)` going to
    /// training. Fold `f` draws from the stream `seed / f`.
    pub fn new(n_trials: usize, folds: usize, train_ratio: f64, seed: u64) -> Result<Self> {
        if n_trials < SubjectDataset::MIN_TRIALS {
            return Err(Error::TooFewTrials {
                got: n_trials,
                needed: SubjectDataset::MIN_TRIALS,
            });
        }
        if folds == 0 {
            return Err(Error::config("folds", "must be at least 1"));
        }
        if !(train_ratio > 0.0 && train_ratio < 1.0) {
            return Err(Error::config("train_ratio", format!("must lie in (0, 1), got {train_ratio}")));
        }
        let n_train = ((train_ratio * n_trials as f64).floor() as usize).clamp(1, n_trials - 1);
        let folds = (0..folds)
            .map(|f| {
                let mut order: Vec<usize> = (0..n_trials).collect();
                order.shuffle(&mut seed::rng(seed, &[f as u64]));
                let (tr, te) = order.split_at(n_train);
                let mut train = tr.to_vec();
                let mut test = te.to_vec();
                train.sort_unstable();
                test.sort_unstable();
                Fold { train, test }
            })
            .collect();
        Ok(Self { folds })
    }
}

pub fn make_fold_plan(dataset: &SubjectDataset, seed: u64) -> Result<FoldPlan> {
    FoldPlan::new(dataset.trials.len(), FOLD_COUNT, TRAIN_RATIO, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        for (n, tr) in [(100, 75), (160, 120), (8, 6), (20, 15), (21, 15)] {
            let plan = FoldPlan::new(n, 4, 0.75, 1).unwrap();
            assert_eq!(plan.folds.len(), 4);
            for f in &plan.folds {
                assert_eq!((f.train.len(), f.test.len()), (tr, n - tr));
            }
        }
    }

    #[test]
    fn disjoint_and_covering() {
        let plan = FoldPlan::new(37, 4, 0.75, 9).unwrap();
        for f in &plan.folds {
            let mut all: Vec<usize> = f.train.iter().chain(&f.test).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..37).collect::<Vec<_>>());
        }
        assert_ne!(plan.folds[0], plan.folds[1]);
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        assert_eq!(FoldPlan::new(100, 4, 0.75, 3).unwrap(), FoldPlan::new(100, 4, 0.75, 3).unwrap());
        assert_ne!(FoldPlan::new(100, 4, 0.75, 3).unwrap(), FoldPlan::new(100, 4, 0.75, 4).unwrap());
    }

    #[test]
    fn too_few_trials() {
        assert!(matches!(
            FoldPlan::new(7, 4, 0.75, 0),
            Err(Error::TooFewTrials { got: 7, needed: 8 })
        ));
    }
}
