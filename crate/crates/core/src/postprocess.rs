//! Window-to-bin label reduction and single-bin error correction.
//!
//! A bin is one step (13 samples, about 0.1 s). Window `w` spans samples
//! `[13w, 13w + 64)` and so overlaps at most five consecutive bins.

use serde::{Deserialize, Serialize};

use crate::data::Trial;
use crate::error::{Error, Result};
use crate::preprocess::WindowingParams;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialPrediction {
    pub raw_window_labels: Vec<u8>,
    pub bin_labels: Vec<u8>,
    pub corrected_labels: Vec<u8>,
    pub truth_labels: Vec<u8>,
}

impl TrialPrediction {
    /// Reduces, corrects and attaches ground truth for one test trial.
    pub fn new(raw: Vec<u8>, trial: &Trial, params: &WindowingParams) -> Result<Self> {
        let n_bins = params.bin_count(trial.n_samples());
        let bin_labels = reduce_windows_with(&raw, n_bins, params)?;
        let corrected_labels = correct_errors(&bin_labels);
        let truth_labels = truth_bins_with(trial, n_bins, params);
        Ok(Self {
            raw_window_labels: raw,
            bin_labels,
            corrected_labels,
            truth_labels,
        })
    }
}

/// Majority vote over the windows overlapping each bin, with the default
/// 64/13 windowing.
pub fn reduce_windows(raw: &[u8], n_bins: usize) -> Result<Vec<u8>> {
    reduce_windows_with(raw, n_bins, &WindowingParams::default())
}

/// Bins near the trial edges vote among fewer windows; a tie (including no
/// covering window at all) gives 0.
pub fn reduce_windows_with(raw: &[u8], n_bins: usize, params: &WindowingParams) -> Result<Vec<u8>> {
    if raw.is_empty() || n_bins == 0 {
        return Err(Error::EmptyInput);
    }
    let (win, step) = (params.window_samples, params.step_samples);
    Ok((0..n_bins)
        .map(|b| {
            let (lo, hi) = (b * step, (b + 1) * step);
            // Window w overlaps [lo, hi) iff w*step < hi and w*step + win > lo.
            let first = if lo < win { 0 } else { (lo - win) / step + 1 };
            let last = (hi - 1) / step;
            let covering = raw.get(first..=last.min(raw.len() - 1)).unwrap_or(&[]);
            let ones = covering.iter().filter(|&&v| v == 1).count();
            u8::from(2 * ones > covering.len())
        })
        .collect())
}

/// Flips isolated interior bins in a single pass over the input.
///
/// Bin `i` is an island when `bins[i-1] == bins[i+1] != bins[i]`. An island
/// is flipped unless one of its neighbours is itself an island, so
/// alternating stretches such as `0,1,0,1,0` are left alone and the
/// operation is idempotent. The first and last bins are never flipped.
pub fn correct_errors(bins: &[u8]) -> Vec<u8> {
    let n = bins.len();
    let island = |i: usize| i > 0 && i + 1 < n && bins[i - 1] == bins[i + 1] && bins[i] != bins[i - 1];
    (0..n)
        .map(|i| {
            if island(i) && !island(i - 1) && !island(i + 1) {
                1 - bins[i]
            } else {
                bins[i]
            }
        })
        .collect()
}

/// Ground truth per bin with the default 13-sample step.
pub fn truth_bins(trial: &Trial, n_bins: usize) -> Vec<u8> {
    truth_bins_with(trial, n_bins, &WindowingParams::default())
}

/// Bin `b` is 1 when more than half of its samples lie in `[onset, ending)`.
pub fn truth_bins_with(trial: &Trial, n_bins: usize, params: &WindowingParams) -> Vec<u8> {
    let step = params.step_samples;
    (0..n_bins)
        .map(|b| {
            let (lo, hi) = (b * step, (b + 1) * step);
            let inside = hi.min(trial.ending_sample).saturating_sub(lo.max(trial.onset_sample));
            u8::from(2 * inside > step)
        })
        .collect()
}
