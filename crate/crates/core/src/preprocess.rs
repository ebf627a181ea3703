//! Common average referencing and window segmentation.
//!
//! Training trials are cut class-by-class so no window mixes idle and
//! imagined-word samples. Test trials are cut continuously, ignoring markers.

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::{Label, SignalInstance, Trial, WINDOW_SAMPLES};
use crate::error::{Error, Result};

/// 0.1 s at 128 Hz is 12.8 samples; rounded to 13.
pub const STEP_SAMPLES: usize = 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowingParams {
    pub window_samples: usize,
    pub step_samples: usize,
}

impl Default for WindowingParams {
    fn default() -> Self {
        Self {
            window_samples: WINDOW_SAMPLES,
            step_samples: STEP_SAMPLES,
        }
    }
}

impl WindowingParams {
    pub fn validate(&self) -> Result<()> {
        if self.step_samples == 0 || self.step_samples > self.window_samples {
            return Err(Error::config(
                "step_samples",
                format!(
                    "need 0 < step ({}) <= window ({})",
                    self.step_samples, self.window_samples
                ),
            ));
        }
        Ok(())
    }

    /// Window starts in `[from, to)` such that each window ends at or before `to`.
    fn starts(&self, from: usize, to: usize) -> impl Iterator<Item = usize> {
        let w = self.window_samples;
        (from..)
            .step_by(self.step_samples)
            .take_while(move |s| s + w <= to)
    }

    /// Number of continuous test windows for an `n`-sample trial.
    pub fn test_window_count(&self, n: usize) -> usize {
        if n < self.window_samples {
            0
        } else {
            (n - self.window_samples) / self.step_samples + 1
        }
    }

    /// Number of non-overlapping step-sized bins in an `n`-sample trial.
    pub fn bin_count(&self, n: usize) -> usize {
        n / self.step_samples
    }
}

/// Subtracts the across-channel mean from every time sample.
pub fn car_filter(samples: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if let Some(v) = samples.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvariantViolation(format!("non-finite sample {v}")));
    }
    let mut out = samples.to_owned();
    if out.ncols() == 0 {
        return Ok(out);
    }
    for mut row in out.axis_iter_mut(Axis(0)) {
        let mean = row.sum() / row.len() as f64;
        row.mapv_inplace(|v| v - mean);
    }
    Ok(out)
}

/// Returns a copy of the trial with CAR applied to its samples.
pub fn car_trial(trial: &Trial) -> Result<Trial> {
    Ok(Trial {
        samples: car_filter(trial.samples.view())?,
        ..trial.clone()
    })
}

fn window(trial: &Trial, start: usize, len: usize, label: Option<Label>) -> SignalInstance {
    SignalInstance {
        samples: trial
            .samples
            .slice(ndarray::s![start..start + len, ..])
            .to_owned(),
        label,
        trial_offset: start,
    }
}

pub fn segment_training_trial(trial: &Trial, params: &WindowingParams) -> Result<Vec<SignalInstance>> {
    params.validate()?;
    let n = trial.n_samples();
    let w = params.window_samples;
    let segments = [
        ("leading idle", 0, trial.onset_sample, Label::Iss),
        ("imagined word", trial.onset_sample, trial.ending_sample, Label::Iws),
        ("trailing idle", trial.ending_sample, n, Label::Iss),
    ];
    let mut out = Vec::new();
    for (name, from, to, label) in segments {
        let before = out.len();
        out.extend(params.starts(from, to).map(|s| window(trial, s, w, Some(label))));
        if out.len() == before {
            return Err(Error::SegmentTooShort {
                segment: name,
                len: to - from,
                window: w,
            });
        }
    }
    Ok(out)
}

pub fn segment_test_trial(trial: &Trial, params: &WindowingParams) -> Result<Vec<SignalInstance>> {
    params.validate()?;
    let n = trial.n_samples();
    if n < params.window_samples {
        return Err(Error::SegmentTooShort {
            segment: "trial",
            len: n,
            window: params.window_samples,
        });
    }
    Ok(params
        .starts(0, n)
        .map(|s| window(trial, s, params.window_samples, None))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{CHANNEL_COUNT, DEFAULT_CHANNELS, SAMPLING_RATE};
    use proptest::prelude::*;

    fn trial(n: usize, onset: usize, ending: usize) -> Trial {
        // Bypasses `Trial::new` so short geometries can be exercised.
        Trial {
            subject_id: "s".into(),
            sampling_rate: SAMPLING_RATE,
            channels: DEFAULT_CHANNELS.iter().map(|c| c.to_string()).collect(),
            samples: Array2::from_shape_fn((n, CHANNEL_COUNT), |(r, c)| (r * CHANNEL_COUNT + c) as f64),
            onset_sample: onset,
            ending_sample: ending,
        }
    }

    fn lcg_matrix(rows: usize, seed: u64) -> Array2<f64> {
        let mut s = seed;
        Array2::from_shape_fn((rows, CHANNEL_COUNT), |_| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * 200.0
        })
    }

    #[test]
    fn car_constant_row_is_zero() {
        let x = Array2::from_elem((1, CHANNEL_COUNT), 3.0);
        assert!(car_filter(x.view()).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn car_subtracts_mean() {
        let mut row = vec![2.0; CHANNEL_COUNT];
        row[0] = 1.0;
        row[1] = 3.0;
        let x = Array2::from_shape_vec((1, CHANNEL_COUNT), row).unwrap();
        let y = car_filter(x.view()).unwrap();
        let mut expected = vec![0.0; CHANNEL_COUNT];
        expected[0] = -1.0;
        expected[1] = 1.0;
        assert_eq!(y.row(0).to_vec(), expected);
    }

    #[test]
    fn car_rows_sum_to_zero() {
        let x = lcg_matrix(320, 1);
        let y = car_filter(x.view()).unwrap();
        for (r, row) in y.rows().into_iter().enumerate() {
            // Brute-force row mean, independent of the implementation.
            let mut mean = 0.0;
            for c in 0..CHANNEL_COUNT {
                mean += x[[r, c]];
            }
            mean /= CHANNEL_COUNT as f64;
            for c in 0..CHANNEL_COUNT {
                assert!((row[c] - (x[[r, c]] - mean)).abs() < 1e-12);
            }
            assert!(row.sum().abs() < 1e-9);
        }
    }

    #[test]
    fn car_rejects_nonfinite() {
        let mut x = lcg_matrix(4, 2);
        x[[1, 1]] = f64::INFINITY;
        assert!(car_filter(x.view()).is_err());
    }

    #[test]
    fn car_idempotent() {
        let x = lcg_matrix(100, 3);
        let once = car_filter(x.view()).unwrap();
        let twice = car_filter(once.view()).unwrap();
        assert!(once.iter().zip(twice.iter()).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn training_windows_by_hand() {
        let t = trial(320, 128, 192);
        let inst = segment_training_trial(&t, &WindowingParams::default()).unwrap();
        let starts: Vec<_> = inst.iter().map(|i| i.trial_offset).collect();
        assert_eq!(starts, vec![0, 13, 26, 39, 52, 128, 192, 205, 218, 231, 244]);
        let labels: Vec<_> = inst.iter().map(|i| i.label.unwrap()).collect();
        assert_eq!(labels.iter().filter(|l| **l == Label::Iws).count(), 1);
        assert_eq!(labels[5], Label::Iws);
        assert!(inst.iter().all(|i| i.samples.dim() == (64, CHANNEL_COUNT)));
        assert_eq!(inst[1].samples[[0, 0]], t.samples[[13, 0]]);
    }

    #[test]
    fn training_minimal_geometry() {
        let inst = segment_training_trial(&trial(192, 64, 128), &WindowingParams::default()).unwrap();
        let starts: Vec<_> = inst.iter().map(|i| i.trial_offset).collect();
        assert_eq!(starts, vec![0, 64, 128]);
    }

    #[test]
    fn training_short_iws_rejected() {
        let err = segment_training_trial(&trial(320, 128, 191), &WindowingParams::default()).unwrap_err();
        assert!(matches!(err, Error::SegmentTooShort { len: 63, .. }));
    }

    #[test]
    fn test_windows_continuous() {
        let p = WindowingParams::default();
        let inst = segment_test_trial(&trial(320, 128, 192), &p).unwrap();
        assert_eq!(inst.len(), 20);
        assert_eq!(inst.last().unwrap().trial_offset, 247);
        assert!(inst.iter().all(|i| i.label.is_none()));
        assert_eq!(segment_test_trial(&trial(64, 1, 2), &p).unwrap().len(), 1);
        assert!(matches!(
            segment_test_trial(&trial(63, 1, 2), &p),
            Err(Error::SegmentTooShort { .. })
        ));
    }

    #[test]
    fn test_window_count_closed_form() {
        let p = WindowingParams::default();
        let t = trial(5000, 1, 2);
        for n in 64..=5000 {
            let count = p.starts(0, n).count();
            assert_eq!(count, (n - 64) / 13 + 1, "n={n}");
            assert_eq!(count, p.test_window_count(n));
        }
        assert_eq!(segment_test_trial(&t, &p).unwrap().len(), (5000 - 64) / 13 + 1);
    }

    proptest! {
        #[test]
        fn training_windows_never_straddle_markers(
            lead in 64usize..400, iws in 64usize..400, tail in 64usize..400
        ) {
            let t = trial(lead + iws + tail, lead, lead + iws);
            let inst = segment_training_trial(&t, &WindowingParams::default()).unwrap();
            for i in &inst {
                let (a, b) = (i.trial_offset, i.trial_offset + 64);
                let inside = a >= t.onset_sample && b <= t.ending_sample;
                let before = b <= t.onset_sample;
                let after = a >= t.ending_sample;
                prop_assert!(inside || before || after);
                prop_assert_eq!(i.label == Some(Label::Iws), inside);
            }
        }
    }
}
