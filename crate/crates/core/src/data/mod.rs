//! Trial and dataset model.
//!
//! A [`Trial`] is one continuous recording laid out as idle state, imagined
//! word, idle state. Markers are sample indices; `ending_sample` is exclusive.

pub(crate) mod io;
mod synth;

pub use io::{read_dataset, read_trial_file, write_dataset, write_trial_file, Manifest, ManifestSubject};
pub use synth::{generate_synthetic_dataset, SynthConfig};

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SAMPLING_RATE: u32 = 128;
pub const CHANNEL_COUNT: usize = 14;
/// 0.5 s at 128 Hz.
pub const WINDOW_SAMPLES: usize = 64;
/// Minimum trial length: three segments of one window each.
pub const MIN_TRIAL_SAMPLES: usize = 3 * WINDOW_SAMPLES;

/// Electrode names of the 14-channel headset, in storage order.
pub const DEFAULT_CHANNELS: [&str; CHANNEL_COUNT] = [
    "AF3", "F7", "F3", "FC5", "T7", "P7", "O1", "O2", "P8", "T8", "FC6", "F4", "F8", "AF4",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum Label {
    /// Idle state segment.
    Iss = 0,
    /// Imagined word segment.
    Iws = 1,
}

impl Label {
    pub fn from_bit(bit: u8) -> Self {
        if bit == 0 {
            Label::Iss
        } else {
            Label::Iws
        }
    }

    pub fn bit(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolTag {
    Dataset1,
    Dataset2,
    Dataset3,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub subject_id: String,
    pub sampling_rate: u32,
    pub channels: Vec<String>,
    /// `n_samples × channel_count`, microvolts.
    pub samples: Array2<f64>,
    pub onset_sample: usize,
    pub ending_sample: usize,
}

impl Trial {
    /// Builds a trial with the default channel names and checks every invariant.
    pub fn new(
        subject_id: impl Into<String>,
        samples: Array2<f64>,
        onset_sample: usize,
        ending_sample: usize,
    ) -> Result<Self> {
        let trial = Trial {
            subject_id: subject_id.into(),
            sampling_rate: SAMPLING_RATE,
            channels: DEFAULT_CHANNELS.iter().map(|s| s.to_string()).collect(),
            samples,
            onset_sample,
            ending_sample,
        };
        trial.validate()?;
        Ok(trial)
    }

    pub fn n_samples(&self) -> usize {
        self.samples.nrows()
    }

    pub fn channel_count(&self) -> usize {
        self.samples.ncols()
    }

    pub fn iws_len(&self) -> usize {
        self.ending_sample - self.onset_sample
    }

    pub fn validate(&self) -> Result<()> {
        if self.sampling_rate != SAMPLING_RATE {
            return Err(Error::InvariantViolation(format!(
                "sampling_rate must be {SAMPLING_RATE}, got {}",
                self.sampling_rate
            )));
        }
        if self.channel_count() != CHANNEL_COUNT || self.channels.len() != CHANNEL_COUNT {
            return Err(Error::InvariantViolation(format!(
                "expected {CHANNEL_COUNT} channels, got {} columns and {} names",
                self.channel_count(),
                self.channels.len()
            )));
        }
        let n = self.n_samples();
        if n < MIN_TRIAL_SAMPLES {
            return Err(Error::InvariantViolation(format!(
                "trial has {n} samples, need at least {MIN_TRIAL_SAMPLES}"
            )));
        }
        if !(0 < self.onset_sample && self.onset_sample < self.ending_sample && self.ending_sample < n) {
            return Err(Error::InvariantViolation(format!(
                "markers must satisfy 0 < onset ({}) < ending ({}) < n_samples ({n})",
                self.onset_sample, self.ending_sample
            )));
        }
        if let Some(((row, col), v)) = self.samples.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvariantViolation(format!(
                "non-finite sample {v} at row {row}, channel {col}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectDataset {
    pub subject_id: String,
    pub trials: Vec<Trial>,
    pub protocol_tag: ProtocolTag,
}

impl SubjectDataset {
    pub const MIN_TRIALS: usize = 8;

    pub fn validate(&self) -> Result<()> {
        if self.trials.len() < Self::MIN_TRIALS {
            return Err(Error::TooFewTrials {
                got: self.trials.len(),
                needed: Self::MIN_TRIALS,
            });
        }
        for (i, t) in self.trials.iter().enumerate() {
            t.validate().map_err(|e| e.in_trial(self.trial_id(i)))?;
            if t.subject_id != self.subject_id {
                return Err(Error::InvariantViolation(format!(
                    "trial {} belongs to subject `{}`, expected `{}`",
                    self.trial_id(i),
                    t.subject_id,
                    self.subject_id
                )));
            }
        }
        Ok(())
    }

    /// Stable identifier of the `index`-th trial, also its file stem on disk.
    pub fn trial_id(&self, index: usize) -> String {
        trial_id(&self.subject_id, index)
    }
}

pub fn trial_id(subject_id: &str, index: usize) -> String {
    format!("{subject_id}_{index}")
}

/// One `window × channels` slice of a trial.
///
/// Training segmentation attaches a label; test segmentation never does.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalInstance {
    pub samples: Array2<f64>,
    pub label: Option<Label>,
    pub trial_offset: usize,
}

impl SignalInstance {
    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.samples.view()
    }

    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.samples.column(c).to_vec()
    }

    pub fn channel_count(&self) -> usize {
        self.samples.ncols()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(n: usize) -> Array2<f64> {
        Array2::from_shape_fn((n, CHANNEL_COUNT), |(r, c)| (r * 31 + c) as f64 * 0.01)
    }

    #[test]
    fn valid_trial_passes() {
        let t = Trial::new("s01", flat(320), 128, 192).unwrap();
        assert_eq!(t.iws_len(), 64);
    }

    #[test]
    fn marker_order_checked() {
        assert!(matches!(
            Trial::new("s01", flat(320), 200, 150),
            Err(Error::InvariantViolation(_))
        ));
        assert!(Trial::new("s01", flat(320), 0, 150).is_err());
        assert!(Trial::new("s01", flat(320), 100, 320).is_err());
    }

    #[test]
    fn short_and_nonfinite_rejected() {
        assert!(Trial::new("s01", flat(191), 64, 128).is_err());
        let mut s = flat(320);
        s[[10, 3]] = f64::NAN;
        assert!(Trial::new("s01", s, 128, 192).is_err());
    }

    #[test]
    fn too_few_trials() {
        let t = Trial::new("s01", flat(320), 128, 192).unwrap();
        let ds = SubjectDataset {
            subject_id: "s01".into(),
            trials: vec![t; 7],
            protocol_tag: ProtocolTag::Synthetic,
        };
        assert!(matches!(ds.validate(), Err(Error::TooFewTrials { got: 7, .. })));
    }
}
