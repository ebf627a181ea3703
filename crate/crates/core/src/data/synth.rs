//! Synthetic trial generator used for desk-scale experiments.
//!
//! Background is white noise plus first-order low-passed noise on every
//! channel. Inside `[onset, ending)` a sum of sinusoids drawn from the
//! carrier band is added with per-channel random phases (identical phases on
//! all channels would be cancelled by common average referencing). The
//! carrier RMS over the imagined-word span is `snr` times the channel's
//! background standard deviation.

use std::f64::consts::PI;

use ndarray::Array2;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ProtocolTag, SubjectDataset, Trial, CHANNEL_COUNT, SAMPLING_RATE, WINDOW_SAMPLES};
use crate::error::{Error, Result};
use crate::seed;

const WHITE_STD: f64 = 5.0;
const AR_COEFF: f64 = 0.9;
const AR_INNOVATION_STD: f64 = 3.5;
const CARRIER_TONES: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub n_subjects: usize,
    pub trials_per_subject: usize,
    pub trial_length_samples: usize,
    /// Inclusive `[min, max]` imagined-word length in samples.
    pub iws_length_range: [usize; 2],
    pub carrier_band_hz: [f64; 2],
    pub snr: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_subjects: 5,
            trials_per_subject: 20,
            trial_length_samples: 768,
            iws_length_range: [128, 192],
            carrier_band_hz: [8.0, 12.0],
            snr: 5.0,
            seed: 7,
        }
    }
}

impl SynthConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = crate::pipeline::parse_config(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_subjects == 0 {
            return Err(Error::config("n_subjects", "must be at least 1"));
        }
        if self.trials_per_subject < SubjectDataset::MIN_TRIALS {
            return Err(Error::config(
                "trials_per_subject",
                format!("must be at least {}", SubjectDataset::MIN_TRIALS),
            ));
        }
        let [lo, hi] = self.iws_length_range;
        if lo < WINDOW_SAMPLES || lo > hi {
            return Err(Error::config(
                "iws_length_range",
                format!("need {WINDOW_SAMPLES} <= min <= max, got [{lo}, {hi}]"),
            ));
        }
        if hi + 2 * WINDOW_SAMPLES > self.trial_length_samples {
            return Err(Error::config(
                "trial_length_samples",
                format!(
                    "{} samples cannot fit a {hi}-sample imagined word with {WINDOW_SAMPLES} idle samples on each side",
                    self.trial_length_samples
                ),
            ));
        }
        let [f_lo, f_hi] = self.carrier_band_hz;
        let nyquist = SAMPLING_RATE as f64 / 2.0;
        if !(f_lo.is_finite() && f_hi.is_finite() && 0.0 < f_lo && f_lo < f_hi && f_hi < nyquist) {
            return Err(Error::config(
                "carrier_band_hz",
                format!("need 0 < low < high < {nyquist}, got [{f_lo}, {f_hi}]"),
            ));
        }
        if !(self.snr.is_finite() && self.snr >= 0.0) {
            return Err(Error::config("snr", format!("must be finite and non-negative, got {}", self.snr)));
        }
        Ok(())
    }

    pub fn subject_id(&self, index: usize) -> String {
        format!("s{:02}", index + 1)
    }
}

pub fn generate_synthetic_dataset(config: &SynthConfig) -> Result<Vec<SubjectDataset>> {
    config.validate()?;
    (0..config.n_subjects)
        .into_par_iter()
        .map(|s| {
            let subject_id = config.subject_id(s);
            let trials = (0..config.trials_per_subject)
                .map(|t| generate_trial(config, &subject_id, s as u64, t as u64))
                .collect::<Result<Vec<_>>>()?;
            Ok(SubjectDataset {
                subject_id,
                trials,
                protocol_tag: ProtocolTag::Synthetic,
            })
        })
        .collect()
}

fn generate_trial(config: &SynthConfig, subject_id: &str, subject: u64, trial: u64) -> Result<Trial> {
    let mut rng = seed::rng(config.seed, &[subject, trial]);
    let n = config.trial_length_samples;
    let [lo, hi] = config.iws_length_range;
    let iws_len = rng.random_range(lo..=hi);
    let onset = rng.random_range(WINDOW_SAMPLES..=n - WINDOW_SAMPLES - iws_len);
    let ending = onset + iws_len;

    let [f_lo, f_hi] = config.carrier_band_hz;
    let freqs: Vec<f64> = (0..CARRIER_TONES).map(|_| rng.random_range(f_lo..=f_hi)).collect();
    let fs = SAMPLING_RATE as f64;

    let mut samples = Array2::<f64>::zeros((n, CHANNEL_COUNT));
    for c in 0..CHANNEL_COUNT {
        let mut background = Vec::with_capacity(n);
        let stationary_std = AR_INNOVATION_STD / (1.0 - AR_COEFF * AR_COEFF).sqrt();
        let mut ar = stationary_std * gauss(&mut rng);
        for _ in 0..n {
            ar = AR_COEFF * ar + AR_INNOVATION_STD * gauss(&mut rng);
            background.push(ar + WHITE_STD * gauss(&mut rng));
        }
        let phases: Vec<f64> = (0..CARRIER_TONES).map(|_| rng.random_range(0.0..2.0 * PI)).collect();

        if config.snr > 0.0 {
            let carrier: Vec<f64> = (onset..ending)
                .map(|t| {
                    freqs
                        .iter()
                        .zip(&phases)
                        .map(|(f, p)| (2.0 * PI * f * t as f64 / fs + p).sin())
                        .sum()
                })
                .collect();
            let rms = (carrier.iter().map(|v| v * v).sum::<f64>() / carrier.len() as f64).sqrt();
            let gain = config.snr * std_dev(&background) / rms.max(f64::MIN_POSITIVE);
            for (t, v) in (onset..ending).zip(&carrier) {
                background[t] += gain * v;
            }
        }
        samples.column_mut(c).assign(&ndarray::Array1::from(background));
    }
    Trial::new(subject_id, samples, onset, ending)
}

fn gauss(rng: &mut seed::Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn std_dev(x: &[f64]) -> f64 {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
}
