//! Expansive two-channel filter bank with the biorthogonal 2.2 wavelet.
//!
//! Coefficient layout and boundary handling follow the PyWavelets
//! conventions: a level of an `n`-sample signal yields
//! `floor((n + F - 1) / 2)` coefficients per band for a filter of length `F`,
//! so a 64-sample window decomposes into bands of 34, 19, 12, 8 and 8.

use serde::{Deserialize, Serialize};

use super::{BandKind, CoefficientSet};
use crate::data::WINDOW_SAMPLES;
use crate::error::{Error, Result};

pub const DWT_LEVELS: usize = 4;

const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Analysis and synthesis filters of a biorthogonal wavelet.
#[derive(Debug, Clone, Copy)]
pub struct FilterBank {
    pub dec_lo: [f64; 6],
    pub dec_hi: [f64; 6],
    pub rec_lo: [f64; 6],
    pub rec_hi: [f64; 6],
}

/// Biorthogonal spline wavelet 2.2 (the CDF 5/3 pair), zero padded to six taps.
pub const BIOR22: FilterBank = FilterBank {
    dec_lo: [0.0, -S / 4.0, S / 2.0, 1.5 * S, S / 2.0, -S / 4.0],
    dec_hi: [0.0, S / 2.0, -S, S / 2.0, 0.0, 0.0],
    rec_lo: [0.0, S / 2.0, S, S / 2.0, 0.0, 0.0],
    rec_hi: [0.0, S / 4.0, S / 2.0, -1.5 * S, S / 2.0, S / 4.0],
};

/// How samples outside the signal are synthesized before filtering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMode {
    /// Half-sample symmetric reflection (`x[-1] = x[0]`).
    Symmetric,
    /// First-order extrapolation from the boundary slope. Degree-one
    /// polynomials stay polynomial, so ramps give exactly zero details.
    #[default]
    Smooth,
}

impl BoundaryMode {
    fn sample(self, x: &[f64], i: isize) -> f64 {
        let n = x.len() as isize;
        if (0..n).contains(&i) {
            return x[i as usize];
        }
        match self {
            BoundaryMode::Symmetric => {
                let period = 2 * n;
                let mut k = i.rem_euclid(period);
                if k >= n {
                    k = period - 1 - k;
                }
                x[k as usize]
            }
            BoundaryMode::Smooth => {
                if n == 1 {
                    return x[0];
                }
                let n = n as usize;
                if i < 0 {
                    x[0] + i as f64 * (x[1] - x[0])
                } else {
                    let beyond = (i as usize - (n - 1)) as f64;
                    x[n - 1] + beyond * (x[n - 1] - x[n - 2])
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DwtBands {
    /// Detail bands, level 1 (finest) first.
    pub details: Vec<Vec<f64>>,
    pub approximation: Vec<f64>,
    /// Input length at each level, level 1 first; needed to invert.
    pub(crate) lengths: Vec<usize>,
    pub mode: BoundaryMode,
}

impl DwtBands {
    /// Detail bands followed by the approximation, tagged with their channel.
    pub fn coefficient_sets(&self, channel: usize) -> Vec<CoefficientSet> {
        let mut sets: Vec<CoefficientSet> = self
            .details
            .iter()
            .enumerate()
            .map(|(j, d)| CoefficientSet {
                values: d.clone(),
                kind: BandKind::Detail(j as u8 + 1),
                source_channel: channel,
            })
            .collect();
        sets.push(CoefficientSet {
            values: self.approximation.clone(),
            kind: BandKind::Approximation(self.details.len() as u8 + 1),
            source_channel: channel,
        });
        sets
    }
}

fn analysis_step(x: &[f64], bank: &FilterBank, mode: BoundaryMode) -> (Vec<f64>, Vec<f64>) {
    let f = bank.dec_lo.len();
    let out_len = (x.len() + f - 1) / 2;
    let mut lo = Vec::with_capacity(out_len);
    let mut hi = Vec::with_capacity(out_len);
    for k in 0..out_len {
        let (mut a, mut d) = (0.0, 0.0);
        for j in 0..f {
            let v = mode.sample(x, (2 * k + 1) as isize - j as isize);
            a += bank.dec_lo[j] * v;
            d += bank.dec_hi[j] * v;
        }
        lo.push(a);
        hi.push(d);
    }
    (lo, hi)
}

fn synthesis_step(lo: &[f64], hi: &[f64], bank: &FilterBank, out_len: usize) -> Vec<f64> {
    let f = bank.rec_lo.len();
    (0..out_len)
        .map(|n| {
            let m = n + f - 2;
            (0..lo.len())
                .filter_map(|k| {
                    let tap = m.checked_sub(2 * k).filter(|t| *t < f)?;
                    Some(lo[k] * bank.rec_lo[tap] + hi[k] * bank.rec_hi[tap])
                })
                .sum()
        })
        .collect()
}

/// Multi-level decomposition of a signal of any length >= 2.
pub fn wavedec(signal: &[f64], levels: usize, mode: BoundaryMode) -> Result<DwtBands> {
    if signal.len() < 2 {
        return Err(Error::InputTooShort {
            needed: 2,
            got: signal.len(),
        });
    }
    if signal.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvariantViolation("non-finite sample in DWT input".into()));
    }
    let mut details = Vec::with_capacity(levels);
    let mut lengths = Vec::with_capacity(levels);
    let mut approx = signal.to_vec();
    for _ in 0..levels {
        lengths.push(approx.len());
        let (lo, hi) = analysis_step(&approx, &BIOR22, mode);
        details.push(hi);
        approx = lo;
    }
    Ok(DwtBands {
        details,
        approximation: approx,
        lengths,
        mode,
    })
}

/// Inverts [`wavedec`].
pub fn waverec(bands: &DwtBands) -> Vec<f64> {
    let mut approx = bands.approximation.clone();
    for (detail, &len) in bands.details.iter().zip(&bands.lengths).rev() {
        approx = synthesis_step(&approx, detail, &BIOR22, len);
    }
    approx
}

/// Four-level bior2.2 decomposition of one 64-sample window channel.
pub fn dwt_bior22(signal: &[f64]) -> Result<DwtBands> {
    if signal.len() != WINDOW_SAMPLES {
        return Err(Error::InvariantViolation(format!(
            "DWT input must have {WINDOW_SAMPLES} samples, got {}",
            signal.len()
        )));
    }
    wavedec(signal, DWT_LEVELS, BoundaryMode::default())
}
