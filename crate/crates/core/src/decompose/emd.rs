//! Empirical mode decomposition by envelope sifting.
//!
//! Envelopes are natural cubic splines through the local maxima (minima),
//! extended by mirroring the first and last extremum across the signal ends.
//! A candidate is accepted as an IMF once its extrema and zero-crossing
//! counts differ by at most one and either the normalized squared difference
//! between successive sifts or the mean envelope falls under
//! `sift_tolerance`.

use serde::{Deserialize, Serialize};

use super::spline::NaturalCubicSpline;
use super::{BandKind, CoefficientSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmdParams {
    pub max_imfs: usize,
    pub max_sift_iterations: usize,
    pub sift_tolerance: f64,
}

impl Default for EmdParams {
    fn default() -> Self {
        Self {
            max_imfs: 8,
            max_sift_iterations: 50,
            sift_tolerance: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmdOutput {
    pub imfs: Vec<Vec<f64>>,
    pub residual: Vec<f64>,
}

/// Indices of local maxima and minima. A flat run counts once, at its middle.
fn extrema(x: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let mut maxima = Vec::new();
    let mut minima = Vec::new();
    let n = x.len();
    let mut i = 1;
    while i + 1 < n {
        // Extend over a plateau starting at i.
        let mut j = i;
        while j + 1 < n && x[j + 1] == x[i] {
            j += 1;
        }
        if j + 1 >= n {
            break;
        }
        let (left, right) = (x[i - 1], x[j + 1]);
        let mid = (i + j) / 2;
        if x[i] > left && x[i] > right {
            maxima.push(mid);
        } else if x[i] < left && x[i] < right {
            minima.push(mid);
        }
        i = j + 1;
    }
    (maxima, minima)
}

pub fn count_extrema(x: &[f64]) -> usize {
    let (max, min) = extrema(x);
    max.len() + min.len()
}

/// Sign changes, skipping exact zeros.
pub fn count_zero_crossings(x: &[f64]) -> usize {
    let mut last = 0.0f64;
    let mut count = 0;
    for &v in x {
        if v != 0.0 {
            if last != 0.0 && (v > 0.0) != (last > 0.0) {
                count += 1;
            }
            last = v;
        }
    }
    count
}

fn is_imf_shaped(x: &[f64]) -> bool {
    count_extrema(x).abs_diff(count_zero_crossings(x)) <= 1
}

fn envelope(x: &[f64], idx: &[usize]) -> Option<Vec<f64>> {
    let (&first, &last) = (idx.first()?, idx.last()?);
    let end = (x.len() - 1) as f64;
    let mut xs = Vec::with_capacity(idx.len() + 2);
    let mut ys = Vec::with_capacity(idx.len() + 2);
    xs.push(-(first as f64));
    ys.push(x[first]);
    for &i in idx {
        xs.push(i as f64);
        ys.push(x[i]);
    }
    xs.push(2.0 * end - last as f64);
    ys.push(x[last]);
    let spline = NaturalCubicSpline::new(xs, ys)?;
    Some((0..x.len()).map(|t| spline.eval(t as f64)).collect())
}

/// Mean of the upper and lower envelopes, or `None` when either is undefined.
fn mean_envelope(x: &[f64]) -> Option<Vec<f64>> {
    let (maxima, minima) = extrema(x);
    let upper = envelope(x, &maxima)?;
    let lower = envelope(x, &minima)?;
    Some(upper.iter().zip(&lower).map(|(u, l)| 0.5 * (u + l)).collect())
}

fn std_dev(x: &[f64]) -> f64 {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
}

/// Sifts `x` into one IMF, or `None` if no IMF-shaped component emerges.
fn sift(x: &[f64], params: &EmdParams) -> Option<Vec<f64>> {
    let mut h = x.to_vec();
    for _ in 0..params.max_sift_iterations {
        let Some(mean) = mean_envelope(&h) else {
            break;
        };
        let next: Vec<f64> = h.iter().zip(&mean).map(|(a, m)| a - m).collect();
        let energy: f64 = h.iter().map(|v| v * v).sum();
        let change: f64 = mean.iter().map(|m| m * m).sum();
        let sd = if energy > 0.0 { change / energy } else { 0.0 };
        let mean_peak = mean.iter().fold(0.0f64, |a, m| a.max(m.abs()));
        h = next;
        let settled = sd < params.sift_tolerance || mean_peak <= params.sift_tolerance * std_dev(&h);
        if settled && is_imf_shaped(&h) {
            return Some(h);
        }
    }
    is_imf_shaped(&h).then_some(h)
}

/// Decomposes `signal` into IMFs plus a residual.
///
/// Decomposition ends when the residual lacks a maximum or a minimum, when
/// `max_imfs` is reached, or when sifting cannot produce an IMF-shaped
/// candidate. IMFs plus residual sum back to the input.
pub fn emd(signal: &[f64], params: &EmdParams) -> Result<EmdOutput> {
    if signal.len() < 4 {
        return Err(Error::InputTooShort {
            needed: 4,
            got: signal.len(),
        });
    }
    if signal.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvariantViolation("non-finite sample in EMD input".into()));
    }
    let mut residual = signal.to_vec();
    let mut imfs = Vec::new();
    while imfs.len() < params.max_imfs {
        let (maxima, minima) = extrema(&residual);
        if maxima.is_empty() || minima.is_empty() {
            break;
        }
        let Some(imf) = sift(&residual, params) else {
            break;
        };
        for (r, v) in residual.iter_mut().zip(&imf) {
            *r -= v;
        }
        imfs.push(imf);
    }
    if imfs.is_empty() {
        return Err(Error::DecompositionFailure(
            "signal has no oscillatory component to sift".into(),
        ));
    }
    Ok(EmdOutput { imfs, residual })
}

/// Picks the two IMFs closest to `signal` in Euclidean (Minkowski p = 2)
/// distance, keeping their original order. A single IMF is duplicated.
pub fn select_imfs_minkowski(signal: &[f64], imfs: &[CoefficientSet]) -> Result<[CoefficientSet; 2]> {
    let distance = |imf: &CoefficientSet| {
        signal
            .iter()
            .zip(&imf.values)
            .map(|(x, h)| (x - h).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    match imfs {
        [] => Err(Error::EmptyInput),
        [only] => Ok([only.clone(), only.clone()]),
        _ => {
            let mut ranked: Vec<(f64, usize)> = imfs.iter().map(distance).zip(0..).collect();
            ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let (i, j) = (ranked[0].1.min(ranked[1].1), ranked[0].1.max(ranked[1].1));
            let relabel = |set: &CoefficientSet, slot: u8| CoefficientSet {
                kind: BandKind::Imf(slot),
                ..set.clone()
            };
            Ok([relabel(&imfs[i], 1), relabel(&imfs[j], 2)])
        }
    }
}
