use crate::error::{Error, Result};

/// Floor applied to log arguments so degenerate bands map to -12.
pub const LOG_FLOOR: f64 = 1e-12;

fn clamped_log10(v: f64) -> f64 {
    v.max(LOG_FLOOR).log10()
}

/// Instantaneous energy: `log10` of the mean squared coefficient.
pub fn instantaneous_energy(w: &[f64]) -> Result<f64> {
    if w.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mean_sq = w.iter().map(|v| v * v).sum::<f64>() / w.len() as f64;
    Ok(clamped_log10(mean_sq))
}

/// Teager energy: `log10` of the summed absolute Teager-Kaiser operator over
/// interior points, normalized by the full band length.
pub fn teager_energy(w: &[f64]) -> Result<f64> {
    if w.len() < 3 {
        return Err(Error::InputTooShort {
            needed: 3,
            got: w.len(),
        });
    }
    let sum: f64 = w
        .windows(3)
        .map(|t| (t[1] * t[1] - t[0] * t[2]).abs())
        .sum();
    Ok(clamped_log10(sum / w.len() as f64))
}
