//! Higuchi and Katz fractal dimensions.

use log::debug;

use super::energy::LOG_FLOOR;
use super::least_squares_slope;
use crate::error::{Error, Result};

pub const HIGUCHI_K_MAX: usize = 10;

/// Higuchi fractal dimension with lags `1..=k_max`.
///
/// Returns 0 for signals with zero curve length at every lag (constants).
pub fn higuchi_fd(x: &[f64], k_max: usize) -> Result<f64> {
    let n = x.len();
    if k_max == 0 || n < k_max + 1 {
        return Err(Error::InputTooShort {
            needed: k_max.max(1) + 1,
            got: n,
        });
    }
    let mut log_inv_k = Vec::with_capacity(k_max);
    let mut log_len = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let mut total = 0.0;
        for m in 1..=k {
            // 1-based start m; the series holds X(m), X(m+k), ..., X(m + steps*k).
            let steps = (n - m) / k;
            if steps == 0 {
                continue;
            }
            let path: f64 = (1..=steps)
                .map(|i| (x[m - 1 + i * k] - x[m - 1 + (i - 1) * k]).abs())
                .sum();
            let norm = (n - 1) as f64 / (steps * k) as f64;
            total += path * norm / k as f64;
        }
        let mean = total / k as f64;
        if mean > 0.0 && mean.is_finite() {
            log_inv_k.push(-(k as f64).ln());
            log_len.push(mean.ln());
        }
    }
    if log_len.len() < 2 {
        debug!("higuchi: degenerate curve length, returning 0");
        return Ok(0.0);
    }
    Ok(least_squares_slope(&log_inv_k, &log_len).unwrap_or(0.0))
}

/// Katz fractal dimension with natural logarithms and `m` = sample count.
pub fn katz_fd(x: &[f64]) -> Result<f64> {
    let m = x.len();
    if m < 2 {
        return Err(Error::InputTooShort { needed: 2, got: m });
    }
    if let Some(v) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvariantViolation(format!("non-finite sample {v}")));
    }
    let length: f64 = x.windows(2).map(|w| (1.0 + (w[1] - w[0]).powi(2)).sqrt()).sum();
    let extent = x
        .iter()
        .enumerate()
        .map(|(t, v)| ((t * t) as f64 + (v - x[0]).powi(2)).sqrt())
        .fold(0.0f64, f64::max);
    let log_m = (m as f64).ln();
    let ratio = (extent / length).max(LOG_FLOOR);
    Ok(log_m / (log_m + ratio.ln()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    /// Straight transcription of the textbook definition with 1-based indices.
    fn higuchi_oracle(x: &[f64], k_max: usize) -> f64 {
        let n = x.len();
        let xi = |i: usize| x[i - 1];
        let mut pts = vec![];
        for k in 1..=k_max {
            let mut lk = 0.0;
            for m in 1..=k {
                let steps = (n - m) / k;
                let mut s = 0.0;
                for i in 1..=steps {
                    s += (xi(m + i * k) - xi(m + (i - 1) * k)).abs();
                }
                lk += (s * (n - 1) as f64 / (steps as f64 * k as f64)) / k as f64;
            }
            pts.push(((1.0 / k as f64).ln(), (lk / k as f64).ln()));
        }
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    }

    #[test]
    fn higuchi_line_is_one() {
        let x: Vec<f64> = (0..64).map(|t| t as f64).collect();
        let h = higuchi_fd(&x, 10).unwrap();
        assert!((h - 1.0).abs() < 0.05, "{h}");
        assert!((h - higuchi_oracle(&x, 10)).abs() < 1e-12);
    }

    #[test]
    fn higuchi_matches_oracle_on_noise() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..200).map(|_| StandardNormal.sample(&mut rng)).collect();
        assert!((higuchi_fd(&x, 10).unwrap() - higuchi_oracle(&x, 10)).abs() < 1e-12);
    }

    #[test]
    fn higuchi_white_noise_near_two() {
        let mean = (0..20)
            .map(|s| {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(100 + s);
                let x: Vec<f64> = (0..1024).map(|_| StandardNormal.sample(&mut rng)).collect();
                higuchi_fd(&x, 10).unwrap()
            })
            .sum::<f64>()
            / 20.0;
        assert!((mean - 2.0).abs() < 0.15, "{mean}");
    }

    #[test]
    fn higuchi_degenerate_and_short() {
        assert_eq!(higuchi_fd(&[4.0; 64], 10).unwrap(), 0.0);
        assert!(matches!(higuchi_fd(&[1.0; 10], 10), Err(Error::InputTooShort { .. })));
    }

    #[test]
    fn katz_closed_forms() {
        for (a, b) in [(1.0, 0.0), (-2.5, 4.0), (0.0, 3.0), (1e3, -7.0)] {
            let x: Vec<f64> = (0..50).map(|t| a * t as f64 + b).collect();
            assert!((katz_fd(&x).unwrap() - 1.0).abs() < 1e-9, "a={a}");
        }
        let k = katz_fd(&[0.0, 1.0, 0.0, 1.0, 0.0]).unwrap();
        let expected = 5f64.ln() / (5f64.ln() - 0.5 * 2f64.ln());
        assert!((k - expected).abs() < 1e-12);
        assert!((k - 1.2743).abs() < 1e-3);
        assert!(matches!(katz_fd(&[1.0]), Err(Error::InputTooShort { .. })));
    }

    proptest! {
        #[test]
        fn higuchi_offset_invariant(
            x in proptest::collection::vec(-10.0f64..10.0, 20..80),
            b in -1e3f64..1e3,
        ) {
            let shifted: Vec<f64> = x.iter().map(|v| v + b).collect();
            prop_assert!((higuchi_fd(&x, 10).unwrap() - higuchi_fd(&shifted, 10).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn katz_of_any_line_is_one(a in -100.0f64..100.0, b in -100.0f64..100.0, n in 2usize..200) {
            let x: Vec<f64> = (0..n).map(|t| a * t as f64 + b).collect();
            prop_assert!((katz_fd(&x).unwrap() - 1.0).abs() < 1e-9);
        }
    }
}
