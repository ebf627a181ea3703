//! Generalized Hurst exponent from the scaling of q-th order increment moments.

use serde::{Deserialize, Serialize};

use super::least_squares_slope;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GheParams {
    pub tau_min: usize,
    pub tau_max: usize,
}

impl Default for GheParams {
    /// Lags 1..=19 (19 is about a third of a 64-sample window).
    fn default() -> Self {
        Self {
            tau_min: 1,
            tau_max: 19,
        }
    }
}

/// `H(q)`: slope of `ln K_q(tau)` against `ln tau`, divided by `q`, where
/// `K_q(tau) = <|X(t+tau) - X(t)|^q> / <|X(t)|^q>`.
pub fn ghe(x: &[f64], q: u32, params: &GheParams) -> Result<f64> {
    let GheParams { tau_min, tau_max } = *params;
    if q == 0 || tau_min == 0 || tau_min >= tau_max {
        return Err(Error::config(
            "ghe",
            format!("need q >= 1 and 1 <= tau_min < tau_max, got q={q}, tau=[{tau_min}, {tau_max}]"),
        ));
    }
    if x.len() < 2 * tau_max {
        return Err(Error::InputTooShort {
            needed: 2 * tau_max,
            got: x.len(),
        });
    }
    let qf = q as f64;
    let moment = |v: f64| v.abs().powf(qf);
    let baseline = x.iter().map(|&v| moment(v)).sum::<f64>() / x.len() as f64;

    let mut log_tau = Vec::new();
    let mut log_k = Vec::new();
    for tau in tau_min..=tau_max {
        let incr = x[tau..]
            .iter()
            .zip(x)
            .map(|(a, b)| moment(a - b))
            .sum::<f64>()
            / (x.len() - tau) as f64;
        let k = incr / baseline;
        if k > 0.0 && k.is_finite() {
            log_tau.push((tau as f64).ln());
            log_k.push(k.ln());
        }
    }
    if log_k.len() < 3 {
        return Err(Error::DegenerateScaling { valid: log_k.len() });
    }
    let slope = least_squares_slope(&log_tau, &log_k)
        .ok_or_else(|| Error::NumericalFailure("GHE regression has no spread in tau".into()))?;
    Ok(slope / qf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    fn walk(seed: u64, n: usize) -> Vec<f64> {
        noise(seed, n)
            .into_iter()
            .scan(0.0, |acc, v| {
                *acc += v;
                Some(*acc)
            })
            .collect()
    }

    fn mean_h(series: impl Fn(u64) -> Vec<f64>) -> f64 {
        (0..50).map(|s| ghe(&series(s), 1, &GheParams::default()).unwrap()).sum::<f64>() / 50.0
    }

    #[test]
    fn random_walk_half() {
        let h = mean_h(|s| walk(1000 + s, 1024));
        assert!((h - 0.5).abs() < 0.1, "{h}");
    }

    #[test]
    fn white_noise_zero() {
        let h = mean_h(|s| noise(2000 + s, 1024));
        assert!(h.abs() < 0.1, "{h}");
    }

    #[test]
    fn linear_trend_one() {
        let x: Vec<f64> = (0..1024).map(|t| t as f64).collect();
        let h = ghe(&x, 1, &GheParams::default()).unwrap();
        assert!((h - 1.0).abs() < 0.05, "{h}");
        let h2 = ghe(&x, 2, &GheParams::default()).unwrap();
        assert!((h2 - 1.0).abs() < 0.05, "{h2}");
    }

    #[test]
    fn errors() {
        assert!(matches!(
            ghe(&[1.0; 20], 1, &GheParams::default()),
            Err(Error::InputTooShort { needed: 38, .. })
        ));
        assert!(matches!(
            ghe(&[2.0; 64], 1, &GheParams::default()),
            Err(Error::DegenerateScaling { valid: 0 })
        ));
    }

    proptest! {
        #[test]
        fn scale_invariant(seed in 0u64..1000, c in 0.01f64..100.0, q in 1u32..=2) {
            let x = walk(seed, 64);
            let scaled: Vec<f64> = x.iter().map(|v| c * v).collect();
            let p = GheParams::default();
            prop_assert!((ghe(&x, q, &p).unwrap() - ghe(&scaled, q, &p).unwrap()).abs() < 1e-9);
        }
    }
}
