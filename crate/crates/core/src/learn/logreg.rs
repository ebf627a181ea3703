//! L2-regularized logistic regression fitted by backtracking gradient descent.
//!
//! Minimizes `(1/n) Σ log(1 + exp(-s_i (w·x_i + b))) + ||w||² / (2 C n)` with
//! `s_i = ±1`. Scaling by `1/(C n)` leaves the minimizer of the usual
//! `C Σ loss + ||w||²/2` unchanged. The intercept is not penalized.

use log::debug;
use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::error::{Error, Result};

pub const GRAD_TOLERANCE: f64 = 1e-6;
pub const MAX_ITERATIONS: usize = 5000;

const ARMIJO: f64 = 1e-4;
const SHRINK: f64 = 0.5;
const MIN_STEP: f64 = 1e-20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Logreg {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
}

/// Per-iteration losses of accepted steps, starting with the initial loss.
pub type LossTrace = Vec<f64>;

/// `log(1 + exp(-m))` without overflow.
fn softplus_neg(m: f64) -> f64 {
    if m > 0.0 {
        (-m).exp().ln_1p()
    } else {
        -m + m.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

struct Problem<'a> {
    x: &'a Matrix,
    s: Vec<f64>,
    reg: f64,
}

impl Problem<'_> {
    fn margins(&self, w: &[f64], b: f64) -> Vec<f64> {
        (0..self.x.rows)
            .map(|r| self.s[r] * (dot(self.x.row(r), w) + b))
            .collect()
    }

    fn loss(&self, w: &[f64], b: f64) -> f64 {
        let n = self.x.rows as f64;
        let data: f64 = self.margins(w, b).iter().map(|&m| softplus_neg(m)).sum();
        data / n + 0.5 * self.reg * dot(w, w)
    }

    fn gradient(&self, w: &[f64], b: f64) -> (Vec<f64>, f64) {
        let n = self.x.rows as f64;
        let mut gw: Vec<f64> = w.iter().map(|v| self.reg * v).collect();
        let mut gb = 0.0;
        for (r, m) in self.margins(w, b).into_iter().enumerate() {
            // d/dz log(1 + exp(-s z)) = -s * sigmoid(-s z)
            let c = -self.s[r] * sigmoid(-m) / n;
            for (g, xv) in gw.iter_mut().zip(self.x.row(r)) {
                *g += c * xv;
            }
            gb += c;
        }
        (gw, gb)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Logreg {
    pub(crate) fn fit(x: &Matrix, y: &[u8], c: f64) -> Result<(Self, LossTrace)> {
        let p = Problem {
            x,
            s: y.iter().map(|&v| if v == 1 { 1.0 } else { -1.0 }).collect(),
            reg: 1.0 / (c * x.rows as f64),
        };
        let mut w = vec![0.0; x.cols];
        let mut b = 0.0;
        let mut f = p.loss(&w, b);
        let mut trace = vec![f];
        let mut step: f64 = 1.0;
        let mut iterations = 0;
        while iterations < MAX_ITERATIONS {
            let (gw, gb) = p.gradient(&w, b);
            let g2 = dot(&gw, &gw) + gb * gb;
            if g2.sqrt() < GRAD_TOLERANCE {
                break;
            }
            iterations += 1;
            // Grow the previous step a little, then backtrack.
            step = (step * 2.0).min(1e6);
            let accepted = loop {
                let w_new: Vec<f64> = w.iter().zip(&gw).map(|(v, g)| v - step * g).collect();
                let b_new = b - step * gb;
                let f_new = p.loss(&w_new, b_new);
                if f_new <= f - ARMIJO * step * g2 {
                    w = w_new;
                    b = b_new;
                    f = f_new;
                    trace.push(f);
                    break true;
                }
                step *= SHRINK;
                if step < MIN_STEP {
                    break false;
                }
            };
            if !accepted {
                // No representable decrease left: the loss is flat to rounding.
                debug!("logistic regression stopped at |g| = {:.3e}", g2.sqrt());
                break;
            }
        }
        if !f.is_finite() {
            return Err(Error::NumericalFailure("logistic regression loss is not finite".into()));
        }
        Ok((
            Self {
                weights: w,
                intercept: b,
                iterations,
            },
            trace,
        ))
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        dot(&self.weights, row) + self.intercept
    }

    /// Class 1 only for a strictly positive decision value.
    pub fn predict_row(&self, row: &[f64]) -> u8 {
        u8::from(self.decision(row) > 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softplus_matches_naive_in_safe_range() {
        for m in [-30.0, -2.0, 0.0, 0.5, 20.0] {
            assert!((softplus_neg(m) - (1.0 + (-m).exp()).ln()).abs() < 1e-12);
        }
        assert!(softplus_neg(-1e4).is_finite());
        assert_eq!(softplus_neg(1e4), 0.0);
    }

    #[test]
    fn one_dimensional_optimum_is_stationary() {
        let rows: Vec<Vec<f64>> = [-2.0, -1.0, -0.5, 0.3, 1.0, 2.5].iter().map(|&v| vec![v]).collect();
        let y = [0, 0, 1, 0, 1, 1];
        let x = Matrix::from_rows(&rows).unwrap();
        let (m, trace) = Logreg::fit(&x, &y, 1.0).unwrap();
        assert!(m.weights[0] > 0.0);
        // Independent check of stationarity via central differences.
        let p = Problem {
            x: &x,
            s: y.iter().map(|&v| if v == 1 { 1.0 } else { -1.0 }).collect(),
            reg: 1.0 / 6.0,
        };
        let h = 1e-6;
        let dw = (p.loss(&[m.weights[0] + h], m.intercept) - p.loss(&[m.weights[0] - h], m.intercept)) / (2.0 * h);
        let db = (p.loss(&m.weights, m.intercept + h) - p.loss(&m.weights, m.intercept - h)) / (2.0 * h);
        assert!(dw.abs() < 1e-5 && db.abs() < 1e-5, "{dw} {db}");
        assert!(trace.windows(2).all(|w| w[1] <= w[0]));
    }
}
