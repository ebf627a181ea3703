use serde::{Deserialize, Serialize};

use super::Matrix;

/// Euclidean k-nearest-neighbour majority vote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    k: usize,
    x: Matrix,
    y: Vec<u8>,
}

impl Knn {
    /// `k` is clamped to the training size by the caller.
    pub(crate) fn fit(x: &Matrix, y: &[u8], k: usize) -> Self {
        Self {
            k,
            x: x.clone(),
            y: y.to_vec(),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Neighbours are ranked by `(distance, label)`, so which rows tie at
    /// the k-th place cannot change the vote. A split vote resolves to 0.
    pub fn predict_row(&self, row: &[f64]) -> u8 {
        let mut ranked: Vec<(f64, u8)> = (0..self.x.rows)
            .map(|r| {
                let d2: f64 = self.x.row(r).iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum();
                (d2, self.y[r])
            })
            .collect();
        let k = self.k.min(ranked.len());
        let cmp = |a: &(f64, u8), b: &(f64, u8)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < ranked.len() {
            ranked.select_nth_unstable_by(k - 1, cmp);
        }
        let ones = ranked[..k].iter().filter(|p| p.1 == 1).count();
        u8::from(2 * ones > k)
    }
}
