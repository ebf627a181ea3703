//! CART trees with Gini impurity and a bagged forest of them.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::seed::{self, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf {
        /// Fraction of class-1 training samples that reached the leaf.
        p1: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

struct Grower<'a> {
    x: &'a Matrix,
    y: &'a [u8],
    max_features: usize,
    rng: Rng,
    nodes: Vec<Node>,
    features: Vec<usize>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    /// Weighted child impurity, `n_left * gini_left + n_right * gini_right`.
    score: f64,
}

fn gini_sum(ones: usize, n: usize) -> f64 {
    // n * gini = n - (ones^2 + zeros^2) / n
    let (o, z) = (ones as f64, (n - ones) as f64);
    n as f64 - (o * o + z * z) / n as f64
}

impl Grower<'_> {
    fn grow(&mut self, idx: &mut [usize]) -> usize {
        let ones = idx.iter().filter(|&&i| self.y[i] == 1).count();
        let id = self.nodes.len();
        let leaf = Node::Leaf {
            p1: ones as f64 / idx.len() as f64,
        };
        self.nodes.push(leaf);
        if ones == 0 || ones == idx.len() {
            return id;
        }
        let Some(best) = self.best_split(idx, ones) else {
            return id;
        };
        let mid = partition(idx, |&i| self.x.get(i, best.feature) <= best.threshold);
        let (l, r) = idx.split_at_mut(mid);
        let left = self.grow(l);
        let right = self.grow(r);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    /// Visits features in random order until `max_features` non-constant ones
    /// have been evaluated, continuing past that only while no valid split
    /// has been found.
    fn best_split(&mut self, idx: &[usize], ones: usize) -> Option<BestSplit> {
        let n = idx.len();
        let parent = gini_sum(ones, n);
        self.features.shuffle(&mut self.rng);
        let mut best: Option<BestSplit> = None;
        let mut visited = 0;
        let mut order: Vec<(f64, u8)> = Vec::with_capacity(n);
        for fi in 0..self.features.len() {
            if visited >= self.max_features && best.is_some() {
                break;
            }
            let f = self.features[fi];
            order.clear();
            order.extend(idx.iter().map(|&i| (self.x.get(i, f), self.y[i])));
            order.sort_by(|a, b| a.0.total_cmp(&b.0));
            if order[0].0 == order[n - 1].0 {
                continue;
            }
            visited += 1;
            let mut left_ones = 0;
            for k in 1..n {
                left_ones += order[k - 1].1 as usize;
                if order[k].0 == order[k - 1].0 {
                    continue;
                }
                let score = gini_sum(left_ones, k) + gini_sum(ones - left_ones, n - k);
                if score < parent - 1e-12 && best.as_ref().map_or(true, |b| score < b.score) {
                    let mut threshold = 0.5 * (order[k - 1].0 + order[k].0);
                    if threshold >= order[k].0 {
                        threshold = order[k - 1].0;
                    }
                    best = Some(BestSplit {
                        feature: f,
                        threshold,
                        score,
                    });
                }
            }
        }
        best
    }
}

fn partition(idx: &mut [usize], pred: impl Fn(&usize) -> bool) -> usize {
    let mut mid = 0;
    for k in 0..idx.len() {
        if pred(&idx[k]) {
            idx.swap(mid, k);
            mid += 1;
        }
    }
    mid
}

impl DecisionTree {
    /// Grows a tree on the rows listed in `sample` (repeats allowed) until
    /// every leaf is pure or no split reduces impurity.
    pub fn fit(x: &Matrix, y: &[u8], sample: &[usize], max_features: usize, rng: Rng) -> Self {
        let mut g = Grower {
            x,
            y,
            max_features: max_features.clamp(1, x.cols),
            rng,
            nodes: Vec::new(),
            features: (0..x.cols).collect(),
        };
        let mut idx = sample.to_vec();
        g.grow(&mut idx);
        Self { nodes: g.nodes }
    }

    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { p1 } => return p1,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn predict(&self, row: &[f64]) -> u8 {
        u8::from(self.predict_proba(row) > 0.5)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
}

pub(crate) struct ForestParams {
    pub n_trees: usize,
    pub max_features: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl RandomForest {
    pub(crate) fn fit(x: &Matrix, y: &[u8], p: &ForestParams) -> Self {
        let n = x.rows;
        let trees = (0..p.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = seed::rng(p.seed, &[t as u64]);
                let sample: Vec<usize> = if p.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                DecisionTree::fit(x, y, &sample, p.max_features, rng)
            })
            .collect();
        Self { trees }
    }

    /// Mean class-1 probability over trees; 0.5 exactly resolves to 0.
    pub fn predict_row(&self, row: &[f64]) -> u8 {
        let p = self.trees.iter().map(|t| t.predict_proba(row)).sum::<f64>() / self.trees.len() as f64;
        u8::from(p > 0.5)
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }
}
