//! Second-order gradient-boosted regression trees on the logistic loss.

use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::scalar::{sigmoid, Scalar};
use crate::seed::{derive_seed, rng_from_seed};

/// Fewest training rows accepted.
pub const MIN_ROWS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoostConfig {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub gamma: f64,
    pub lambda: f64,
    pub subsample: f64,
    pub colsample: f64,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            n_rounds: 100,
            learning_rate: 0.1,
            max_depth: 5,
            gamma: 1.5,
            lambda: 1.0,
            subsample: 0.8,
            colsample: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RegNode<F> {
    /// Unscaled weight `-G / (H + lambda)`.
    Leaf { weight: F },
    Split {
        feature: usize,
        threshold: F,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegTree<F> {
    pub nodes: Vec<RegNode<F>>,
}

impl<F: Scalar> RegTree<F> {
    pub fn weight(&self, row: ArrayView1<F>) -> F {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                RegNode::Leaf { weight } => return *weight,
                RegNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn leaf_weights(&self) -> Vec<F> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                RegNode::Leaf { weight } => Some(*weight),
                RegNode::Split { .. } => None,
            })
            .collect()
    }

    pub fn split_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, RegNode::Split { .. })).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Booster<F> {
    pub base_margin: F,
    pub learning_rate: F,
    pub trees: Vec<RegTree<F>>,
}

impl<F: Scalar> Booster<F> {
    pub fn margin(&self, row: ArrayView1<F>) -> F {
        self.trees
            .iter()
            .fold(self.base_margin, |m, t| m + self.learning_rate * t.weight(row))
    }

    /// Probability of label 1.
    pub fn score(&self, row: ArrayView1<F>) -> F {
        sigmoid(self.margin(row))
    }

    pub fn split_count(&self) -> usize {
        self.trees.iter().map(RegTree::split_count).sum()
    }
}

struct Grower<'a, F> {
    x: ArrayView2<'a, F>,
    g: &'a [F],
    h: &'a [F],
    features: &'a [usize],
    lambda: F,
    gamma: F,
    max_depth: usize,
    nodes: Vec<RegNode<F>>,
}

impl<F: Scalar> Grower<'_, F> {
    fn score(&self, g: F, h: F) -> F {
        g * g / (h + self.lambda)
    }

    fn grow(&mut self, rows: &mut [usize], depth: usize) -> usize {
        let gs: F = rows.iter().map(|&i| self.g[i]).sum();
        let hs: F = rows.iter().map(|&i| self.h[i]).sum();
        let at = self.nodes.len();
        self.nodes.push(RegNode::Leaf {
            weight: -gs / (hs + self.lambda),
        });
        if depth >= self.max_depth || rows.len() < 2 {
            return at;
        }
        let parent = self.score(gs, hs);
        let half = F::lit(0.5);
        let mut best: Option<(F, usize, F, usize)> = None;
        for &f in self.features {
            rows.sort_by(|&a, &b| {
                self.x[[a, f]]
                    .partial_cmp(&self.x[[b, f]])
                    .expect("finite features")
                    .then(a.cmp(&b))
            });
            let (mut gl, mut hl) = (F::zero(), F::zero());
            for k in 1..rows.len() {
                gl += self.g[rows[k - 1]];
                hl += self.h[rows[k - 1]];
                let lo = self.x[[rows[k - 1], f]];
                let hi = self.x[[rows[k], f]];
                if lo == hi {
                    continue;
                }
                let gain = half * (self.score(gl, hl) + self.score(gs - gl, hs - hl) - parent)
                    - self.gamma;
                if gain > F::zero() && best.as_ref().is_none_or(|b| gain > b.0) {
                    let mut thr = (lo + hi) * half;
                    if thr >= hi {
                        thr = lo;
                    }
                    best = Some((gain, f, thr, k));
                }
            }
        }
        let Some((_, feature, threshold, split_at)) = best else {
            return at;
        };
        rows.sort_by(|&a, &b| {
            self.x[[a, feature]]
                .partial_cmp(&self.x[[b, feature]])
                .expect("finite features")
                .then(a.cmp(&b))
        });
        let (l, r) = rows.split_at_mut(split_at);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[at] = RegNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        at
    }
}

fn fraction_count(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64).round() as usize).clamp(1, n)
}

pub fn fit_gradient_boosting<F: Scalar>(
    x: ArrayView2<F>,
    y: &[u8],
    cfg: &BoostConfig,
    seed: u64,
) -> Result<Booster<F>, ModelError> {
    let (n, d) = x.dim();
    if n < MIN_ROWS {
        return Err(ModelError::Size(format!(
            "gradient boosting needs at least {MIN_ROWS} rows, got {n}"
        )));
    }
    let in_unit = |v: f64| v > 0.0 && v <= 1.0;
    if !in_unit(cfg.subsample) || !in_unit(cfg.colsample) || !(cfg.lambda >= 0.0) || !(cfg.gamma >= 0.0) {
        return Err(ModelError::Config(
            "subsample and colsample must lie in (0, 1]; gamma and lambda must be non-negative".into(),
        ));
    }
    let pos = y.iter().filter(|&&v| v == 1).count();
    if pos == 0 || pos == n {
        return Err(ModelError::SingleClass);
    }
    let prior = pos as f64 / n as f64;
    let base_margin = F::lit((prior / (1.0 - prior)).ln());
    let eta = F::lit(cfg.learning_rate);
    let mut margin = Array1::from_elem(n, base_margin);
    let mut g = vec![F::zero(); n];
    let mut h = vec![F::zero(); n];
    let mut trees = Vec::with_capacity(cfg.n_rounds);
    let rows_per_round = fraction_count(cfg.subsample, n);
    let cols_per_tree = fraction_count(cfg.colsample, d);

    for round in 0..cfg.n_rounds {
        for i in 0..n {
            let p = sigmoid(margin[i]);
            g[i] = p - F::from_count(usize::from(y[i]));
            h[i] = p * (F::one() - p);
        }
        let mut rng = rng_from_seed(derive_seed(seed, ["round".into(), (round as u64).into()]));
        let mut features = sample(&mut rng, d, cols_per_tree).into_vec();
        features.sort_unstable();
        let mut rows = if rows_per_round == n {
            (0..n).collect()
        } else {
            sample(&mut rng, n, rows_per_round).into_vec()
        };
        rows.sort_unstable();
        let mut grower = Grower {
            x,
            g: &g,
            h: &h,
            features: &features,
            lambda: F::lit(cfg.lambda),
            gamma: F::lit(cfg.gamma),
            max_depth: cfg.max_depth,
            nodes: Vec::new(),
        };
        grower.grow(&mut rows, 0);
        let tree = RegTree { nodes: grower.nodes };
        for (i, m) in margin.iter_mut().enumerate() {
            *m += eta * tree.weight(x.row(i));
        }
        trees.push(tree);
    }
    Ok(Booster {
        base_margin,
        learning_rate: eta,
        trees,
    })
}
