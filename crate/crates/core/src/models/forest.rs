//! Gini decision trees and bootstrap random forests.

use ndarray::{ArrayView1, ArrayView2};
use rand::seq::index::sample;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::scalar::Scalar;
use crate::seed::{derive_seed, rng_from_seed, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_features: usize,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_features: 5,
            min_samples_leaf: 8,
            min_samples_split: 4,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node<F> {
    Leaf {
        label: u8,
    },
    /// Rows with `x[feature] <= threshold` go to `left`.
    Split {
        feature: usize,
        threshold: F,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree<F> {
    pub nodes: Vec<Node<F>>,
}

impl<F: Scalar> DecisionTree<F> {
    pub fn predict(&self, row: ArrayView1<F>) -> u8 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { label } => return *label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn split_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Split { .. })).count()
    }

    /// Thresholds of every split in node order.
    pub fn thresholds(&self) -> Vec<(usize, F)> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split {
                    feature, threshold, ..
                } => Some((*feature, *threshold)),
                Node::Leaf { .. } => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest<F> {
    pub trees: Vec<DecisionTree<F>>,
}

impl<F: Scalar> RandomForest<F> {
    /// Number of trees voting for label 1.
    pub fn votes(&self, row: ArrayView1<F>) -> usize {
        self.trees.iter().filter(|t| t.predict(row) == 1).count()
    }

    /// Fraction of trees voting for label 1.
    pub fn score(&self, row: ArrayView1<F>) -> F {
        F::from_count(self.votes(row)) / F::from_count(self.trees.len())
    }
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

struct Builder<'a, F> {
    x: ArrayView2<'a, F>,
    y: &'a [u8],
    cfg: &'a ForestConfig,
    nodes: Vec<Node<F>>,
}

struct Best<F> {
    feature: usize,
    threshold: F,
    impurity: f64,
    split_at: usize,
}

impl<F: Scalar> Builder<'_, F> {
    fn leaf(&mut self, pos: usize, n: usize) -> usize {
        self.nodes.push(Node::Leaf {
            label: u8::from(2 * pos > n),
        });
        self.nodes.len() - 1
    }

    fn grow(&mut self, rows: &mut [usize], rng: &mut Rng) -> usize {
        let n = rows.len();
        let pos = rows.iter().filter(|&&i| self.y[i] == 1).count();
        let min_leaf = self.cfg.min_samples_leaf.max(1);
        if pos == 0 || pos == n || n < self.cfg.min_samples_split || n < 2 * min_leaf {
            return self.leaf(pos, n);
        }
        let d = self.x.ncols();
        let mut best: Option<Best<F>> = None;
        for feature in sample(rng, d, self.cfg.max_features.min(d)).into_iter() {
            rows.sort_by(|&a, &b| {
                self.x[[a, feature]]
                    .partial_cmp(&self.x[[b, feature]])
                    .expect("finite features")
                    .then(a.cmp(&b))
            });
            let mut left_pos = 0;
            for k in 1..n {
                left_pos += usize::from(self.y[rows[k - 1]] == 1);
                let lo = self.x[[rows[k - 1], feature]];
                let hi = self.x[[rows[k], feature]];
                if lo == hi || k < min_leaf || n - k < min_leaf {
                    continue;
                }
                let impurity = (k as f64 * gini(left_pos, k)
                    + (n - k) as f64 * gini(pos - left_pos, n - k))
                    / n as f64;
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    let mut threshold = (lo + hi) / F::lit(2.0);
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some(Best {
                        feature,
                        threshold,
                        impurity,
                        split_at: k,
                    });
                }
            }
        }
        let Some(b) = best else {
            return self.leaf(pos, n);
        };
        rows.sort_by(|&a, &c| {
            self.x[[a, b.feature]]
                .partial_cmp(&self.x[[c, b.feature]])
                .expect("finite features")
                .then(a.cmp(&c))
        });
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf { label: 0 });
        let (l, r) = rows.split_at_mut(b.split_at);
        let left = self.grow(l, rng);
        let right = self.grow(r, rng);
        self.nodes[at] = Node::Split {
            feature: b.feature,
            threshold: b.threshold,
            left,
            right,
        };
        at
    }
}

/// Grows one tree on `rows` (duplicates allowed).
pub fn fit_tree<F: Scalar>(
    x: ArrayView2<F>,
    y: &[u8],
    rows: &[usize],
    cfg: &ForestConfig,
    seed: u64,
) -> Result<DecisionTree<F>, ModelError> {
    if cfg.max_features == 0 || cfg.max_features > x.ncols() {
        return Err(ModelError::Config(format!(
            "max_features = {} with {} features",
            cfg.max_features,
            x.ncols()
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut b = Builder {
        x,
        y,
        cfg,
        nodes: Vec::new(),
    };
    let mut rows = rows.to_vec();
    b.grow(&mut rows, &mut rng);
    Ok(DecisionTree { nodes: b.nodes })
}

pub fn fit_random_forest<F: Scalar>(
    x: ArrayView2<F>,
    y: &[u8],
    cfg: &ForestConfig,
    seed: u64,
) -> Result<RandomForest<F>, ModelError> {
    if cfg.n_trees == 0 {
        return Err(ModelError::Config("n_estimators must be positive".into()));
    }
    let n = x.nrows();
    let trees = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let tree_seed = derive_seed(seed, ["tree".into(), (t as u64).into()]);
            let rows: Vec<usize> = if cfg.bootstrap {
                let mut rng = rng_from_seed(derive_seed(tree_seed, ["bootstrap".into()]));
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            fit_tree(x, y, &rows, cfg, tree_seed)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RandomForest { trees })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn single(max_features: usize, leaf: usize) -> ForestConfig {
        ForestConfig {
            n_trees: 1,
            max_features,
            min_samples_leaf: leaf,
            min_samples_split: 2,
            bootstrap: false,
        }
    }

    #[test]
    fn pure_labels_give_single_leaf_trees() {
        let x = array![[0.0_f64, 1.0], [1.0, 0.0], [2.0, 2.0], [3.0, 1.0]];
        let y = [1u8; 4];
        let cfg = ForestConfig {
            max_features: 2,
            n_trees: 7,
            ..ForestConfig::default()
        };
        let f = fit_random_forest(x.view(), &y, &cfg, 1).unwrap();
        assert!(f.trees.iter().all(|t| t.nodes.len() == 1));
        assert!(x.rows().into_iter().all(|r| f.score(r) == 1.0));
    }

    #[test]
    fn single_tree_recovers_separating_interval() {
        let x = Array2::from_shape_vec((8, 1), vec![0.5, 1.0, 1.7, 2.0, 3.1, 3.3, 4.0, 5.0]).unwrap();
        let y = [0u8, 0, 0, 0, 1, 1, 1, 1];
        let rows: Vec<usize> = (0..8).collect();
        let t = fit_tree(x.view(), &y, &rows, &single(1, 1), 0).unwrap();
        assert_eq!(t.thresholds(), vec![(0, 2.55)]);
    }

    #[test]
    fn min_leaf_blocks_small_children() {
        let x = Array2::from_shape_vec((6, 1), vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let y = [1u8, 0, 0, 0, 0, 0];
        let rows: Vec<usize> = (0..6).collect();
        let t = fit_tree(x.view(), &y, &rows, &single(1, 2), 0).unwrap();
        for (_, thr) in t.thresholds() {
            assert!(thr > 1.0);
        }
        let t = fit_tree(x.view(), &y, &rows, &single(1, 1), 0).unwrap();
        assert_eq!(t.thresholds()[0], (0, 0.5));
    }

    #[test]
    fn votes_sum_to_tree_count() {
        let x = Array2::from_shape_fn((40, 3), |(i, j)| ((i * 7 + j * 3) % 11) as f64);
        let y: Vec<u8> = (0..40).map(|i| u8::from(i % 3 == 0)).collect();
        let cfg = ForestConfig {
            n_trees: 9,
            max_features: 2,
            min_samples_leaf: 1,
            min_samples_split: 2,
            bootstrap: true,
        };
        let f = fit_random_forest(x.view(), &y, &cfg, 4).unwrap();
        for r in x.rows() {
            let s = f.score(r);
            assert!((0.0..=1.0).contains(&s));
            assert_eq!(f.votes(r) + f.trees.iter().filter(|t| t.predict(r) == 0).count(), 9);
        }
    }

    #[test]
    fn too_many_features_is_a_config_error() {
        let x = array![[0.0_f64], [1.0]];
        let r = fit_random_forest(x.view(), &[0, 1], &ForestConfig::default(), 0);
        assert!(matches!(r, Err(ModelError::Config(_))));
    }
}
