//! Hyperparameter grids and k-fold grid search scored by F1.

use std::fmt;
use std::str::FromStr;

use ndarray::{ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::prepare::{prepare_training, PreparedTraining};
use super::{fit, Family, ModelError, ModelSpec, Param};
use crate::dataset::{fold_complement, kfold_indices};
use crate::evalreport::f1_score;
use crate::resample::Resampler;
use crate::scalar::Scalar;
use crate::seed::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridMode {
    Full,
    Reduced,
    FixedBest,
}

impl GridMode {
    pub fn token(self) -> &'static str {
        match self {
            GridMode::Full => "full",
            GridMode::Reduced => "reduced",
            GridMode::FixedBest => "fixed-best",
        }
    }
}

impl fmt::Display for GridMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for GridMode {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [GridMode::Full, GridMode::Reduced, GridMode::FixedBest]
            .into_iter()
            .find(|m| m.token() == s)
            .ok_or_else(|| ModelError::Config(format!("unknown grid mode `{s}`")))
    }
}

/// Candidate values per hyperparameter. Names not listed keep the tuned
/// defaults of [`ModelSpec::tuned`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub family: Family,
    pub axes: Vec<(String, Vec<Param>)>,
}

fn axis<P: Into<Param> + Clone>(name: &str, values: &[P]) -> (String, Vec<Param>) {
    (name.to_string(), values.iter().cloned().map(Into::into).collect())
}

/// `count` values evenly spaced in log10 from `10^start` to `10^stop`.
pub fn logspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![10f64.powf(start)];
    }
    (0..count)
        .map(|i| 10f64.powf(start + (stop - start) * i as f64 / (count - 1) as f64))
        .collect()
}

impl GridSpec {
    pub fn new(family: Family, axes: Vec<(String, Vec<Param>)>) -> Self {
        Self { family, axes }
    }

    /// The complete search space.
    pub fn full(family: Family) -> Self {
        let axes = match family {
            Family::Lr => vec![axis("C", &[1e-3, 1e-2, 1e-1, 1e0, 1e1, 1e2, 1e3])],
            Family::Knn => vec![axis("n_neighbors", &(1..=50).collect::<Vec<i64>>())],
            Family::Svm => vec![
                axis("C", &[0.1, 1.0, 10.0, 100.0, 1000.0]),
                axis("gamma", &[1.0, 0.1, 0.01, 0.001, 0.0001]),
            ],
            Family::Mlp => vec![
                axis("learning_rate_init", &[0.001, 0.01, 0.1]),
                axis("activation", &["logistic", "tanh", "relu"]),
                axis("solver", &["sgd", "adam"]),
                axis("alpha", &[0.0001, 0.001]),
            ],
            Family::Gnb => vec![axis("var_smoothing", &logspace(0.0, -9.0, 100))],
            Family::Rf => vec![
                axis("max_features", &(2..=10).collect::<Vec<i64>>()),
                axis("min_samples_leaf", &[3i64, 5, 8]),
                axis("min_samples_split", &[4i64, 8, 12]),
            ],
            Family::Gbt => vec![
                axis("gamma", &[0.5, 1.0, 1.5]),
                axis("subsample", &[0.6, 0.8]),
                axis("colsample_bytree", &[0.6, 0.8, 1.0]),
                axis("max_depth", &[3i64, 4, 5]),
            ],
        };
        Self { family, axes }
    }

    /// A small subset of [`GridSpec::full`] that still contains the tuned
    /// point.
    pub fn reduced(family: Family) -> Self {
        let axes = match family {
            Family::Lr => vec![axis("C", &[1e-1, 1e1, 1e2])],
            Family::Knn => vec![axis("n_neighbors", &[4i64, 8, 12, 20])],
            Family::Svm => vec![axis("C", &[1.0, 10.0]), axis("gamma", &[0.1, 0.01])],
            Family::Mlp => vec![
                axis("learning_rate_init", &[0.001, 0.01]),
                axis("activation", &["tanh", "relu"]),
            ],
            Family::Gnb => vec![axis("var_smoothing", &[1e-9, 1e-5, 0.002, 0.1])],
            Family::Rf => vec![
                axis("max_features", &[3i64, 5]),
                axis("min_samples_leaf", &[3i64, 8]),
            ],
            Family::Gbt => vec![axis("gamma", &[0.5, 1.5]), axis("max_depth", &[3i64, 5])],
        };
        Self { family, axes }
    }

    /// The tuned point alone.
    pub fn fixed_best(family: Family) -> Self {
        Self {
            family,
            axes: Vec::new(),
        }
    }

    pub fn for_mode(family: Family, mode: GridMode) -> Self {
        match mode {
            GridMode::Full => Self::full(family),
            GridMode::Reduced => Self::reduced(family),
            GridMode::FixedBest => Self::fixed_best(family),
        }
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|(_, v)| v.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every grid point in row-major order (the last axis varies fastest).
    pub fn points(&self) -> Vec<ModelSpec> {
        let mut out = vec![ModelSpec::tuned(self.family)];
        for (name, values) in &self.axes {
            out = out
                .into_iter()
                .flat_map(|s| values.iter().map(move |v| s.clone().with(name, v.clone())))
                .collect();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub spec: ModelSpec,
    pub fold_f1: Vec<f64>,
    pub mean_f1: f64,
    /// Folds whose fit failed and scored 0.
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub family: Family,
    pub resampler: String,
    pub best_index: usize,
    pub points: Vec<GridPoint>,
}

impl GridResult {
    pub fn best(&self) -> &GridPoint {
        &self.points[self.best_index]
    }
}

/// Index of the largest score; ties go to the earliest.
pub fn argmax_first(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Scores every grid point by mean F1 over `k` folds. Within each fold the
/// training part alone is scaled and resampled; the validation part is
/// only transformed.
pub fn grid_search_cv<F: Scalar>(
    grid: &GridSpec,
    x_raw: ArrayView2<F>,
    y: &[u8],
    k: usize,
    resampler: Resampler,
    seed: u64,
) -> Result<GridResult, ModelError> {
    if grid.is_empty() {
        return Err(ModelError::Config("empty hyperparameter grid".into()));
    }
    super::check_inputs(x_raw, y)?;
    let n = x_raw.nrows();
    let folds = kfold_indices(n, k, derive_seed(seed, ["folds".into()]))?;
    let prepared = folds
        .iter()
        .enumerate()
        .map(|(f, val)| {
            let train = fold_complement(n, val);
            let xt = x_raw.select(Axis(0), &train);
            let yt: Vec<u8> = train.iter().map(|&i| y[i]).collect();
            let rs = derive_seed(seed, ["resample".into(), (f as u64).into()]);
            let p = prepare_training(grid.family, xt.view(), &yt, resampler, rs)?;
            let xv = p.model_input(x_raw.select(Axis(0), val).view());
            let yv: Vec<u8> = val.iter().map(|&i| y[i]).collect();
            Ok((p, xv, yv))
        })
        .collect::<Result<Vec<(PreparedTraining<F>, _, _)>, ModelError>>()?;

    let specs = grid.points();
    let cells: Vec<(usize, usize)> = (0..specs.len())
        .flat_map(|p| (0..folds.len()).map(move |f| (p, f)))
        .collect();
    let scores: Vec<Option<f64>> = cells
        .par_iter()
        .map(|&(p, f)| {
            let (prep, xv, yv) = &prepared[f];
            let fs = derive_seed(seed, ["fit".into(), (f as u64).into()]);
            match fit(&specs[p], prep.x.view(), &prep.y, fs) {
                Ok(m) => Some(f1_score(yv, &m.predict_batch(xv.view())).unwrap_or(0.0)),
                Err(e) => {
                    log::warn!("{} fold {f}: {e}", specs[p].describe());
                    None
                }
            }
        })
        .collect();

    let k = folds.len();
    let points: Vec<GridPoint> = specs
        .into_iter()
        .enumerate()
        .map(|(p, spec)| {
            let row = &scores[p * k..(p + 1) * k];
            let fold_f1: Vec<f64> = row.iter().map(|s| s.unwrap_or(0.0)).collect();
            GridPoint {
                spec,
                mean_f1: fold_f1.iter().sum::<f64>() / k as f64,
                fold_f1,
                failures: row.iter().filter(|s| s.is_none()).count(),
            }
        })
        .collect();
    let means: Vec<f64> = points.iter().map(|p| p.mean_f1).collect();
    Ok(GridResult {
        family: grid.family,
        resampler: resampler.token().to_string(),
        best_index: argmax_first(&means),
        points,
    })
}
