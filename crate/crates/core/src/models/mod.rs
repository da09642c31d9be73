//! Binary classifiers with a shared fit/predict contract, hyperparameter
//! grids and cross-validated grid search.
//!
//! Every family maps a row to a real score; the label is 1 exactly when the
//! score reaches the family's threshold. Probabilistic families (LR, MLP, RF,
//! GBT) score a probability against 0.5, SVM and Gaussian NB score a margin
//! against 0, and KNN scores its vote share against the smallest strict
//! majority of `k`.

pub mod artifact;
pub mod bayes;
pub mod boosting;
pub mod forest;
pub mod grid;
pub mod knn;
pub mod logistic;
pub mod mlp;
pub mod params;
pub mod prepare;
pub mod svm;

use ndarray::{Array1, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

pub use artifact::{ModelArtifact, ARTIFACT_VERSION};
pub use bayes::{fit_gaussian_nb, GaussianNb};
pub use boosting::{fit_gradient_boosting, BoostConfig, Booster};
pub use forest::{fit_random_forest, fit_tree, DecisionTree, ForestConfig, RandomForest};
pub use grid::{grid_search_cv, GridMode, GridResult, GridSpec};
pub use knn::{fit_knn, Knn};
pub use logistic::{fit_logistic, Logistic};
pub use mlp::{fit_mlp, Activation, Mlp, MlpConfig, Solver};
pub use params::{Family, Hyperparams, ModelSpec, Param};
pub use prepare::{prepare_training, PreparedTraining};
pub use svm::{fit_svm, solve_smo, SmoSolution, Svm};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("size error: {0}")]
    Size(String),
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("training diverged: {0}")]
    Diverged(String),
    #[error("no convergence after {iterations} iterations: {detail}")]
    Convergence { iterations: usize, detail: String },
    #[error("data error: {0}")]
    Data(String),
    #[error(transparent)]
    Resample(#[from] crate::resample::ResampleError),
    #[error(transparent)]
    Dataset(#[from] crate::dataset::DatasetError),
}

/// Rejects empty, ragged, non-finite or non-binary training data.
pub fn check_inputs<F: Scalar>(x: ArrayView2<F>, y: &[u8]) -> Result<(), ModelError> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(ModelError::Data("empty training matrix".into()));
    }
    if x.nrows() != y.len() {
        return Err(ModelError::Data(format!(
            "{} rows but {} labels",
            x.nrows(),
            y.len()
        )));
    }
    if let Some(((r, c), v)) = x.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(ModelError::Data(format!("non-finite value {v} at row {r}, column {c}")));
    }
    if let Some(i) = y.iter().position(|&l| l > 1) {
        return Err(ModelError::Data(format!("label {} at row {i} is not 0 or 1", y[i])));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "model", rename_all = "lowercase")]
pub enum TrainedModel<F> {
    Lr(Logistic<F>),
    Knn(Knn<F>),
    Svm(Svm<F>),
    Mlp(Mlp<F>),
    Gnb(GaussianNb<F>),
    Rf(RandomForest<F>),
    Gbt(Booster<F>),
}

impl<F: Scalar> TrainedModel<F> {
    pub fn family(&self) -> Family {
        match self {
            TrainedModel::Lr(_) => Family::Lr,
            TrainedModel::Knn(_) => Family::Knn,
            TrainedModel::Svm(_) => Family::Svm,
            TrainedModel::Mlp(_) => Family::Mlp,
            TrainedModel::Gnb(_) => Family::Gnb,
            TrainedModel::Rf(_) => Family::Rf,
            TrainedModel::Gbt(_) => Family::Gbt,
        }
    }

    pub fn predict_score(&self, row: ArrayView1<F>) -> F {
        match self {
            TrainedModel::Lr(m) => m.score(row),
            TrainedModel::Knn(m) => m.score(row),
            TrainedModel::Svm(m) => m.score(row),
            TrainedModel::Mlp(m) => m.score(row),
            TrainedModel::Gnb(m) => m.score(row),
            TrainedModel::Rf(m) => m.score(row),
            TrainedModel::Gbt(m) => m.score(row),
        }
    }

    pub fn threshold(&self) -> F {
        match self {
            TrainedModel::Knn(m) => m.threshold(),
            TrainedModel::Svm(_) | TrainedModel::Gnb(_) => F::zero(),
            _ => F::lit(0.5),
        }
    }

    pub fn predict(&self, row: ArrayView1<F>) -> u8 {
        u8::from(self.predict_score(row) >= self.threshold())
    }

    pub fn predict_batch(&self, x: ArrayView2<F>) -> Vec<u8> {
        x.axis_iter(Axis(0)).map(|r| self.predict(r)).collect()
    }

    pub fn score_batch(&self, x: ArrayView2<F>) -> Array1<F> {
        x.axis_iter(Axis(0)).map(|r| self.predict_score(r)).collect()
    }
}

/// Fits `spec` on `(x, y)`. Every family is a pure function of its inputs
/// and `seed`.
pub fn fit<F: Scalar>(
    spec: &ModelSpec,
    x: ArrayView2<F>,
    y: &[u8],
    seed: u64,
) -> Result<TrainedModel<F>, ModelError> {
    check_inputs(x, y)?;
    Ok(match spec.family {
        Family::Lr => TrainedModel::Lr(fit_logistic(x, y, spec.real("C")?)?),
        Family::Knn => TrainedModel::Knn(fit_knn(x, y, spec.count("n_neighbors")?)?),
        Family::Svm => TrainedModel::Svm(fit_svm(x, y, spec.real("C")?, spec.real("gamma")?)?),
        Family::Mlp => {
            let cfg = MlpConfig {
                hidden: spec.count("hidden_layer_size")?,
                activation: spec.text("activation")?.parse()?,
                solver: spec.text("solver")?.parse()?,
                learning_rate: spec.real("learning_rate_init")?,
                alpha: spec.real("alpha")?,
                ..MlpConfig::default()
            };
            TrainedModel::Mlp(fit_mlp(x, y, &cfg, seed)?)
        }
        Family::Gnb => TrainedModel::Gnb(fit_gaussian_nb(x, y, spec.real("var_smoothing")?)?),
        Family::Rf => {
            let cfg = ForestConfig {
                n_trees: spec.count("n_estimators")?,
                max_features: spec.count("max_features")?,
                min_samples_leaf: spec.count("min_samples_leaf")?,
                min_samples_split: spec.count("min_samples_split")?,
                bootstrap: true,
            };
            TrainedModel::Rf(fit_random_forest(x, y, &cfg, seed)?)
        }
        Family::Gbt => {
            let cfg = BoostConfig {
                n_rounds: spec.count("n_estimators")?,
                learning_rate: spec.real("learning_rate")?,
                max_depth: spec.count("max_depth")?,
                gamma: spec.real("gamma")?,
                lambda: spec.real("reg_lambda")?,
                subsample: spec.real("subsample")?,
                colsample: spec.real("colsample_bytree")?,
            };
            TrainedModel::Gbt(fit_gradient_boosting(x, y, &cfg, seed)?)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn normal_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
        let u1: f64 = 1.0 - rand::Rng::gen::<f64>(rng);
        let u2: f64 = rand::Rng::gen(rng);
        let r = (-2.0 * u1.ln()).sqrt();
        let t = std::f64::consts::TAU * u2;
        (r * t.cos(), r * t.sin())
    }

    fn blobs(n: usize, seed: u64) -> (Array2<f64>, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Array2::zeros((n, 2));
        let mut y = vec![0u8; n];
        for i in 0..n {
            let (a, b) = normal_pair(&mut rng);
            let c = if i % 2 == 0 { -2.0 } else { 2.0 };
            x[[i, 0]] = c + a;
            x[[i, 1]] = c + b;
            y[i] = u8::from(i % 2 == 1);
        }
        (x, y)
    }

    fn small_spec(f: Family) -> ModelSpec {
        let s = ModelSpec::tuned(f);
        match f {
            Family::Rf => s.with("max_features", 2).with("n_estimators", 15),
            Family::Gbt => s.with("n_estimators", 20),
            Family::Mlp => s.with("hidden_layer_size", 16).with("learning_rate_init", 0.01),
            _ => s,
        }
    }

    #[test]
    fn predict_agrees_with_thresholded_score() {
        let (x, y) = blobs(120, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let probe = Array2::from_shape_fn((300, 2), |_| rand::Rng::gen_range(&mut rng, -5.0..5.0));
        for f in Family::ALL {
            let m = fit(&small_spec(f), x.view(), &y, 11).unwrap();
            for r in probe.axis_iter(Axis(0)) {
                let s = m.predict_score(r);
                assert_eq!(m.predict(r), u8::from(s >= m.threshold()), "{f}");
            }
        }
    }

    #[test]
    fn fits_are_deterministic() {
        let (x, y) = blobs(80, 5);
        for f in Family::ALL {
            let a = fit(&small_spec(f), x.view(), &y, 2).unwrap();
            let b = fit(&small_spec(f), x.view(), &y, 2).unwrap();
            assert_eq!(a, b, "{f}");
        }
    }

    #[test]
    fn bad_inputs_are_data_errors() {
        let spec = ModelSpec::tuned(Family::Gnb);
        let x = array![[1.0, f64::NAN], [0.0, 1.0]];
        assert!(matches!(fit(&spec, x.view(), &[0, 1], 0), Err(ModelError::Data(_))));
        let x = array![[1.0, 2.0], [0.0, 1.0]];
        assert!(matches!(fit(&spec, x.view(), &[0], 0), Err(ModelError::Data(_))));
        assert!(matches!(fit(&spec, x.view(), &[0, 2], 0), Err(ModelError::Data(_))));
    }
}
