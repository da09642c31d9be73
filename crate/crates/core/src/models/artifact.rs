//! Versioned JSON model documents.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::prepare::model_input;
use super::{Family, Hyperparams, ModelError, TrainedModel};
use crate::dataset::{ScalerParams, FEATURE_NAMES};
use crate::scalar::Scalar;

pub const ARTIFACT_VERSION: u32 = 1;

/// A fitted model together with everything needed to score raw rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact<F> {
    pub format_version: u32,
    pub family: Family,
    pub hyperparameters: Hyperparams,
    pub resampler: String,
    pub features: Vec<String>,
    /// Training-partition scaler. Applied to inputs only for families
    /// trained on standardized features.
    pub scaler: ScalerParams<F>,
    pub scaled_inputs: bool,
    pub seed: u64,
    pub model: TrainedModel<F>,
}

impl<F: Scalar + Serialize + DeserializeOwned> ModelArtifact<F> {
    pub fn new(
        hyperparameters: Hyperparams,
        resampler: &str,
        scaler: ScalerParams<F>,
        seed: u64,
        model: TrainedModel<F>,
    ) -> Self {
        let family = model.family();
        Self {
            format_version: ARTIFACT_VERSION,
            family,
            hyperparameters,
            resampler: resampler.to_string(),
            features: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            scaler,
            scaled_inputs: family.needs_scaling(),
            seed,
            model,
        }
    }

    /// Labels for raw feature rows.
    pub fn predict_raw(&self, x_raw: ArrayView2<F>) -> Vec<u8> {
        self.model.predict_batch(self.model_input(x_raw).view())
    }

    pub fn model_input(&self, x_raw: ArrayView2<F>) -> Array2<F> {
        model_input(self.family, &self.scaler, x_raw)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("artifact serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let a: Self = serde_json::from_str(text)
            .map_err(|e| ModelError::Data(format!("model artifact: {e}")))?;
        if a.format_version != ARTIFACT_VERSION {
            return Err(ModelError::Data(format!(
                "model artifact version {} is not supported (expected {ARTIFACT_VERSION})",
                a.format_version
            )));
        }
        if a.family != a.model.family() {
            return Err(ModelError::Data("model artifact family does not match its model".into()));
        }
        Ok(a)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(self.to_json().as_bytes())?;
        w.write_all(b"\n")?;
        w.flush()
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let mut text = String::new();
        std::io::Read::read_to_string(
            &mut BufReader::new(
                File::open(path).map_err(|e| ModelError::Data(format!("{}: {e}", path.display())))?,
            ),
            &mut text,
        )
        .map_err(|e| ModelError::Data(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{fit, ModelSpec};
    use ndarray::Array2;

    #[test]
    fn every_family_round_trips_through_json() {
        let x = Array2::from_shape_fn((30, 3), |(i, j)| ((i * 5 + j * 3) % 7) as f64 + (i % 2) as f64 * 4.0);
        let y: Vec<u8> = (0..30).map(|i| (i % 2) as u8).collect();
        for f in Family::ALL {
            let spec = match f {
                Family::Rf => ModelSpec::tuned(f).with("max_features", 2).with("n_estimators", 5),
                Family::Gbt => ModelSpec::tuned(f).with("n_estimators", 5),
                Family::Mlp => ModelSpec::tuned(f).with("hidden_layer_size", 4),
                Family::Knn => ModelSpec::tuned(f).with("n_neighbors", 3),
                _ => ModelSpec::tuned(f),
            };
            let scaler = ScalerParams::fit(x.view());
            let m = fit(&spec, scaler.transform(x.view()).view(), &y, 7).unwrap();
            let a = ModelArtifact::new(spec.params.clone(), "none", scaler, 7, m);
            let back = ModelArtifact::<f64>::from_json(&a.to_json()).unwrap();
            assert_eq!(back, a, "{f}");
            assert_eq!(back.predict_raw(x.view()), a.predict_raw(x.view()));
        }
    }

    #[test]
    fn wrong_version_is_rejected() {
        let x = Array2::from_shape_fn((4, 1), |(i, _)| i as f64);
        let m = fit(&ModelSpec::tuned(Family::Gnb), x.view(), &[0, 0, 1, 1], 0).unwrap();
        let a = ModelArtifact::new(Hyperparams::new(), "none", ScalerParams::identity(1), 0, m);
        let text = a.to_json().replace("\"format_version\": 1", "\"format_version\": 99");
        assert!(ModelArtifact::<f64>::from_json(&text).is_err());
    }
}
