//! Scaling and resampling of a training partition ahead of a fit.
//!
//! Resamplers always run on standardized features so that neighbor
//! distances weigh every column alike. Families that train on raw features
//! get their original rows back untouched and only the synthetic rows
//! mapped back through the scaler.

use ndarray::{concatenate, Array2, ArrayView2, Axis};

use super::{Family, ModelError};
use crate::dataset::ScalerParams;
use crate::resample::{LabeledMatrix, Resampler};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct PreparedTraining<F> {
    pub family: Family,
    /// Fitted on the training partition before resampling.
    pub scaler: ScalerParams<F>,
    /// Model-space training features.
    pub x: Array2<F>,
    pub y: Vec<u8>,
    pub synthetic: usize,
    pub removed: usize,
}

impl<F: Scalar> PreparedTraining<F> {
    /// Maps raw rows into the space the model was trained in.
    pub fn model_input(&self, x_raw: ArrayView2<F>) -> Array2<F> {
        model_input(self.family, &self.scaler, x_raw)
    }
}

pub fn model_input<F: Scalar>(
    family: Family,
    scaler: &ScalerParams<F>,
    x_raw: ArrayView2<F>,
) -> Array2<F> {
    if family.needs_scaling() {
        scaler.transform(x_raw)
    } else {
        x_raw.to_owned()
    }
}

pub fn prepare_training<F: Scalar>(
    family: Family,
    x_raw: ArrayView2<F>,
    y: &[u8],
    resampler: Resampler,
    seed: u64,
) -> Result<PreparedTraining<F>, ModelError> {
    let n = x_raw.nrows();
    let scaler = ScalerParams::fit(x_raw);
    let z = scaler.transform(x_raw);
    let data = LabeledMatrix::new(z, y.to_vec())?;
    let out = resampler.apply(&data, seed)?;
    let removed_originals = out.removed_rows.iter().filter(|&&i| i < n).count();
    let kept = n - removed_originals;
    let synthetic = out.y.len() - kept;
    let x = if family.needs_scaling() {
        out.x
    } else {
        let mut keep = vec![true; n];
        for &i in out.removed_rows.iter().filter(|&&i| i < n) {
            keep[i] = false;
        }
        let rows: Vec<usize> = (0..n).filter(|&i| keep[i]).collect();
        let originals = x_raw.select(Axis(0), &rows);
        let synth = scaler.inverse_transform(out.x.slice(ndarray::s![kept.., ..]));
        concatenate(Axis(0), &[originals.view(), synth.view()]).expect("equal widths")
    };
    Ok(PreparedTraining {
        family,
        scaler,
        x,
        y: out.y,
        synthetic,
        removed: out.removed_rows.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn data() -> (Array2<f64>, Vec<u8>) {
        let x = Array2::from_shape_fn((40, 2), |(i, j)| {
            (i as f64 * 37.0 + j as f64 * 11.0) % 23.0 * (1.0 + 99.0 * j as f64)
        });
        let y = (0..40).map(|i| u8::from(i % 5 == 0)).collect();
        (x, y)
    }

    #[test]
    fn raw_families_keep_original_rows_exactly() {
        let (x, y) = data();
        let p = prepare_training(Family::Rf, x.view(), &y, Resampler::Smote, 3).unwrap();
        assert_eq!(p.x.slice(ndarray::s![..40, ..]), x);
        assert_eq!(p.synthetic, 24);
        assert_eq!(p.y.iter().filter(|&&v| v == 1).count(), 32);
    }

    #[test]
    fn scaled_and_raw_paths_agree_up_to_the_scaler() {
        let (x, y) = data();
        let raw = prepare_training(Family::Lr, x.view(), &y, Resampler::SmoteEnn, 5).unwrap();
        let scaled = prepare_training(Family::Svm, x.view(), &y, Resampler::SmoteEnn, 5).unwrap();
        assert_eq!(raw.y, scaled.y);
        let back = scaled.scaler.inverse_transform(scaled.x.view());
        for (a, b) in back.iter().zip(raw.x.iter()) {
            assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn none_is_identity_for_raw_families() {
        let (x, y) = data();
        let p = prepare_training(Family::Gbt, x.view(), &y, Resampler::None, 0).unwrap();
        assert_eq!(p.x, x);
        assert_eq!((p.synthetic, p.removed), (0, 0));
    }
}
