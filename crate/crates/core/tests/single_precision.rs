use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shotlab::models::{fit, prepare_training, Family, ModelSpec};
use shotlab::resample::Resampler;
use shotlab::{LabeledMatrix32, TrainedModel32};

fn blobs32(n: usize, seed: u64) -> LabeledMatrix32 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    let x = Array2::from_shape_fn((n, 2), |(i, j)| {
        let c = if j == 0 { if y[i] == 1 { 3.0 } else { -3.0 } } else { 0.0 };
        c + rng.gen_range(-1.5f32..1.5)
    });
    LabeledMatrix32::new(x, y).unwrap()
}

#[test]
fn every_family_trains_in_single_precision() {
    let train = blobs32(200, 1);
    let test = blobs32(200, 2);
    for family in Family::ALL {
        let mut spec = ModelSpec::tuned(family);
        if family == Family::Rf {
            spec = spec.with("max_features", 2i64);
        }
        let prep = prepare_training(family, train.x.view(), &train.y, Resampler::Smote, 3).unwrap();
        let m: TrainedModel32 = fit(&spec, prep.x.view(), &prep.y, 4).unwrap();
        let pred = m.predict_batch(prep.model_input(test.x.view()).view());
        let correct = pred.iter().zip(&test.y).filter(|(p, t)| p == t).count();
        assert!(correct >= 190, "{family}: {correct}/200");
    }
}
