//! Exhaustive re-implementations of the hybrid resamplers and the
//! neighbour search, compared on small seeded 2-D datasets.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shotlab::neighbors::knn_query;
use shotlab::resample::{smote, smote_enn, smote_tomek, LabeledMatrix, ENN_K, SMOTE_K};

fn dataset(seed: u64) -> LabeledMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(14..=20);
    let minority = rng.gen_range(SMOTE_K + 1..n / 2);
    let mut y = vec![0u8; n];
    for i in rand::seq::index::sample(&mut rng, n, minority) {
        y[i] = 1;
    }
    let x = Array2::from_shape_fn((n, 2), |_| rng.gen_range(-1.0..1.0));
    LabeledMatrix::new(x, y).unwrap()
}

fn dist(x: &Array2<f64>, a: usize, b: usize) -> f64 {
    x.row(a).iter().zip(x.row(b).iter()).map(|(p, q)| (p - q) * (p - q)).sum()
}

fn brute_neighbors(x: &Array2<f64>, i: usize, k: usize) -> Vec<usize> {
    let mut all: Vec<usize> = (0..x.nrows()).filter(|&j| j != i).collect();
    all.sort_by(|&a, &b| dist(x, i, a).partial_cmp(&dist(x, i, b)).unwrap().then(a.cmp(&b)));
    all.truncate(k);
    all
}

#[test]
fn neighbor_search_matches_sorting_everything() {
    for seed in 0..100 {
        let d = dataset(seed);
        for i in 0..d.len() {
            for k in 1..4 {
                assert_eq!(knn_query(d.x.view(), i, k, true).unwrap(), brute_neighbors(&d.x, i, k));
            }
        }
    }
}

#[test]
fn smote_tomek_matches_oracle() {
    for seed in 0..100 {
        let data = dataset(seed);
        let over = smote(&data, SMOTE_K, seed).unwrap();
        let x = &over.x;
        let n = over.y.len();
        let mut expect = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if over.y[a] == over.y[b] {
                    continue;
                }
                let dab = dist(x, a, b);
                let mutual = (0..n)
                    .filter(|&c| c != a && c != b)
                    .all(|c| dist(x, a, c) >= dab && dist(x, b, c) >= dab);
                if mutual {
                    expect.push(if over.y[a] == 0 { a } else { b });
                }
            }
        }
        expect.sort_unstable();
        let got = smote_tomek(&data, seed).unwrap();
        assert_eq!(got.removed_rows, expect, "dataset {seed}");
        assert_eq!(got.y.len(), n - expect.len());
    }
}

#[test]
fn smote_enn_matches_oracle() {
    for seed in 0..100 {
        let data = dataset(seed);
        let over = smote(&data, SMOTE_K, seed).unwrap();
        let expect: Vec<usize> = (0..over.y.len())
            .filter(|&i| {
                let against = brute_neighbors(&over.x, i, ENN_K)
                    .iter()
                    .filter(|&&j| over.y[j] != over.y[i])
                    .count();
                2 * against > ENN_K
            })
            .collect();
        let got = smote_enn(&data, seed).unwrap();
        assert_eq!(got.removed_rows, expect, "dataset {seed}");
        let retained_synthetic = got.synthetic_rows.len();
        let removed_synthetic = expect.iter().filter(|&&i| i >= data.len()).count();
        assert_eq!(retained_synthetic + removed_synthetic, over.synthetic_rows.len());
    }
}
