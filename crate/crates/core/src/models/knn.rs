//! k-nearest-neighbor majority vote.

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::neighbors::nearest;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn<F> {
    pub x: Array2<F>,
    pub y: Vec<u8>,
    pub k: usize,
}

pub fn fit_knn<F: Scalar>(x: ArrayView2<F>, y: &[u8], k: usize) -> Result<Knn<F>, ModelError> {
    if k == 0 || k > x.nrows() {
        return Err(ModelError::Size(format!(
            "n_neighbors = {k} with {} training rows",
            x.nrows()
        )));
    }
    Ok(Knn {
        x: x.as_standard_layout().into_owned(),
        y: y.to_vec(),
        k,
    })
}

impl<F: Scalar> Knn<F> {
    /// Share of the k neighbors labeled 1.
    pub fn score(&self, row: ArrayView1<F>) -> F {
        let q = row.to_vec();
        let nn = nearest(self.x.view(), &q, None, self.k, None);
        let ones = nn.iter().filter(|&&i| self.y[i] > 0).count();
        F::from_count(ones) / F::from_count(self.k)
    }

    /// Smallest winning vote share; an even split falls below it.
    pub fn threshold(&self) -> F {
        F::from_count(self.k / 2 + 1) / F::from_count(self.k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_neighbor_memorizes() {
        let x = array![[0.0_f64, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let y = [0u8, 1, 1, 0];
        let m = fit_knn(x.view(), &y, 1).unwrap();
        for (row, &label) in x.rows().into_iter().zip(&y) {
            assert_eq!(u8::from(m.score(row) >= m.threshold()), label);
        }
    }

    #[test]
    fn even_split_goes_to_zero() {
        let x = array![[0.0_f64], [1.0], [2.0], [3.0]];
        let m = fit_knn(x.view(), &[1, 0, 1, 0], 4).unwrap();
        assert_eq!(m.score(array![1.5].view()), 0.5);
        assert!(m.score(array![1.5].view()) < m.threshold());
    }

    #[test]
    fn matches_vote_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let x = ndarray::Array2::from_shape_fn((30, 2), |_| rng.gen_range(0.0..1.0_f64));
        let y: Vec<u8> = (0..30).map(|_| rng.gen_range(0..2)).collect();
        let m = fit_knn(x.view(), &y, 12).unwrap();
        for _ in 0..50 {
            let q = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            let mut d: Vec<(f64, usize)> = (0..30)
                .map(|i| ((x[[i, 0]] - q[0]).powi(2) + (x[[i, 1]] - q[1]).powi(2), i))
                .collect();
            d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let ones = d[..12].iter().filter(|p| y[p.1] == 1).count();
            let want = u8::from(ones > 6);
            let qa = ndarray::arr1(&q);
            assert_eq!(u8::from(m.score(qa.view()) >= m.threshold()), want);
        }
        assert!(fit_knn(x.view(), &y, 31).is_err());
    }
}
