//! Gaussian naive Bayes.

use ndarray::{Array1, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb<F> {
    /// Indexed by class label.
    pub mean: [Array1<F>; 2],
    pub var: [Array1<F>; 2],
    pub log_prior: [F; 2],
    pub epsilon: F,
}

fn column_moments<F: Scalar>(x: ArrayView2<F>) -> (Array1<F>, Array1<F>) {
    let n = F::from_count(x.nrows());
    let mean = x.sum_axis(Axis(0)) / n;
    let var = x
        .axis_iter(Axis(1))
        .zip(mean.iter())
        .map(|(c, &m)| c.iter().map(|&v| (v - m) * (v - m)).sum::<F>() / n)
        .collect();
    (mean, var)
}

/// Per-class Gaussian fit; every variance is widened by
/// `var_smoothing * max column variance`.
pub fn fit_gaussian_nb<F: Scalar>(
    x: ArrayView2<F>,
    y: &[u8],
    var_smoothing: f64,
) -> Result<GaussianNb<F>, ModelError> {
    let idx: [Vec<usize>; 2] = [0u8, 1].map(|c| (0..y.len()).filter(|&i| y[i] == c).collect());
    if idx[0].is_empty() || idx[1].is_empty() {
        return Err(ModelError::SingleClass);
    }
    let (_, all_var) = column_moments(x);
    let epsilon = F::lit(var_smoothing) * all_var.iter().copied().fold(F::zero(), F::max);
    let n = F::from_count(y.len());
    let fit = |c: usize| {
        let (m, v) = column_moments(x.select(Axis(0), &idx[c]).view());
        (m, v + epsilon)
    };
    let (m0, v0) = fit(0);
    let (m1, v1) = fit(1);
    Ok(GaussianNb {
        mean: [m0, m1],
        var: [v0, v1],
        log_prior: [0, 1].map(|c| (F::from_count(idx[c].len()) / n).ln()),
        epsilon,
    })
}

impl<F: Scalar> GaussianNb<F> {
    /// Joint log-likelihood `log p(c) + log p(x | c)`.
    pub fn joint_log_likelihood(&self, row: ArrayView1<F>, c: usize) -> F {
        let two_pi = F::lit(std::f64::consts::TAU);
        let half = F::lit(0.5);
        let mut s = self.log_prior[c];
        for ((&v, &m), &var) in row.iter().zip(&self.mean[c]).zip(&self.var[c]) {
            s -= half * (two_pi * var).ln() + half * (v - m) * (v - m) / var;
        }
        s
    }

    /// Log-posterior difference between class 1 and class 0.
    pub fn score(&self, row: ArrayView1<F>) -> F {
        self.joint_log_likelihood(row, 1) - self.joint_log_likelihood(row, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn equal_distributions_follow_prior() {
        let x = array![[0.0_f64], [1.0], [0.0], [1.0], [0.0], [1.0]];
        let m = fit_gaussian_nb(x.view(), &[0, 0, 0, 0, 1, 1], 1e-9).unwrap();
        assert!(m.score(array![0.5].view()) < 0.0);
        let m = fit_gaussian_nb(x.view(), &[1, 1, 1, 1, 0, 0], 1e-9).unwrap();
        assert!(m.score(array![0.5].view()) > 0.0);
    }

    #[test]
    fn four_point_closed_form() {
        let x = array![[0.0_f64], [2.0], [4.0], [8.0]];
        let y = [0u8, 0, 1, 1];
        let vs = 0.01;
        let m = fit_gaussian_nb(x.view(), &y, vs).unwrap();
        // overall variance: mean 3.5, var = (12.25+2.25+0.25+20.25)/4 = 8.75
        let eps = vs * 8.75;
        let (m0, v0) = (1.0, 1.0 + eps);
        let (m1, v1) = (6.0, 4.0 + eps);
        for q in [-1.0, 2.9, 3.5, 7.0] {
            let ll = |mu: f64, var: f64| 0.5f64.ln() - 0.5 * (std::f64::consts::TAU * var).ln() - 0.5 * (q - mu) * (q - mu) / var;
            let want = ll(m1, v1) - ll(m0, v0);
            let got = m.score(array![q].view());
            assert!((got - want).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_feature_stays_finite() {
        let x = array![[1.0_f64, 3.0], [1.0, 4.0], [1.0, 9.0], [1.0, 10.0]];
        let m = fit_gaussian_nb(x.view(), &[0, 0, 1, 1], 0.002).unwrap();
        assert!(m.score(array![1.0, 5.0].view()).is_finite());
        assert!(fit_gaussian_nb(x.view(), &[0, 0, 0, 0], 0.002).is_err());
    }
}
