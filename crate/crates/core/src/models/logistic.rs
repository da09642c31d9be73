//! L2-regularized logistic regression fitted by full-batch gradient descent
//! with a backtracking line search.

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::scalar::{sigmoid, softplus, Scalar};

pub const MAX_ITER: usize = 5000;
pub const GRAD_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Logistic<F> {
    pub w: Array1<F>,
    pub b: F,
    pub iterations: usize,
    pub converged: bool,
}

impl<F: Scalar> Logistic<F> {
    /// Probability of label 1.
    pub fn score(&self, row: ArrayView1<F>) -> F {
        sigmoid(row.dot(&self.w) + self.b)
    }
}

fn margins<F: Scalar>(w: ArrayView1<F>, b: F, x: ArrayView2<F>) -> Array1<F> {
    x.dot(&w) + b
}

/// Mean log-loss plus `|w|^2 / (2 C n)`.
pub fn objective<F: Scalar>(w: ArrayView1<F>, b: F, x: ArrayView2<F>, y: &[u8], c: F) -> F {
    let n = F::from_count(x.nrows());
    let z = margins(w, b, x);
    let loss: F = z
        .iter()
        .zip(y)
        .map(|(&zi, &yi)| softplus(zi) - if yi > 0 { zi } else { F::zero() })
        .sum();
    loss / n + w.dot(&w) / (F::lit(2.0) * c * n)
}

/// Gradient of [`objective`] with respect to `(w, b)`.
pub fn gradient<F: Scalar>(
    w: ArrayView1<F>,
    b: F,
    x: ArrayView2<F>,
    y: &[u8],
    c: F,
) -> (Array1<F>, F) {
    let n = F::from_count(x.nrows());
    let z = margins(w, b, x);
    let r: Array1<F> = z
        .iter()
        .zip(y)
        .map(|(&zi, &yi)| sigmoid(zi) - if yi > 0 { F::one() } else { F::zero() })
        .collect();
    let gw = x.t().dot(&r) / n + &w / (c * n);
    (gw, r.sum() / n)
}

/// Fits the model. Steps are preconditioned by the inverse second moment
/// of each column, which keeps raw, unscaled features tractable.
pub fn fit_logistic<F: Scalar>(x: ArrayView2<F>, y: &[u8], c: f64) -> Result<Logistic<F>, ModelError> {
    if !(c > 0.0) {
        return Err(ModelError::Config(format!("C must be positive, got {c}")));
    }
    let (n, d) = x.dim();
    let cf = F::lit(c);
    let nf = F::from_count(n);
    let quarter = F::lit(0.25);
    let precond: Array1<F> = (0..d)
        .map(|j| {
            let m2 = x.column(j).iter().map(|&v| v * v).sum::<F>() / nf;
            F::one() / (quarter * m2 + F::one() / (cf * nf))
        })
        .collect();
    let pb = F::lit(4.0);

    let mut w = Array1::<F>::zeros(d);
    let mut b = F::zero();
    let mut f = objective(w.view(), b, x, y, cf);
    let mut step = F::one();
    let tol = F::lit(GRAD_TOL);
    let armijo = F::lit(1e-4);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITER {
        let (gw, gb) = gradient(w.view(), b, x, y, cf);
        let gmax = gw.iter().fold(gb.abs(), |m, v| m.max(v.abs()));
        if gmax < tol {
            converged = true;
            break;
        }
        let dw = &gw * &precond;
        let db = gb * pb;
        let decrease = gw.dot(&dw) + gb * db;
        let mut accepted = false;
        for _ in 0..60 {
            let w_new = &w - &(&dw * step);
            let b_new = b - db * step;
            let f_new = objective(w_new.view(), b_new, x, y, cf);
            if !f_new.is_finite() && f.is_finite() {
                step *= F::lit(0.5);
                continue;
            }
            if f_new <= f - armijo * step * decrease {
                w = w_new;
                b = b_new;
                f = f_new;
                accepted = true;
                break;
            }
            step *= F::lit(0.5);
        }
        iterations += 1;
        if !accepted {
            // no representable decrease left along the gradient
            break;
        }
        step = (step * F::lit(2.0)).min(F::lit(1e6));
    }
    if !f.is_finite() {
        return Err(ModelError::Diverged("logistic objective is not finite".into()));
    }
    Ok(Logistic {
        w,
        b,
        iterations,
        converged,
    })
}
