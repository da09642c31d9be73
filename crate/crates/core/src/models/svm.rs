//! Soft-margin RBF support vector machine trained by sequential minimal
//! optimization with second-order working-set selection.

use std::collections::VecDeque;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::scalar::{sq_dist, Scalar};

pub const KKT_TOL: f64 = 1e-3;
pub const MAX_ITER: usize = 1_000_000;
const TAU: f64 = 1e-12;
/// Kernel cache budget in bytes.
const CACHE_BYTES: usize = 256 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Svm<F> {
    pub support: Array2<F>,
    /// `alpha_i * y_i` per support vector.
    pub coef: Array1<F>,
    pub b: F,
    pub gamma: F,
}

impl<F: Scalar> Svm<F> {
    /// Decision value; positive means label 1.
    pub fn score(&self, row: ArrayView1<F>) -> F {
        let q = row.to_vec();
        let mut s = self.b;
        for (sv, &c) in self.support.axis_iter(Axis(0)).zip(&self.coef) {
            let d = match sv.as_slice() {
                Some(v) => sq_dist(v, &q),
                None => sq_dist(&sv.to_vec(), &q),
            };
            s += c * (-self.gamma * d).exp();
        }
        s
    }
}

/// Dual solution over the training set.
#[derive(Debug, Clone)]
pub struct SmoSolution<F> {
    pub alpha: Vec<F>,
    pub b: F,
    pub iterations: usize,
    /// Final maximal KKT violation `m(alpha) - M(alpha)`.
    pub gap: F,
}

struct KernelCache<'a, F> {
    x: ArrayView2<'a, F>,
    gamma: F,
    rows: Vec<Option<Vec<F>>>,
    order: VecDeque<usize>,
    capacity: usize,
}

impl<'a, F: Scalar> KernelCache<'a, F> {
    fn new(x: ArrayView2<'a, F>, gamma: F) -> Self {
        let n = x.nrows();
        let per_row = n.max(1) * std::mem::size_of::<F>();
        Self {
            x,
            gamma,
            rows: vec![None; n],
            order: VecDeque::new(),
            capacity: (CACHE_BYTES / per_row).max(2),
        }
    }

    fn row(&mut self, i: usize) -> &[F] {
        if self.rows[i].is_none() {
            if self.order.len() >= self.capacity {
                if let Some(old) = self.order.pop_front() {
                    self.rows[old] = None;
                }
            }
            let xi = self.x.row(i);
            let r: Vec<F> = self
                .x
                .axis_iter(Axis(0))
                .map(|xj| {
                    let d: F = xi.iter().zip(xj.iter()).map(|(&a, &b)| (a - b) * (a - b)).sum();
                    (-self.gamma * d).exp()
                })
                .collect();
            self.rows[i] = Some(r);
            self.order.push_back(i);
        }
        self.rows[i].as_deref().expect("just filled")
    }
}

/// Solves the soft-margin dual for labels mapped to {-1, +1}.
pub fn solve_smo<F: Scalar>(
    x: ArrayView2<F>,
    y01: &[u8],
    c: f64,
    gamma: f64,
) -> Result<SmoSolution<F>, ModelError> {
    if !(c > 0.0) || !(gamma > 0.0) {
        return Err(ModelError::Config(format!("C and gamma must be positive, got {c}, {gamma}")));
    }
    let n = x.nrows();
    let y: Vec<F> = y01.iter().map(|&v| if v > 0 { F::one() } else { -F::one() }).collect();
    let cf = F::lit(c);
    let tau = F::lit(TAU);
    let eps = F::lit(KKT_TOL);
    let mut cache = KernelCache::new(x, F::lit(gamma));
    let mut alpha = vec![F::zero(); n];
    let mut g = vec![-F::one(); n];
    let pos = |yi: F| yi > F::zero();
    let mut iterations = 0;
    let mut gap;

    loop {
        // i: maximal violator in I_up
        let mut gmax = F::neg_infinity();
        let mut gmax_idx = None;
        for t in 0..n {
            let cand = if pos(y[t]) {
                (alpha[t] < cf).then(|| -g[t])
            } else {
                (alpha[t] > F::zero()).then_some(g[t])
            };
            if let Some(v) = cand {
                if v >= gmax {
                    gmax = v;
                    gmax_idx = Some(t);
                }
            }
        }
        let mut gmax2 = F::neg_infinity();
        let mut gmin_idx = None;
        let mut obj_min = F::infinity();
        if let Some(i) = gmax_idx {
            let ki = cache.row(i);
            for j in 0..n {
                let (in_low, grad_diff, gv) = if pos(y[j]) {
                    (alpha[j] > F::zero(), gmax + g[j], g[j])
                } else {
                    (alpha[j] < cf, gmax - g[j], -g[j])
                };
                if !in_low {
                    continue;
                }
                if gv >= gmax2 {
                    gmax2 = gv;
                }
                if grad_diff > F::zero() {
                    let mut quad = F::lit(2.0) - F::lit(2.0) * ki[j];
                    if quad <= F::zero() {
                        quad = tau;
                    }
                    let obj = -(grad_diff * grad_diff) / quad;
                    if obj <= obj_min {
                        gmin_idx = Some(j);
                        obj_min = obj;
                    }
                }
            }
        }
        gap = gmax + gmax2;
        let (i, j) = match (gmax_idx, gmin_idx) {
            (Some(i), Some(j)) if gap >= eps => (i, j),
            _ => break,
        };
        if iterations >= MAX_ITER {
            return Err(ModelError::Convergence {
                iterations,
                detail: format!("KKT gap {} after {iterations} pair updates", gap.as_f64()),
            });
        }
        iterations += 1;

        let kij = cache.row(i)[j];
        let (ai_old, aj_old) = (alpha[i], alpha[j]);
        let (mut ai, mut aj) = (ai_old, aj_old);
        if y[i] != y[j] {
            let mut quad = F::lit(2.0) + F::lit(2.0) * (-kij);
            if quad <= F::zero() {
                quad = tau;
            }
            let delta = (-g[i] - g[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > F::zero() {
                if aj < F::zero() {
                    aj = F::zero();
                    ai = diff;
                }
            } else if ai < F::zero() {
                ai = F::zero();
                aj = -diff;
            }
            if diff > F::zero() {
                if ai > cf {
                    ai = cf;
                    aj = cf - diff;
                }
            } else if aj > cf {
                aj = cf;
                ai = cf + diff;
            }
        } else {
            let mut quad = F::lit(2.0) - F::lit(2.0) * kij;
            if quad <= F::zero() {
                quad = tau;
            }
            let delta = (g[i] - g[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > cf {
                if ai > cf {
                    ai = cf;
                    aj = sum - cf;
                }
            } else if aj < F::zero() {
                aj = F::zero();
                ai = sum;
            }
            if sum > cf {
                if aj > cf {
                    aj = cf;
                    ai = sum - cf;
                }
            } else if ai < F::zero() {
                ai = F::zero();
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;
        let (dai, daj) = (ai - ai_old, aj - aj_old);
        {
            let ki = cache.row(i);
            for t in 0..n {
                g[t] += y[t] * y[i] * ki[t] * dai;
            }
        }
        {
            let kj = cache.row(j);
            for t in 0..n {
                g[t] += y[t] * y[j] * kj[t] * daj;
            }
        }
    }

    // offset from free vectors, or the middle of the feasible interval
    let mut ub = F::infinity();
    let mut lb = F::neg_infinity();
    let mut sum_free = F::zero();
    let mut n_free = 0usize;
    for t in 0..n {
        let yg = y[t] * g[t];
        if alpha[t] >= cf {
            if pos(y[t]) {
                lb = lb.max(yg);
            } else {
                ub = ub.min(yg);
            }
        } else if alpha[t] <= F::zero() {
            if pos(y[t]) {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 {
        sum_free / F::from_count(n_free)
    } else {
        (ub + lb) * F::lit(0.5)
    };
    Ok(SmoSolution {
        alpha,
        b: -rho,
        iterations,
        gap,
    })
}

pub fn fit_svm<F: Scalar>(
    x: ArrayView2<F>,
    y: &[u8],
    c: f64,
    gamma: f64,
) -> Result<Svm<F>, ModelError> {
    let sol = solve_smo(x, y, c, gamma)?;
    let sv: Vec<usize> = (0..y.len()).filter(|&i| sol.alpha[i] > F::zero()).collect();
    let coef = sv
        .iter()
        .map(|&i| if y[i] > 0 { sol.alpha[i] } else { -sol.alpha[i] })
        .collect();
    Ok(Svm {
        support: x.select(Axis(0), &sv),
        coef,
        b: sol.b,
        gamma: F::lit(gamma),
    })
}
