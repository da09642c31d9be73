//! One-hidden-layer perceptron with a logistic output, trained on log-loss
//! plus L2 by Adam or Nesterov SGD with early stopping.

use std::str::FromStr;

use ndarray::{Array1, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::scalar::{sigmoid, softplus, Scalar};
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Logistic,
}

impl FromStr for Activation {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "logistic" => Ok(Activation::Logistic),
            _ => Err(ModelError::Config(format!("unknown activation `{s}`"))),
        }
    }
}

impl Activation {
    fn apply<F: Scalar>(self, z: F) -> F {
        match self {
            Activation::Relu => z.max(F::zero()),
            Activation::Tanh => z.tanh(),
            Activation::Logistic => sigmoid(z),
        }
    }

    /// Derivative expressed through the activation value `a`.
    fn derivative<F: Scalar>(self, a: F) -> F {
        match self {
            Activation::Relu => {
                if a > F::zero() {
                    F::one()
                } else {
                    F::zero()
                }
            }
            Activation::Tanh => F::one() - a * a,
            Activation::Logistic => a * (F::one() - a),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Adam,
    Sgd,
}

impl FromStr for Solver {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "adam" => Ok(Solver::Adam),
            "sgd" => Ok(Solver::Sgd),
            _ => Err(ModelError::Config(format!("unknown solver `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlpConfig {
    pub hidden: usize,
    pub activation: Activation,
    pub solver: Solver,
    pub learning_rate: f64,
    pub alpha: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub early_stopping: bool,
    pub validation_fraction: f64,
    pub patience: usize,
    pub tol: f64,
    pub momentum: f64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: 100,
            activation: Activation::Relu,
            solver: Solver::Adam,
            learning_rate: 0.001,
            alpha: 0.001,
            batch_size: 200,
            max_epochs: 300,
            early_stopping: true,
            validation_fraction: 0.1,
            patience: 10,
            tol: 1e-4,
            momentum: 0.9,
        }
    }
}

/// Flat parameter layout: `w1` (d x h, row-major), `b1` (h), `w2` (h), `b2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp<F> {
    pub d: usize,
    pub hidden: usize,
    pub activation: Activation,
    pub params: Vec<F>,
    pub epochs: usize,
}

struct Layout {
    d: usize,
    h: usize,
}

impl Layout {
    fn len(&self) -> usize {
        self.d * self.h + 2 * self.h + 1
    }
    fn w1(&self) -> std::ops::Range<usize> {
        0..self.d * self.h
    }
    fn b1(&self) -> std::ops::Range<usize> {
        self.d * self.h..self.d * self.h + self.h
    }
    fn w2(&self) -> std::ops::Range<usize> {
        self.d * self.h + self.h..self.d * self.h + 2 * self.h
    }
    fn b2(&self) -> usize {
        self.d * self.h + 2 * self.h
    }
}

fn hidden_layer<F: Scalar>(
    params: &[F],
    lay: &Layout,
    x: ArrayView2<F>,
    act: Activation,
) -> ndarray::Array2<F> {
    let w1 = ArrayView2::from_shape((lay.d, lay.h), &params[lay.w1()]).expect("layout");
    let b1 = ArrayView1::from(&params[lay.b1()]);
    let mut a = x.dot(&w1) + b1;
    a.mapv_inplace(|z| act.apply(z));
    a
}

fn output<F: Scalar>(params: &[F], lay: &Layout, a: &ndarray::Array2<F>) -> Array1<F> {
    let w2 = ArrayView1::from(&params[lay.w2()]);
    a.dot(&w2) + params[lay.b2()]
}

/// Mean log-loss plus `alpha / (2 n) * |W|^2` over both weight matrices
/// (biases excluded), and its gradient with respect to the flat
/// parameters.
pub fn loss_and_grad<F: Scalar>(
    params: &[F],
    d: usize,
    hidden: usize,
    act: Activation,
    x: ArrayView2<F>,
    y: &[u8],
    alpha: F,
) -> (F, Vec<F>) {
    let lay = Layout { d, h: hidden };
    let n = F::from_count(x.nrows());
    let a = hidden_layer(params, &lay, x, act);
    let z = output(params, &lay, &a);
    let mut loss = F::zero();
    let mut dz = Array1::zeros(z.len());
    for (i, (&zi, &yi)) in z.iter().zip(y).enumerate() {
        let t = if yi > 0 { F::one() } else { F::zero() };
        loss += softplus(zi) - t * zi;
        dz[i] = (sigmoid(zi) - t) / n;
    }
    let sq: F = params[lay.w1()].iter().chain(&params[lay.w2()]).map(|&w| w * w).sum();
    loss = loss / n + alpha * sq / (F::lit(2.0) * n);

    let mut grad = vec![F::zero(); lay.len()];
    let w2 = ArrayView1::from(&params[lay.w2()]);
    let gw2 = a.t().dot(&dz);
    for (k, g) in gw2.iter().enumerate() {
        grad[lay.w2().start + k] = *g + alpha * w2[k] / n;
    }
    grad[lay.b2()] = dz.sum();
    let mut delta = ndarray::Array2::zeros(a.raw_dim());
    for ((r, c), v) in delta.indexed_iter_mut() {
        *v = dz[r] * w2[c] * act.derivative(a[[r, c]]);
    }
    let gw1 = x.t().dot(&delta);
    for (k, g) in gw1.iter().enumerate() {
        grad[k] = *g + alpha * params[k] / n;
    }
    for (k, g) in delta.sum_axis(Axis(0)).iter().enumerate() {
        grad[lay.b1().start + k] = *g;
    }
    (loss, grad)
}

impl<F: Scalar> Mlp<F> {
    /// Probability of label 1.
    pub fn score(&self, row: ArrayView1<F>) -> F {
        let lay = Layout {
            d: self.d,
            h: self.hidden,
        };
        let x = row.insert_axis(Axis(0));
        let a = hidden_layer(&self.params, &lay, x, self.activation);
        sigmoid(output(&self.params, &lay, &a)[0])
    }

    /// Network with all parameters zero.
    pub fn zeros(d: usize, hidden: usize, activation: Activation) -> Self {
        let lay = Layout { d, h: hidden };
        Self {
            d,
            hidden,
            activation,
            params: vec![F::zero(); lay.len()],
            epochs: 0,
        }
    }
}

fn init_params<F: Scalar>(lay: &Layout, act: Activation, rng: &mut crate::seed::Rng) -> Vec<F> {
    let factor = if act == Activation::Logistic { 2.0 } else { 6.0 };
    let b_hidden = (factor / (lay.d + lay.h) as f64).sqrt();
    let b_out = (factor / (lay.h + 1) as f64).sqrt();
    let mut p = vec![F::zero(); lay.len()];
    for k in lay.w1().chain(lay.b1()) {
        p[k] = F::lit(rng.gen_range(-b_hidden..b_hidden));
    }
    for k in lay.w2() {
        p[k] = F::lit(rng.gen_range(-b_out..b_out));
    }
    p[lay.b2()] = F::lit(rng.gen_range(-b_out..b_out));
    p
}

/// Stratified hold-out of about `fraction` of each class.
fn validation_split(y: &[u8], fraction: f64, rng: &mut crate::seed::Rng) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut val = Vec::new();
    for c in [0u8, 1] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == c).collect();
        idx.shuffle(rng);
        let k = ((idx.len() as f64) * fraction).round() as usize;
        let k = k.min(idx.len().saturating_sub(1));
        val.extend_from_slice(&idx[..k]);
        train.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

pub fn fit_mlp<F: Scalar>(
    x: ArrayView2<F>,
    y: &[u8],
    cfg: &MlpConfig,
    seed: u64,
) -> Result<Mlp<F>, ModelError> {
    if cfg.hidden == 0 || cfg.batch_size == 0 || !(cfg.learning_rate > 0.0) {
        return Err(ModelError::Config("hidden units, batch size and learning rate must be positive".into()));
    }
    let (n, d) = x.dim();
    let lay = Layout { d, h: cfg.hidden };
    let mut rng = rng_from_seed(seed);
    let mut params: Vec<F> = init_params(&lay, cfg.activation, &mut rng);

    let use_val = cfg.early_stopping && (n as f64 * cfg.validation_fraction) >= 1.0;
    let (train_idx, val_idx) = if use_val {
        validation_split(y, cfg.validation_fraction, &mut rng)
    } else {
        ((0..n).collect(), Vec::new())
    };
    let use_val = use_val && !val_idx.is_empty();
    let xv = x.select(Axis(0), &val_idx);
    let yv: Vec<u8> = val_idx.iter().map(|&i| y[i]).collect();

    let alpha = F::lit(cfg.alpha);
    let lr = F::lit(cfg.learning_rate);
    let (beta1, beta2, eps_adam) = (F::lit(0.9), F::lit(0.999), F::lit(1e-8));
    let momentum = F::lit(cfg.momentum);
    let mut m1 = vec![F::zero(); lay.len()];
    let mut m2 = vec![F::zero(); lay.len()];
    let mut velocity = vec![F::zero(); lay.len()];
    let mut step = 0i32;

    let mut best_loss = F::infinity();
    let mut best_params = params.clone();
    let mut stale = 0usize;
    let tol = F::lit(cfg.tol);
    let batch = cfg.batch_size.min(train_idx.len()).max(1);
    let mut order = train_idx.clone();
    let mut epochs = 0;

    for _ in 0..cfg.max_epochs {
        epochs += 1;
        order.shuffle(&mut rng);
        let mut epoch_loss = F::zero();
        for chunk in order.chunks(batch) {
            let xb = x.select(Axis(0), chunk);
            let yb: Vec<u8> = chunk.iter().map(|&i| y[i]).collect();
            let (loss, grad) = loss_and_grad(&params, d, cfg.hidden, cfg.activation, xb.view(), &yb, alpha);
            if !loss.is_finite() {
                return Err(ModelError::Diverged(format!("MLP loss became {loss} at epoch {epochs}")));
            }
            epoch_loss += loss * F::from_count(chunk.len());
            match cfg.solver {
                Solver::Adam => {
                    step += 1;
                    let c1 = F::one() - beta1.powi(step);
                    let c2 = F::one() - beta2.powi(step);
                    let lr_t = lr * c2.sqrt() / c1;
                    for k in 0..params.len() {
                        m1[k] = beta1 * m1[k] + (F::one() - beta1) * grad[k];
                        m2[k] = beta2 * m2[k] + (F::one() - beta2) * grad[k] * grad[k];
                        params[k] -= lr_t * m1[k] / (m2[k].sqrt() + eps_adam);
                    }
                }
                Solver::Sgd => {
                    for k in 0..params.len() {
                        velocity[k] = momentum * velocity[k] - lr * grad[k];
                        params[k] += momentum * velocity[k] - lr * grad[k];
                    }
                }
            }
        }
        let monitored = if use_val {
            loss_and_grad(&params, d, cfg.hidden, cfg.activation, xv.view(), &yv, F::zero()).0
        } else {
            epoch_loss / F::from_count(train_idx.len())
        };
        if !monitored.is_finite() {
            return Err(ModelError::Diverged(format!("MLP loss became {monitored} at epoch {epochs}")));
        }
        if monitored < best_loss - tol {
            stale = 0;
        } else {
            stale += 1;
        }
        if monitored < best_loss {
            best_loss = monitored;
            best_params.clone_from(&params);
        }
        if stale >= cfg.patience {
            break;
        }
    }
    Ok(Mlp {
        d,
        hidden: cfg.hidden,
        activation: cfg.activation,
        params: if use_val { best_params } else { params },
        epochs,
    })
}
