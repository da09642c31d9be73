//! Standardization and descriptive statistics.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::{DatasetError, CONCEPT_COLUMN, FEATURE_NAMES, MIN_MI_ROWS};
use crate::scalar::Scalar;

/// Per-column z-score parameters, fitted on training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams<F> {
    pub mean: Array1<F>,
    pub std: Array1<F>,
    /// Columns with zero variance; their std was replaced by 1.
    pub degenerate: Vec<usize>,
}

impl<F: Scalar> ScalerParams<F> {
    /// Population mean and standard deviation of every column.
    pub fn fit(x: ArrayView2<F>) -> Self {
        let n = x.nrows();
        let d = x.ncols();
        if n == 0 {
            return Self::identity(d);
        }
        let nf = F::from_count(n);
        let mut mean = Array1::zeros(d);
        let mut std = Array1::zeros(d);
        let mut degenerate = Vec::new();
        for (j, col) in x.axis_iter(Axis(1)).enumerate() {
            let m = col.iter().copied().sum::<F>() / nf;
            let var = col.iter().map(|&v| (v - m) * (v - m)).sum::<F>() / nf;
            mean[j] = m;
            std[j] = if var > F::zero() {
                var.sqrt()
            } else {
                log::warn!("column {j} has zero variance; scaling it by 1");
                degenerate.push(j);
                F::one()
            };
        }
        Self {
            mean,
            std,
            degenerate,
        }
    }

    pub fn identity(d: usize) -> Self {
        Self {
            mean: Array1::zeros(d),
            std: Array1::ones(d),
            degenerate: Vec::new(),
        }
    }

    pub fn transform(&self, x: ArrayView2<F>) -> Array2<F> {
        (&x - &self.mean) / &self.std
    }

    pub fn inverse_transform(&self, z: ArrayView2<F>) -> Array2<F> {
        &z * &self.std + &self.mean
    }

    pub fn transform_row(&self, row: ArrayView1<F>) -> Array1<F> {
        (&row - &self.mean) / &self.std
    }
}

/// Table-style summary of one column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureSummary<F> {
    pub count: usize,
    pub mean: F,
    /// Sample (n - 1) standard deviation.
    pub std: F,
    pub min: F,
    pub q25: F,
    pub median: F,
    pub q75: F,
    pub max: F,
}

/// Quantile of sorted data with linear interpolation between order
/// statistics (position `q * (n - 1)`).
pub fn quantile_sorted<F: Scalar>(sorted: &[F], q: f64) -> F {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = F::lit(pos - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn sorted_copy<F: Scalar>(col: ArrayView1<F>) -> Vec<F> {
    let mut v: Vec<F> = col.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite data"));
    v
}

/// Column summaries of a non-empty matrix.
pub fn describe<F: Scalar>(x: ArrayView2<F>) -> Vec<FeatureSummary<F>> {
    let n = x.nrows();
    assert!(n > 0, "describe needs at least one row");
    let nf = F::from_count(n);
    x.axis_iter(Axis(1))
        .map(|col| {
            let s = sorted_copy(col);
            let mean = s.iter().copied().sum::<F>() / nf;
            let std = if n > 1 {
                let ss = s.iter().map(|&v| (v - mean) * (v - mean)).sum::<F>();
                (ss / F::from_count(n - 1)).sqrt()
            } else {
                F::zero()
            };
            FeatureSummary {
                count: n,
                mean,
                std,
                min: s[0],
                q25: quantile_sorted(&s, 0.25),
                median: quantile_sorted(&s, 0.5),
                q75: quantile_sorted(&s, 0.75),
                max: s[n - 1],
            }
        })
        .collect()
}

/// Pearson correlation of two equally long columns; `None` when either is
/// constant.
pub fn pearson<F: Scalar>(a: ArrayView1<F>, b: ArrayView1<F>) -> Option<F> {
    let n = F::from_count(a.len());
    let ma = a.sum() / n;
    let mb = b.sum() / n;
    let (mut sab, mut saa, mut sbb) = (F::zero(), F::zero(), F::zero());
    for (&x, &y) in a.iter().zip(b.iter()) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= F::zero() || sbb <= F::zero() {
        return None;
    }
    let r = sab / (saa * sbb).sqrt();
    Some(r.max(-F::one()).min(F::one()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Correlation<F> {
    pub matrix: Array2<F>,
    /// Constant columns; their off-diagonal entries are reported as 0.
    pub constant_columns: Vec<usize>,
}

/// Symmetric correlation matrix with a unit diagonal.
pub fn pearson_matrix<F: Scalar>(x: ArrayView2<F>) -> Correlation<F> {
    let d = x.ncols();
    let mut m = Array2::<F>::zeros((d, d));
    let constant_columns: Vec<usize> = (0..d)
        .filter(|&j| {
            let c = x.column(j);
            c.iter().all(|&v| v == c[0])
        })
        .collect();
    for &j in &constant_columns {
        log::warn!("column {j} is constant; its correlations are reported as 0");
    }
    for i in 0..d {
        m[[i, i]] = F::one();
        for j in i + 1..d {
            let r = pearson(x.column(i), x.column(j)).unwrap_or(F::zero());
            m[[i, j]] = r;
            m[[j, i]] = r;
        }
    }
    Correlation {
        matrix: m,
        constant_columns,
    }
}

/// The `bins - 1` interior equal-frequency edges of `values`.
pub fn quantile_edges<F: Scalar>(values: ArrayView1<F>, bins: usize) -> Vec<F> {
    let s = sorted_copy(values);
    (1..bins)
        .map(|i| quantile_sorted(&s, i as f64 / bins as f64))
        .collect()
}

fn bin_of<F: Scalar>(v: F, edges: &[F]) -> usize {
    edges.iter().filter(|&&e| v > e).count()
}

/// Mutual information in nats between a discrete variable and a binary
/// label, from the empirical joint histogram.
pub fn mutual_information<F: Scalar>(x: &[usize], y: &[u8]) -> F {
    let n = x.len();
    if n == 0 {
        return F::zero();
    }
    let nx = x.iter().copied().max().unwrap_or(0) + 1;
    let mut joint = vec![[0usize; 2]; nx];
    for (&a, &b) in x.iter().zip(y) {
        joint[a][usize::from(b > 0)] += 1;
    }
    let py = [0, 1].map(|c| joint.iter().map(|r| r[c]).sum::<usize>());
    let nf = F::from_count(n);
    let mut mi = F::zero();
    for row in &joint {
        let px = row[0] + row[1];
        for c in 0..2 {
            if row[c] == 0 {
                continue;
            }
            let pxy = F::from_count(row[c]) / nf;
            let ratio = F::from_count(row[c] * n) / (F::from_count(px) * F::from_count(py[c]));
            mi += pxy * ratio.ln();
        }
    }
    mi.max(F::zero())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiEntry<F> {
    pub feature: usize,
    pub mi: F,
}

impl<F> MiEntry<F> {
    /// Column name for a standard 11-feature matrix.
    pub fn name(&self) -> &'static str {
        FEATURE_NAMES.get(self.feature).copied().unwrap_or("?")
    }
}

/// Features ordered by mutual information with the label, highest first;
/// ties keep column order. Continuous columns are cut into ten
/// equal-frequency bins; the `concept` column of an 11-wide matrix is used
/// as is.
pub fn mutual_info_rank<F: Scalar>(
    x: ArrayView2<F>,
    y: &[u8],
) -> Result<Vec<MiEntry<F>>, DatasetError> {
    if x.nrows() < MIN_MI_ROWS {
        return Err(DatasetError::TooSmall {
            what: "mutual information ranking",
            needed: MIN_MI_ROWS,
            found: x.nrows(),
        });
    }
    let categorical = x.ncols() == FEATURE_NAMES.len();
    let mut out: Vec<MiEntry<F>> = x
        .axis_iter(Axis(1))
        .enumerate()
        .map(|(j, col)| {
            let bins: Vec<usize> = if categorical && j == CONCEPT_COLUMN {
                col.iter().map(|v| v.as_f64().round().max(0.0) as usize).collect()
            } else {
                let edges = quantile_edges(col, 10);
                col.iter().map(|&v| bin_of(v, &edges)).collect()
            };
            MiEntry {
                feature: j,
                mi: mutual_information(&bins, y),
            }
        })
        .collect();
    out.sort_by(|a, b| b.mi.partial_cmp(&a.mi).expect("finite MI"));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassBalance {
    pub negatives: usize,
    pub positives: usize,
    pub minority_fraction: f64,
    pub single_class: bool,
}

pub fn class_balance(y: &[u8]) -> ClassBalance {
    let positives = y.iter().filter(|&&v| v > 0).count();
    let negatives = y.len() - positives;
    let minority = positives.min(negatives);
    let single_class = positives == 0 || negatives == 0;
    if single_class {
        log::warn!("dataset holds a single class");
    }
    ClassBalance {
        negatives,
        positives,
        minority_fraction: if y.is_empty() {
            0.0
        } else {
            minority as f64 / y.len() as f64
        },
        single_class,
    }
}
