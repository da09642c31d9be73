//! Class rebalancing: SMOTE and ADASYN oversampling, Tomek-link and ENN
//! cleaning, and the SMOTE+cleaning hybrids. All strategies share the exact
//! k-NN search in [`crate::neighbors`].

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::neighbors::nearest;
use crate::scalar::Scalar;
use crate::seed::rng_from_seed;

pub const SMOTE_K: usize = 5;
pub const ADASYN_K: usize = 5;
pub const ENN_K: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum ResampleError {
    #[error("{strategy} needs at least k+1 = {needed} minority rows, got {found}")]
    TooFewMinority {
        strategy: &'static str,
        needed: usize,
        found: usize,
    },
    #[error("adasyn found no minority row with majority neighbors")]
    NoBorderline,
    #[error("{strategy} needs more than k = {k} rows, got {n}")]
    TooFewRows {
        strategy: &'static str,
        k: usize,
        n: usize,
    },
    #[error("{rows} feature rows but {labels} labels")]
    Shape { rows: usize, labels: usize },
    #[error("unknown resampler `{0}` (expected none|smote|adasyn|tomek|enn|smote-tomek|smote-enn)")]
    UnknownStrategy(String),
}

/// Feature rows with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledMatrix<F> {
    pub x: Array2<F>,
    pub y: Vec<u8>,
}

impl<F: Scalar> LabeledMatrix<F> {
    pub fn new(x: Array2<F>, y: Vec<u8>) -> Result<Self, ResampleError> {
        if x.nrows() != y.len() {
            return Err(ResampleError::Shape {
                rows: x.nrows(),
                labels: y.len(),
            });
        }
        let x = x.as_standard_layout().into_owned();
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// `(count of label 0, count of label 1)`.
    pub fn counts(&self) -> (usize, usize) {
        let pos = self.y.iter().filter(|&&v| v == 1).count();
        (self.len() - pos, pos)
    }

    /// The rarer label; label 1 when the classes are tied.
    pub fn minority_label(&self) -> u8 {
        let (neg, pos) = self.counts();
        u8::from(pos <= neg)
    }

    fn indices_of(&self, label: u8) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.y[i] == label).collect()
    }

    fn row(&self, i: usize) -> &[F] {
        self.x.row(i).to_slice().expect("standard layout")
    }
}

/// Which classes a cleaning step was allowed to remove.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditScope {
    Nothing,
    MajorityOnly,
    BothClasses,
}

/// Result of a strategy.
///
/// Output rows are the retained input rows in input order followed by the
/// retained synthetic rows. `removed_rows` index the pre-cleaning set, in
/// which the input rows come first, so indices below the input length are
/// original rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ResampleOutcome<F> {
    pub x: Array2<F>,
    pub y: Vec<u8>,
    pub synthetic_rows: Vec<usize>,
    pub removed_rows: Vec<usize>,
    pub edit_scope: EditScope,
}

impl<F: Scalar> ResampleOutcome<F> {
    fn unchanged(data: &LabeledMatrix<F>) -> Self {
        Self {
            x: data.x.clone(),
            y: data.y.clone(),
            synthetic_rows: Vec::new(),
            removed_rows: Vec::new(),
            edit_scope: EditScope::Nothing,
        }
    }

    pub fn into_labeled(self) -> LabeledMatrix<F> {
        LabeledMatrix {
            x: self.x,
            y: self.y,
        }
    }
}

/// k nearest minority neighbors of every minority row (self excluded).
fn minority_neighbors<F: Scalar>(data: &LabeledMatrix<F>, minority: &[usize], k: usize) -> Vec<Vec<usize>> {
    minority
        .par_iter()
        .map(|&i| nearest(data.x.view(), data.row(i), Some(minority), k, Some(i)))
        .collect()
}

fn interpolate<F: Scalar>(base: &[F], other: &[F], u: F) -> Vec<F> {
    base.iter().zip(other).map(|(&a, &b)| a + u * (b - a)).collect()
}

/// Draws `u ~ U[0, 1)` in the target precision.
fn unit_draw<F: Scalar>(rng: &mut crate::seed::Rng) -> F {
    let u = F::lit(rng.gen::<f64>());
    if u >= F::one() {
        F::one() - F::epsilon()
    } else {
        u
    }
}

fn append_synthetic<F: Scalar>(
    data: &LabeledMatrix<F>,
    rows: Vec<Vec<F>>,
    label: u8,
) -> ResampleOutcome<F> {
    let n = data.len();
    let d = data.x.ncols();
    let g = rows.len();
    let mut x = Array2::zeros((n + g, d));
    x.slice_mut(ndarray::s![..n, ..]).assign(&data.x);
    for (r, vals) in rows.into_iter().enumerate() {
        for (j, v) in vals.into_iter().enumerate() {
            x[[n + r, j]] = v;
        }
    }
    let mut y = data.y.clone();
    y.extend(std::iter::repeat_n(label, g));
    ResampleOutcome {
        x,
        y,
        synthetic_rows: (n..n + g).collect(),
        removed_rows: Vec::new(),
        edit_scope: EditScope::Nothing,
    }
}

fn require_minority(strategy: &'static str, found: usize, k: usize) -> Result<(), ResampleError> {
    if found < k + 1 {
        return Err(ResampleError::TooFewMinority {
            strategy,
            needed: k + 1,
            found,
        });
    }
    Ok(())
}

/// SMOTE: adds `majority - minority` interpolated minority rows, cycling
/// the base rows in minority order.
pub fn smote<F: Scalar>(
    data: &LabeledMatrix<F>,
    k: usize,
    seed: u64,
) -> Result<ResampleOutcome<F>, ResampleError> {
    let label = data.minority_label();
    let minority = data.indices_of(label);
    let g = data.len() - 2 * minority.len();
    if g == 0 {
        return Ok(ResampleOutcome::unchanged(data));
    }
    require_minority("smote", minority.len(), k)?;
    let neigh = minority_neighbors(data, &minority, k);
    let mut rng = rng_from_seed(seed);
    let rows = (0..g)
        .map(|s| {
            let b = s % minority.len();
            let nn = neigh[b][rng.gen_range(0..k)];
            let u = unit_draw::<F>(&mut rng);
            interpolate(data.row(minority[b]), data.row(nn), u)
        })
        .collect();
    Ok(append_synthetic(data, rows, label))
}

/// Per-minority-row synthetic counts `g_i = round(r_i / sum(r) * G)`, where
/// `r_i` is the share of majority rows among the row's k neighbors.
pub fn adasyn_allocation<F: Scalar>(
    data: &LabeledMatrix<F>,
    k: usize,
) -> Result<Vec<usize>, ResampleError> {
    let label = data.minority_label();
    let minority = data.indices_of(label);
    require_minority("adasyn", minority.len(), k)?;
    let g = data.len() - 2 * minority.len();
    let ratios: Vec<f64> = minority
        .par_iter()
        .map(|&i| {
            let nn = nearest(data.x.view(), data.row(i), None, k, Some(i));
            nn.iter().filter(|&&j| data.y[j] != label).count() as f64 / k as f64
        })
        .collect();
    let total: f64 = ratios.iter().sum();
    if total <= 0.0 {
        return Err(ResampleError::NoBorderline);
    }
    Ok(ratios.iter().map(|r| (r / total * g as f64).round() as usize).collect())
}

/// ADASYN: like SMOTE but allocates synthetic rows in proportion to how
/// surrounded by the majority each minority row is.
pub fn adasyn<F: Scalar>(
    data: &LabeledMatrix<F>,
    k: usize,
    seed: u64,
) -> Result<ResampleOutcome<F>, ResampleError> {
    let label = data.minority_label();
    let minority = data.indices_of(label);
    if data.len() == 2 * minority.len() {
        return Ok(ResampleOutcome::unchanged(data));
    }
    let alloc = adasyn_allocation(data, k)?;
    let neigh = minority_neighbors(data, &minority, k);
    let mut rng = rng_from_seed(seed);
    let mut rows = Vec::with_capacity(alloc.iter().sum());
    for (b, &gi) in alloc.iter().enumerate() {
        for _ in 0..gi {
            let nn = neigh[b][rng.gen_range(0..k)];
            let u = unit_draw::<F>(&mut rng);
            rows.push(interpolate(data.row(minority[b]), data.row(nn), u));
        }
    }
    Ok(append_synthetic(data, rows, label))
}

/// Pairs `(a, b)`, `a < b`, of differently labeled mutual nearest
/// neighbors.
pub fn tomek_links<F: Scalar>(data: &LabeledMatrix<F>) -> Vec<(usize, usize)> {
    if data.len() < 2 {
        return Vec::new();
    }
    let nn: Vec<usize> = (0..data.len())
        .into_par_iter()
        .map(|i| nearest(data.x.view(), data.row(i), None, 1, Some(i))[0])
        .collect();
    (0..data.len())
        .filter(|&a| nn[a] > a && nn[nn[a]] == a && data.y[a] != data.y[nn[a]])
        .map(|a| (a, nn[a]))
        .collect()
}

fn drop_rows<F: Scalar>(
    data: &LabeledMatrix<F>,
    remove: &[bool],
    synthetic_from: usize,
    scope: EditScope,
) -> ResampleOutcome<F> {
    let keep: Vec<usize> = (0..data.len()).filter(|&i| !remove[i]).collect();
    let synthetic_rows = keep
        .iter()
        .enumerate()
        .filter(|(_, &i)| i >= synthetic_from)
        .map(|(pos, _)| pos)
        .collect();
    ResampleOutcome {
        x: data.x.select(Axis(0), &keep),
        y: keep.iter().map(|&i| data.y[i]).collect(),
        synthetic_rows,
        removed_rows: (0..data.len()).filter(|&i| remove[i]).collect(),
        edit_scope: scope,
    }
}

fn tomek_clean_inner<F: Scalar>(
    data: &LabeledMatrix<F>,
    majority: u8,
    synthetic_from: usize,
) -> ResampleOutcome<F> {
    let mut remove = vec![false; data.len()];
    for (a, b) in tomek_links(data) {
        if data.y[a] == majority {
            remove[a] = true;
        } else {
            remove[b] = true;
        }
    }
    drop_rows(data, &remove, synthetic_from, EditScope::MajorityOnly)
}

/// Removes the majority member of every Tomek link.
pub fn tomek_clean<F: Scalar>(data: &LabeledMatrix<F>) -> ResampleOutcome<F> {
    let majority = 1 - data.minority_label();
    tomek_clean_inner(data, majority, data.len())
}

fn enn_inner<F: Scalar>(
    data: &LabeledMatrix<F>,
    k: usize,
    only: Option<u8>,
    synthetic_from: usize,
) -> Result<ResampleOutcome<F>, ResampleError> {
    if data.len() <= k {
        return Err(ResampleError::TooFewRows {
            strategy: "enn",
            k,
            n: data.len(),
        });
    }
    let remove: Vec<bool> = (0..data.len())
        .into_par_iter()
        .map(|i| {
            if only.is_some_and(|l| data.y[i] != l) {
                return false;
            }
            let nn = nearest(data.x.view(), data.row(i), None, k, Some(i));
            let against = nn.iter().filter(|&&j| data.y[j] != data.y[i]).count();
            2 * against > k
        })
        .collect();
    let scope = if only.is_some() {
        EditScope::MajorityOnly
    } else {
        EditScope::BothClasses
    };
    Ok(drop_rows(data, &remove, synthetic_from, scope))
}

/// Edited nearest neighbors: drops majority rows outvoted by their k
/// neighbors, judged on the original neighborhoods in a single pass.
pub fn enn_edit<F: Scalar>(
    data: &LabeledMatrix<F>,
    k: usize,
) -> Result<ResampleOutcome<F>, ResampleError> {
    let majority = 1 - data.minority_label();
    enn_inner(data, k, Some(majority), data.len())
}

fn combine<F: Scalar>(over: ResampleOutcome<F>, cleaned: ResampleOutcome<F>) -> ResampleOutcome<F> {
    debug_assert!(over.removed_rows.is_empty());
    cleaned
}

/// SMOTE followed by Tomek-link cleaning of the combined set; the majority
/// label is the one of the input data.
pub fn smote_tomek<F: Scalar>(
    data: &LabeledMatrix<F>,
    seed: u64,
) -> Result<ResampleOutcome<F>, ResampleError> {
    let majority = 1 - data.minority_label();
    let over = smote(data, SMOTE_K, seed)?;
    let combined = LabeledMatrix {
        x: over.x.clone(),
        y: over.y.clone(),
    };
    let cleaned = tomek_clean_inner(&combined, majority, data.len());
    Ok(combine(over, cleaned))
}

/// SMOTE followed by an ENN edit of both classes of the combined set.
pub fn smote_enn<F: Scalar>(
    data: &LabeledMatrix<F>,
    seed: u64,
) -> Result<ResampleOutcome<F>, ResampleError> {
    let over = smote(data, SMOTE_K, seed)?;
    let combined = LabeledMatrix {
        x: over.x.clone(),
        y: over.y.clone(),
    };
    let cleaned = enn_inner(&combined, ENN_K, None, data.len())?;
    Ok(combine(over, cleaned))
}

/// Strategy selected by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Resampler {
    None,
    Smote,
    Adasyn,
    Tomek,
    Enn,
    SmoteTomek,
    SmoteEnn,
}

impl Resampler {
    pub const ALL: [Resampler; 7] = [
        Resampler::None,
        Resampler::Smote,
        Resampler::Adasyn,
        Resampler::Tomek,
        Resampler::Enn,
        Resampler::SmoteTomek,
        Resampler::SmoteEnn,
    ];

    /// The five variants compared in the results table.
    pub const TABLE: [Resampler; 5] = [
        Resampler::None,
        Resampler::Smote,
        Resampler::Adasyn,
        Resampler::SmoteTomek,
        Resampler::SmoteEnn,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Resampler::None => "none",
            Resampler::Smote => "smote",
            Resampler::Adasyn => "adasyn",
            Resampler::Tomek => "tomek",
            Resampler::Enn => "enn",
            Resampler::SmoteTomek => "smote-tomek",
            Resampler::SmoteEnn => "smote-enn",
        }
    }

    /// Suffix used in report row labels, e.g. `RF + SMOTE-TL`.
    pub fn label(self) -> Option<&'static str> {
        match self {
            Resampler::None => None,
            Resampler::Smote => Some("SMOTE"),
            Resampler::Adasyn => Some("ADASYN"),
            Resampler::Tomek => Some("TL"),
            Resampler::Enn => Some("ENN"),
            Resampler::SmoteTomek => Some("SMOTE-TL"),
            Resampler::SmoteEnn => Some("SMOTE-ENN"),
        }
    }

    pub fn apply<F: Scalar>(
        self,
        data: &LabeledMatrix<F>,
        seed: u64,
    ) -> Result<ResampleOutcome<F>, ResampleError> {
        match self {
            Resampler::None => Ok(ResampleOutcome::unchanged(data)),
            Resampler::Smote => smote(data, SMOTE_K, seed),
            Resampler::Adasyn => adasyn(data, ADASYN_K, seed),
            Resampler::Tomek => Ok(tomek_clean(data)),
            Resampler::Enn => enn_edit(data, ENN_K),
            Resampler::SmoteTomek => smote_tomek(data, seed),
            Resampler::SmoteEnn => smote_enn(data, seed),
        }
    }

    /// Convenience wrapper over raw parts.
    pub fn apply_parts<F: Scalar>(
        self,
        x: ArrayView2<F>,
        y: &[u8],
        seed: u64,
    ) -> Result<(Array2<F>, Vec<u8>), ResampleError> {
        let data = LabeledMatrix::new(x.to_owned(), y.to_vec())?;
        let out = self.apply(&data, seed)?;
        Ok((out.x, out.y))
    }
}

impl fmt::Display for Resampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Resampler {
    type Err = ResampleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Resampler::ALL
            .into_iter()
            .find(|r| r.token() == s)
            .ok_or_else(|| ResampleError::UnknownStrategy(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn blobs(n_min: usize, n_maj: usize, seed: u64) -> LabeledMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = n_min + n_maj;
        let y: Vec<u8> = (0..n).map(|i| u8::from(i < n_min)).collect();
        let x = Array2::from_shape_fn((n, 2), |(i, _)| {
            rng.gen_range(-1.0..1.0) + if i < n_min { 1.0 } else { 0.0 }
        });
        LabeledMatrix::new(x, y).unwrap()
    }

    #[test]
    fn smote_counts_and_balance() {
        let d = blobs(40, 360, 1);
        let out = smote(&d, 5, 7).unwrap();
        assert_eq!(out.synthetic_rows.len(), 320);
        let bal = LabeledMatrix { x: out.x.clone(), y: out.y.clone() }.counts();
        assert_eq!(bal, (360, 360));
        assert_eq!(out.x.slice(ndarray::s![..400, ..]), d.x);
    }

    #[test]
    fn smote_on_balanced_input_is_identity() {
        let d = blobs(20, 20, 2);
        let out = smote(&d, 5, 0).unwrap();
        assert!(out.synthetic_rows.is_empty());
        assert_eq!(out.x, d.x);
    }

    #[test]
    fn smote_requires_k_plus_one_minority() {
        let d = blobs(5, 30, 3);
        assert_eq!(
            smote(&d, 5, 0).unwrap_err(),
            ResampleError::TooFewMinority { strategy: "smote", needed: 6, found: 5 }
        );
    }

    #[test]
    fn smote_is_seed_deterministic_and_f32_works() {
        let d = blobs(10, 50, 4);
        assert_eq!(smote(&d, 5, 9).unwrap(), smote(&d, 5, 9).unwrap());
        let d32 = LabeledMatrix::new(d.x.mapv(|v| v as f32), d.y.clone()).unwrap();
        assert_eq!(smote(&d32, 5, 9).unwrap().synthetic_rows.len(), 40);
    }

    #[test]
    fn adasyn_separated_clusters_fail() {
        let mut x = Array2::zeros((30, 1));
        let mut y = vec![0u8; 30];
        for i in 0..8 {
            x[[i, 0]] = 100.0 + i as f64;
            y[i] = 1;
        }
        for i in 8..30 {
            x[[i, 0]] = i as f64;
        }
        let d = LabeledMatrix::new(x, y).unwrap();
        assert_eq!(adasyn(&d, 5, 0).unwrap_err(), ResampleError::NoBorderline);
    }

    #[test]
    fn adasyn_favors_the_surrounded_point() {
        // minority: six points in a tight group plus one point at 50 inside
        // the majority
        let mut vals = vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 50.0];
        let mut y = vec![1u8; 7];
        for i in 0..20 {
            vals.push(48.0 + 0.2 * i as f64);
            y.push(0);
        }
        let n = vals.len();
        let d = LabeledMatrix::new(Array2::from_shape_vec((n, 1), vals).unwrap(), y).unwrap();
        let alloc = adasyn_allocation(&d, 5).unwrap();
        assert!(alloc[6] > alloc[0]);
        let g = 20 - 7;
        let total: usize = alloc.iter().sum();
        assert!((total as i64 - g as i64).unsigned_abs() as usize <= 7);
    }

    #[test]
    fn tomek_hand_example() {
        let d = LabeledMatrix::new(array![[0.0_f64], [1.0], [3.0]], vec![1, 0, 0]).unwrap();
        assert_eq!(tomek_links(&d), vec![(0, 1)]);
        let out = tomek_clean(&d);
        assert_eq!(out.removed_rows, vec![1]);
        assert_eq!(out.x, array![[0.0], [3.0]]);
    }

    #[test]
    fn tomek_wide_margin_has_no_links() {
        let d = LabeledMatrix::new(
            array![[0.0_f64], [0.1], [0.2], [10.0], [10.1], [10.2], [10.3]],
            vec![1, 1, 1, 0, 0, 0, 0],
        )
        .unwrap();
        assert!(tomek_links(&d).is_empty());
    }

    #[test]
    fn enn_vote_rule() {
        // row 3 (majority) sits between two minority rows and one majority
        let d = LabeledMatrix::new(
            array![[0.0_f64], [0.2], [5.0], [0.1], [5.1], [5.2], [5.3], [5.4]],
            vec![1, 1, 0, 0, 0, 0, 0, 0],
        )
        .unwrap();
        let out = enn_edit(&d, 3).unwrap();
        assert_eq!(out.removed_rows, vec![3]);
        assert_eq!(out.edit_scope, EditScope::MajorityOnly);
    }

    #[test]
    fn hybrids_clean_the_combined_set() {
        let d = blobs(30, 150, 5);
        let over = smote(&d, SMOTE_K, 3).unwrap().into_labeled();
        let st = smote_tomek(&d, 3).unwrap();
        let links = tomek_links(&over);
        assert!(!links.is_empty());
        for (a, b) in links {
            assert!(st.removed_rows.contains(&a) || st.removed_rows.contains(&b));
        }
        let removed_synthetic = st.removed_rows.iter().filter(|&&i| i >= d.len()).count();
        assert_eq!(st.synthetic_rows.len(), over.len() - d.len() - removed_synthetic);
        let se = smote_enn(&d, 3).unwrap();
        assert_eq!(se.edit_scope, EditScope::BothClasses);
        assert_eq!(smote_enn(&d, 3).unwrap(), se);
    }

    #[test]
    fn tokens_round_trip() {
        for r in Resampler::ALL {
            assert_eq!(r.token().parse::<Resampler>().unwrap(), r);
        }
        assert!("bogus".parse::<Resampler>().is_err());
    }
}
