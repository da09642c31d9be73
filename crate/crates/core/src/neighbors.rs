//! Exact brute-force nearest-neighbor search. Distances are Euclidean and
//! ties go to the lower row index, so results are fully deterministic.

use std::cmp::Ordering;

use ndarray::ArrayView2;
use thiserror::Error;

use crate::scalar::{sq_dist, Scalar};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("k = {k} neighbors requested from {n} rows")]
pub struct NeighborError {
    pub k: usize,
    pub n: usize,
}

fn by_distance_then_index<F: Scalar>(a: &(F, usize), b: &(F, usize)) -> Ordering {
    a.0.partial_cmp(&b.0)
        .unwrap_or(Ordering::Equal)
        .then(a.1.cmp(&b.1))
}

/// The `k` rows of `x` nearest to `query`, nearest first.
///
/// Only rows listed in `candidates` are considered (all rows when `None`),
/// and `exclude` is skipped. Returns fewer than `k` indices when fewer
/// candidates exist.
pub fn nearest<F: Scalar>(
    x: ArrayView2<F>,
    query: &[F],
    candidates: Option<&[usize]>,
    k: usize,
    exclude: Option<usize>,
) -> Vec<usize> {
    let dist = |i: usize| -> (F, usize) {
        let row = x.row(i);
        let d = match row.as_slice() {
            Some(s) => sq_dist(s, query),
            None => sq_dist(&row.to_vec(), query),
        };
        (d, i)
    };
    let mut pool: Vec<(F, usize)> = match candidates {
        Some(c) => c.iter().copied().filter(|&i| Some(i) != exclude).map(dist).collect(),
        None => (0..x.nrows()).filter(|&i| Some(i) != exclude).map(dist).collect(),
    };
    if k == 0 {
        return Vec::new();
    }
    if k < pool.len() {
        pool.select_nth_unstable_by(k - 1, by_distance_then_index);
        pool.truncate(k);
    }
    pool.sort_unstable_by(by_distance_then_index);
    pool.into_iter().map(|(_, i)| i).collect()
}

/// The `k` nearest rows to row `row` of `x`, optionally excluding the row
/// itself.
pub fn knn_query<F: Scalar>(
    x: ArrayView2<F>,
    row: usize,
    k: usize,
    exclude_self: bool,
) -> Result<Vec<usize>, NeighborError> {
    let n = x.nrows();
    if k >= n {
        return Err(NeighborError { k, n });
    }
    let q = x.row(row).to_vec();
    Ok(nearest(x, &q, None, k, exclude_self.then_some(row)))
}
