//! Confusion counts, the four headline metrics and inference timing.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("{truth} true labels but {pred} predictions")]
    LengthMismatch { truth: usize, pred: usize },
    #[error("no rows to score")]
    Empty,
}

/// Positive class is label 1 (KILL).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

pub fn confusion_counts(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionCounts, MetricsError> {
    if y_true.len() != y_pred.len() {
        return Err(MetricsError::LengthMismatch {
            truth: y_true.len(),
            pred: y_pred.len(),
        });
    }
    let mut c = ConfusionCounts::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t > 0, p > 0) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when a zero denominator forced a metric to 0.
    pub zero_division: bool,
}

fn ratio(num: usize, den: usize, flag: &mut bool) -> f64 {
    if den == 0 {
        *flag = true;
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean of precision and recall, 0 when both are 0.
pub fn f1_from(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn metrics_from_confusion(c: ConfusionCounts) -> Result<Metrics, MetricsError> {
    if c.total() == 0 {
        return Err(MetricsError::Empty);
    }
    let mut zero_division = false;
    let accuracy = (c.tp + c.tn) as f64 / c.total() as f64;
    let precision = ratio(c.tp, c.tp + c.fp, &mut zero_division);
    let recall = ratio(c.tp, c.tp + c.fn_, &mut zero_division);
    if precision + recall == 0.0 {
        zero_division = true;
    }
    if zero_division {
        log::debug!("zero division in metrics for {c:?}; affected values set to 0");
    }
    Ok(Metrics {
        accuracy,
        precision,
        recall,
        f1: f1_from(precision, recall),
        zero_division,
    })
}

/// F1 of a prediction vector; 0 for empty input.
pub fn f1_score(y_true: &[u8], y_pred: &[u8]) -> Result<f64, MetricsError> {
    let c = confusion_counts(y_true, y_pred)?;
    Ok(metrics_from_confusion(c)?.f1)
}

/// Median wall-clock milliseconds of `repeats` calls to `pass`, after one
/// untimed warm-up call.
pub fn measure_inference_time<T>(repeats: usize, mut pass: impl FnMut() -> T) -> f64 {
    std::hint::black_box(pass());
    let mut times: Vec<f64> = (0..repeats.max(1))
        .map(|_| {
            let t0 = Instant::now();
            std::hint::black_box(pass());
            t0.elapsed().as_secs_f64() * 1e3
        })
        .collect();
    times.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let m = times.len();
    let median = if m % 2 == 1 {
        times[m / 2]
    } else {
        0.5 * (times[m / 2 - 1] + times[m / 2])
    };
    median.max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn enumeration() {
        let c = confusion_counts(&[1, 1, 0, 0], &[1, 0, 1, 0]).unwrap();
        assert_eq!(c, ConfusionCounts { tp: 1, fp: 1, fn_: 1, tn: 1 });
        let perfect = confusion_counts(&[1, 0, 1], &[1, 0, 1]).unwrap();
        assert_eq!((perfect.fp, perfect.fn_), (0, 0));
        assert!(confusion_counts(&[1], &[]).is_err());
    }

    #[test]
    fn random_pairs_match_tally() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t: Vec<u8> = (0..1000).map(|_| rng.gen_range(0..2)).collect();
        let p: Vec<u8> = (0..1000).map(|_| rng.gen_range(0..2)).collect();
        let c = confusion_counts(&t, &p).unwrap();
        let count = |a: u8, b: u8| t.iter().zip(&p).filter(|(&x, &y)| x == a && y == b).count();
        assert_eq!(c, ConfusionCounts { tp: count(1, 1), fp: count(0, 1), fn_: count(1, 0), tn: count(0, 0) });
        assert_eq!(c.total(), 1000);
    }

    #[test]
    fn published_f1_pairs() {
        assert_eq!(format!("{:.3}", f1_from(0.686, 0.262)), "0.379");
        assert_eq!(format!("{:.3}", f1_from(0.415, 0.528)), "0.465");
    }

    #[test]
    fn zero_division_is_flagged() {
        let m = metrics_from_confusion(ConfusionCounts { tp: 0, fp: 0, fn_: 12, tn: 88 }).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
        assert!(m.zero_division);
        assert_eq!(m.accuracy, 0.88);
        assert_eq!(metrics_from_confusion(ConfusionCounts::default()), Err(MetricsError::Empty));
    }

    #[test]
    fn timing_is_positive() {
        let t = measure_inference_time(3, || (0..1000).sum::<u64>());
        assert!(t.is_finite() && t > 0.0);
        let mut calls = 0;
        measure_inference_time(1, || calls += 1);
        assert_eq!(calls, 2);
    }
}
