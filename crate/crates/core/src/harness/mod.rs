//! End-to-end experiment: design, simulation, dataset, exploratory
//! analysis, tuning, training, evaluation and reporting, driven by one
//! [`ExperimentConfig`] and one master seed.
//!
//! The stage functions here are also what the command-line subcommands
//! call, so a standalone stage reproduces the pipeline's output for the
//! same master seed.

mod config;
mod manifest;
mod pipeline;

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{train_test_split, Dataset};
use crate::doe::{lhs_sample, registry, DesignMatrix, SimCase};
use crate::evalreport::{confusion_counts, measure_inference_time, metrics_from_confusion, MetricsRow};
use crate::models::grid::GridPoint;
use crate::models::{
    fit, grid_search_cv, prepare_training, Family, GridMode, GridSpec, ModelArtifact, ModelSpec,
};
use crate::resample::Resampler;
use crate::seed::derive_seed;
use crate::sim::{run_engagement, RunLabel, RunSummary, ShotEvent};

pub use config::{ExperimentConfig, KEYS};
pub use manifest::{
    combine, file_digest, sha256_hex, still_valid, ArtifactManifest, OutputRecord, StageRecord,
    MANIFEST_FILE,
};
pub use pipeline::{files, model_file, run_pipeline};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("stage `{stage}` failed: {detail}")]
    Stage { stage: String, detail: String },
}

impl HarnessError {
    pub fn stage(stage: &str, detail: impl std::fmt::Display) -> Self {
        HarnessError::Stage {
            stage: stage.to_string(),
            detail: detail.to_string(),
        }
    }

    /// Process exit code: 2 for configuration errors, 3 for stage failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Stage { .. } => 3,
        }
    }
}

/// Latin Hypercube design over the full variable registry, rounded to the
/// precision `design.csv` stores.
pub fn design_stage(n_cases: usize, master_seed: u64) -> Result<DesignMatrix, HarnessError> {
    lhs_sample(&registry(), n_cases, derive_seed(master_seed, ["doe".into()]))
        .map(|d| d.quantized())
        .map_err(|e| HarnessError::stage("doe", e))
}

/// Seed of replicate `rep` of case `case`.
pub fn run_seed(master_seed: u64, case: usize, rep: usize) -> u64 {
    derive_seed(master_seed, ["sim".into(), case.into(), rep.into()])
}

/// Runs every (case, replicate) pair; results are in run-id order
/// whatever the scheduling.
pub fn simulate_stage(
    cases: &[SimCase],
    seeds_per_case: usize,
    master_seed: u64,
) -> (Vec<ShotEvent>, Vec<RunSummary>) {
    let runs: Vec<(usize, usize)> = (0..cases.len())
        .flat_map(|c| (0..seeds_per_case).map(move |r| (c, r)))
        .collect();
    let outputs: Vec<_> = runs
        .par_iter()
        .map(|&(c, r)| {
            let label = RunLabel {
                run_id: (c * seeds_per_case + r) as u64,
                case_index: c,
            };
            run_engagement(&cases[c], run_seed(master_seed, c, r), label)
        })
        .collect();
    let mut events = Vec::new();
    let mut summaries = Vec::with_capacity(outputs.len());
    for o in outputs {
        events.extend(o.events);
        summaries.push(o.summary);
    }
    (events, summaries)
}

/// Raw features and labels of a seeded train/test partition.
#[derive(Debug, Clone)]
pub struct Split {
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
    pub x_train: Array2<f64>,
    pub y_train: Vec<u8>,
    pub x_test: Array2<f64>,
    pub y_test: Vec<u8>,
}

pub fn split_dataset(ds: &Dataset, test_fraction: f64, master_seed: u64) -> Result<Split, HarnessError> {
    let (train_idx, test_idx) =
        train_test_split(ds.len(), test_fraction, derive_seed(master_seed, ["split".into()]))
            .map_err(|e| HarnessError::stage("split", e))?;
    let x = ds.features::<f64>();
    let y = ds.labels();
    let pick = |idx: &[usize]| (x.select(Axis(0), idx), idx.iter().map(|&i| y[i]).collect());
    let (x_train, y_train) = pick(&train_idx);
    let (x_test, y_test) = pick(&test_idx);
    Ok(Split {
        train_idx,
        test_idx,
        x_train,
        y_train,
        x_test,
        y_test,
    })
}

/// Outcome of tuning one family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneRecord {
    pub family: Family,
    pub grid: GridMode,
    pub resampler: Resampler,
    pub best: ModelSpec,
    /// Cross-validated mean F1 of `best`; absent when no search ran.
    pub mean_f1: Option<f64>,
    pub points: Vec<GridPoint>,
}

/// Grid search on the training partition. `fixed-best` skips the search.
pub fn tune_family(
    family: Family,
    mode: GridMode,
    resampler: Resampler,
    x_train: &Array2<f64>,
    y_train: &[u8],
    folds: usize,
    master_seed: u64,
) -> Result<TuneRecord, HarnessError> {
    if mode == GridMode::FixedBest {
        return Ok(TuneRecord {
            family,
            grid: mode,
            resampler,
            best: ModelSpec::tuned(family),
            mean_f1: None,
            points: Vec::new(),
        });
    }
    let seed = derive_seed(master_seed, ["tune".into(), family.token().into(), resampler.token().into()]);
    let grid = GridSpec::for_mode(family, mode);
    let r = grid_search_cv(&grid, x_train.view(), y_train, folds, resampler, seed)
        .map_err(|e| HarnessError::stage("tune", format!("{family}: {e}")))?;
    Ok(TuneRecord {
        family,
        grid: mode,
        resampler,
        best: r.best().spec.clone(),
        mean_f1: Some(r.best().mean_f1),
        points: r.points,
    })
}

/// Scales and resamples the training partition, then fits `spec`.
pub fn train_model(
    spec: &ModelSpec,
    resampler: Resampler,
    x_train: &Array2<f64>,
    y_train: &[u8],
    master_seed: u64,
) -> Result<ModelArtifact<f64>, HarnessError> {
    let tag = |stage: &'static str| {
        derive_seed(
            master_seed,
            [stage.into(), spec.family.token().into(), resampler.token().into()],
        )
    };
    let what = || format!("{} + {}", spec.family, resampler);
    let prepared = prepare_training(spec.family, x_train.view(), y_train, resampler, tag("resample"))
        .map_err(|e| HarnessError::stage("train", format!("{}: {e}", what())))?;
    let fit_seed = tag("fit");
    let model = fit(spec, prepared.x.view(), &prepared.y, fit_seed)
        .map_err(|e| HarnessError::stage("train", format!("{}: {e}", what())))?;
    Ok(ModelArtifact::new(
        spec.params.clone(),
        resampler.token(),
        prepared.scaler,
        fit_seed,
        model,
    ))
}

/// Test-set metrics and median whole-test-set inference time. Call from a
/// single thread with no fits running.
pub fn evaluate_model(
    artifact: &ModelArtifact<f64>,
    x_test: &Array2<f64>,
    y_test: &[u8],
    repeats: usize,
) -> Result<MetricsRow, HarnessError> {
    let resampler: Resampler = artifact
        .resampler
        .parse()
        .map_err(|e| HarnessError::stage("evaluate", e))?;
    let pred = artifact.predict_raw(x_test.view());
    let c = confusion_counts(y_test, &pred).map_err(|e| HarnessError::stage("evaluate", e))?;
    let m = metrics_from_confusion(c).map_err(|e| HarnessError::stage("evaluate", e))?;
    let ms = measure_inference_time(repeats, || artifact.predict_raw(x_test.view()));
    Ok(MetricsRow::new(artifact.family, resampler, &m, ms))
}

/// Runs `work` on a pool of `jobs` threads.
pub fn with_pool<T: Send>(jobs: usize, work: impl FnOnce() -> T + Send) -> Result<T, HarnessError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(work))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doe::decode_design;

    #[test]
    fn simulation_is_independent_of_thread_count() {
        let design = design_stage(3, 5).unwrap();
        let cases = decode_design(&design).unwrap();
        let one = with_pool(1, || simulate_stage(&cases, 2, 5)).unwrap();
        let four = with_pool(4, || simulate_stage(&cases, 2, 5)).unwrap();
        assert_eq!(one, four);
        assert_eq!(one.1.len(), 6);
        assert!(one.1.iter().enumerate().all(|(i, s)| s.run_id == i as u64));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(HarnessError::Config("x".into()).exit_code(), 2);
        assert_eq!(HarnessError::stage("eda", "boom").exit_code(), 3);
    }
}
