//! Stage runner with digest-based caching.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::manifest::{combine, file_digest, still_valid, ArtifactManifest, OutputRecord, StageRecord};
use super::{
    design_stage, evaluate_model, simulate_stage, split_dataset, train_model, tune_family,
    with_pool, ExperimentConfig, HarnessError, TuneRecord,
};
use crate::dataset::{header, write_eda, Dataset};
use crate::doe::{decode_design, registry, DesignMatrix};
use crate::evalreport::{render_correlation_svg, render_report, MetricsRow};
use crate::models::{Family, ModelArtifact};
use crate::resample::Resampler;
use crate::sim::{read_shots_csv, write_runs_csv, write_shots_csv};

/// File names inside the artifact directory.
pub mod files {
    pub const DESIGN: &str = "design.csv";
    pub const SHOTS: &str = "shots.csv";
    pub const RUNS: &str = "runs.csv";
    pub const DATASET: &str = "dataset.csv";
    pub const EDA_REPORT: &str = "eda_report.md";
    pub const EDA_STATS: &str = "eda_stats.csv";
    pub const CORRELATION_CSV: &str = "correlation.csv";
    pub const CORRELATION_SVG: &str = "correlation.svg";
    pub const TUNING: &str = "tuning.json";
    pub const MODELS_DIR: &str = "models";
    pub const METRICS: &str = "metrics.json";
    pub const RESULTS_CSV: &str = "results.csv";
    pub const RESULTS_MD: &str = "results.md";
    pub const TIMINGS: &str = "timings.csv";
}

use files::*;

pub fn model_file(family: Family, resampler: Resampler) -> PathBuf {
    Path::new(MODELS_DIR).join(format!("{}-{}.json", family.token(), resampler.token()))
}

struct Runner<'a> {
    dir: &'a Path,
    prev: Option<ArtifactManifest>,
    manifest: ArtifactManifest,
}

impl Runner<'_> {
    fn digest(&self, rel: &str) -> String {
        self.manifest
            .digest_of(Path::new(rel))
            .unwrap_or_default()
            .to_string()
    }

    fn stage(
        &mut self,
        name: &str,
        mut parts: Vec<(&str, String)>,
        outputs: Vec<PathBuf>,
        body: impl FnOnce(&Path) -> Result<(), HarnessError>,
    ) -> Result<(), HarnessError> {
        parts.insert(0, ("stage", name.to_string()));
        let input_digest = combine(&parts);
        if let Some(prev) = self.prev.as_ref().and_then(|m| m.stage(name)) {
            let same_outputs = prev.outputs.iter().map(|o| &o.path).eq(outputs.iter());
            if same_outputs && still_valid(prev, &input_digest, self.dir) {
                log::info!("stage {name}: inputs unchanged, reusing outputs");
                let mut rec = prev.clone();
                rec.reused = true;
                self.manifest.stages.push(rec);
                return Ok(());
            }
        }
        log::info!("stage {name}: running");
        body(self.dir)?;
        let outputs = outputs
            .into_iter()
            .map(|p| {
                let sha256 = file_digest(&self.dir.join(&p))
                    .map_err(|e| HarnessError::stage(name, format!("{}: {e}", p.display())))?;
                Ok(OutputRecord { path: p, sha256 })
            })
            .collect::<Result<Vec<_>, HarnessError>>()?;
        self.manifest.stages.push(StageRecord {
            name: name.to_string(),
            input_digest,
            outputs,
            reused: false,
        });
        self.manifest
            .save(self.dir)
            .map_err(|e| HarnessError::stage(name, format!("writing manifest: {e}")))
    }
}

fn io_err<'a>(stage: &'static str, path: &'a Path) -> impl Fn(std::io::Error) -> HarnessError + 'a {
    move |e| HarnessError::stage(stage, format!("{}: {e}", path.display()))
}

fn load_dataset(stage: &'static str, dir: &Path) -> Result<Dataset, HarnessError> {
    let p = dir.join(DATASET);
    Dataset::load(&p).map_err(|e| HarnessError::stage(stage, format!("{}: {e}", p.display())))
}

fn list_tokens<T>(items: &[T], token: impl Fn(&T) -> &'static str) -> String {
    items.iter().map(token).collect::<Vec<_>>().join(",")
}

/// Runs every stage in order, reusing any stage whose inputs are unchanged
/// since the manifest in the artifact directory was written.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<ArtifactManifest, HarnessError> {
    cfg.validate()?;
    let dir = cfg.artifact_dir.as_path();
    fs::create_dir_all(dir.join(MODELS_DIR))
        .map_err(|e| HarnessError::Config(format!("artifact directory {}: {e}", dir.display())))?;
    let mut r = Runner {
        dir,
        prev: ArtifactManifest::load(dir),
        manifest: ArtifactManifest::new(cfg.to_cfg()),
    };
    let seed = cfg.master_seed.to_string();

    r.stage(
        "doe",
        vec![
            ("n_cases", cfg.n_cases.to_string()),
            ("master_seed", seed.clone()),
            ("registry", format!("{:?}", registry())),
        ],
        vec![DESIGN.into()],
        |d| {
            let p = d.join(DESIGN);
            design_stage(cfg.n_cases, cfg.master_seed)?
                .save(&p)
                .map_err(|e| HarnessError::stage("doe", format!("{}: {e}", p.display())))
        },
    )?;

    r.stage(
        "simulate",
        vec![
            ("design", r.digest(DESIGN)),
            ("seeds_per_case", cfg.seeds_per_case.to_string()),
            ("master_seed", seed.clone()),
        ],
        vec![SHOTS.into(), RUNS.into()],
        |d| {
            let p = d.join(DESIGN);
            let design = DesignMatrix::load(&p)
                .map_err(|e| HarnessError::stage("simulate", format!("{}: {e}", p.display())))?;
            let cases = decode_design(&design).map_err(|e| HarnessError::stage("simulate", e))?;
            let (events, runs) =
                with_pool(cfg.jobs, || simulate_stage(&cases, cfg.seeds_per_case, cfg.master_seed))?;
            let shots = d.join(SHOTS);
            let f = fs::File::create(&shots).map_err(io_err("simulate", &shots))?;
            write_shots_csv(std::io::BufWriter::new(f), &events)
                .map_err(|e| HarnessError::stage("simulate", format!("{}: {e}", shots.display())))?;
            let runs_p = d.join(RUNS);
            let f = fs::File::create(&runs_p).map_err(io_err("simulate", &runs_p))?;
            write_runs_csv(std::io::BufWriter::new(f), &runs)
                .map_err(|e| HarnessError::stage("simulate", format!("{}: {e}", runs_p.display())))
        },
    )?;

    r.stage(
        "dataset",
        vec![("shots", r.digest(SHOTS)), ("design", r.digest(DESIGN))],
        vec![DATASET.into()],
        |d| {
            let design = DesignMatrix::load(&d.join(DESIGN)).map_err(|e| HarnessError::stage("dataset", e))?;
            let cases = decode_design(&design).map_err(|e| HarnessError::stage("dataset", e))?;
            let shots = d.join(SHOTS);
            let f = fs::File::open(&shots).map_err(io_err("dataset", &shots))?;
            let events = read_shots_csv(std::io::BufReader::new(f))
                .map_err(|e| HarnessError::stage("dataset", format!("{}: {e}", shots.display())))?;
            let ds = Dataset::from_events(&events, &cases).map_err(|e| HarnessError::stage("dataset", e))?;
            ds.save(&d.join(DATASET)).map_err(|e| HarnessError::stage("dataset", e))
        },
    )?;

    r.stage(
        "eda",
        vec![("dataset", r.digest(DATASET))],
        vec![
            EDA_REPORT.into(),
            EDA_STATS.into(),
            CORRELATION_CSV.into(),
            CORRELATION_SVG.into(),
        ],
        |d| {
            let ds = load_dataset("eda", d)?;
            let art = write_eda(&ds, d).map_err(|e| HarnessError::stage("eda", e))?;
            for w in &art.warnings {
                log::warn!("eda: {w}");
            }
            let svg = render_correlation_svg(&header(), art.correlation.matrix.view())
                .map_err(|e| HarnessError::stage("eda", e))?;
            let p = d.join(CORRELATION_SVG);
            fs::write(&p, svg).map_err(io_err("eda", &p))
        },
    )?;

    let split_parts = || {
        vec![
            ("test_fraction", cfg.test_fraction.to_string()),
            ("master_seed", seed.clone()),
        ]
    };

    let mut parts = vec![
        ("dataset", r.digest(DATASET)),
        ("models", list_tokens(&cfg.models, |f| f.token())),
        ("grid", cfg.grid.to_string()),
        ("cv_folds", cfg.cv_folds.to_string()),
    ];
    parts.extend(split_parts());
    r.stage("tune", parts, vec![TUNING.into()], |d| {
        let ds = load_dataset("tune", d)?;
        let split = split_dataset(&ds, cfg.test_fraction, cfg.master_seed)?;
        let records = with_pool(cfg.jobs, || {
            cfg.models
                .iter()
                .map(|&f| {
                    tune_family(
                        f,
                        cfg.grid,
                        Resampler::None,
                        &split.x_train,
                        &split.y_train,
                        cfg.cv_folds,
                        cfg.master_seed,
                    )
                })
                .collect::<Result<Vec<_>, _>>()
        })??;
        let p = d.join(TUNING);
        let text = serde_json::to_string_pretty(&records).expect("tuning serializes");
        fs::write(&p, text + "\n").map_err(io_err("tune", &p))
    })?;

    let pairs: Vec<(Family, Resampler)> = cfg
        .models
        .iter()
        .flat_map(|&f| cfg.resamplers.iter().map(move |&s| (f, s)))
        .collect();
    let model_paths: Vec<PathBuf> = pairs.iter().map(|&(f, s)| model_file(f, s)).collect();

    let mut parts = vec![
        ("dataset", r.digest(DATASET)),
        ("tuning", r.digest(TUNING)),
        ("resamplers", list_tokens(&cfg.resamplers, |s| s.token())),
    ];
    parts.extend(split_parts());
    r.stage("train", parts, model_paths.clone(), |d| {
        let ds = load_dataset("train", d)?;
        let split = split_dataset(&ds, cfg.test_fraction, cfg.master_seed)?;
        let p = d.join(TUNING);
        let text = fs::read_to_string(&p).map_err(io_err("train", &p))?;
        let tuned: Vec<TuneRecord> =
            serde_json::from_str(&text).map_err(|e| HarnessError::stage("train", format!("{}: {e}", p.display())))?;
        let artifacts = with_pool(cfg.jobs, || {
            pairs
                .par_iter()
                .map(|&(f, s)| {
                    let spec = &tuned
                        .iter()
                        .find(|t| t.family == f)
                        .ok_or_else(|| HarnessError::stage("train", format!("no tuning record for {f}")))?
                        .best;
                    train_model(spec, s, &split.x_train, &split.y_train, cfg.master_seed)
                })
                .collect::<Result<Vec<_>, _>>()
        })??;
        for (a, rel) in artifacts.iter().zip(&model_paths) {
            let p = d.join(rel);
            a.save(&p).map_err(io_err("train", &p))?;
        }
        Ok(())
    })?;

    let mut parts = vec![
        ("dataset", r.digest(DATASET)),
        ("timing_repeats", cfg.timing_repeats.to_string()),
    ];
    let model_digests: Vec<String> = model_paths
        .iter()
        .map(|p| format!("{}={}", p.display(), r.manifest.digest_of(p).unwrap_or_default()))
        .collect();
    parts.push(("models", model_digests.join(";")));
    parts.extend(split_parts());
    r.stage("evaluate", parts, vec![METRICS.into()], |d| {
        let ds = load_dataset("evaluate", d)?;
        let split = split_dataset(&ds, cfg.test_fraction, cfg.master_seed)?;
        let mut rows = Vec::with_capacity(model_paths.len());
        for rel in &model_paths {
            let p = d.join(rel);
            let a = ModelArtifact::<f64>::load(&p)
                .map_err(|e| HarnessError::stage("evaluate", format!("{}: {e}", p.display())))?;
            rows.push(evaluate_model(&a, &split.x_test, &split.y_test, cfg.timing_repeats)?);
        }
        let p = d.join(METRICS);
        let text = serde_json::to_string_pretty(&rows).expect("metrics serialize");
        fs::write(&p, text + "\n").map_err(io_err("evaluate", &p))
    })?;

    r.stage(
        "report",
        vec![("metrics", r.digest(METRICS))],
        vec![RESULTS_CSV.into(), RESULTS_MD.into(), TIMINGS.into()],
        |d| {
            let p = d.join(METRICS);
            let text = fs::read_to_string(&p).map_err(io_err("report", &p))?;
            let rows: Vec<MetricsRow> = serde_json::from_str(&text)
                .map_err(|e| HarnessError::stage("report", format!("{}: {e}", p.display())))?;
            render_report(&rows, d).map_err(|e| HarnessError::stage("report", e))?;
            Ok(())
        },
    )?;

    Ok(r.manifest)
}
