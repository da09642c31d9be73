use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use shotlab::dataset::{header, write_eda, Dataset};
use shotlab::doe::{decode_design, DesignMatrix};
use shotlab::evalreport::{render_correlation_svg, render_report, MetricsRow};
use shotlab::harness::{
    design_stage, evaluate_model, run_pipeline, simulate_stage, split_dataset, train_model,
    tune_family, with_pool, ExperimentConfig, HarnessError, TuneRecord,
};
use shotlab::models::{Family, GridMode, Hyperparams, ModelArtifact, ModelSpec};
use shotlab::resample::Resampler;
use shotlab::sim::{read_shots_csv, write_runs_csv, write_shots_csv};

/// Constructive BVR engagement simulation and missile-shot classification.
#[derive(Parser)]
#[command(name = "bvr-shotlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage under one experiment configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Draw a Latin Hypercube design.
    Doe {
        #[arg(long, default_value_t = 24)]
        n_cases: usize,
        #[arg(long, default_value_t = 2023)]
        seed: u64,
        #[arg(long, default_value = "design.csv")]
        out: PathBuf,
    },
    /// Simulate every design case with several seeds.
    Simulate {
        #[arg(long)]
        design: PathBuf,
        #[arg(long, default_value_t = 5)]
        seeds_per_case: usize,
        #[arg(long, default_value_t = 2023)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Turn blue launches into the learning dataset.
    BuildDataset {
        #[arg(long)]
        shots: PathBuf,
        /// Design the shots were simulated from; supplies the case variables.
        #[arg(long)]
        design: PathBuf,
        #[arg(long, default_value = "dataset.csv")]
        out: PathBuf,
    },
    /// Exploratory statistics, correlations and the heatmap.
    Eda {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Grid search with k-fold cross-validation on the training split.
    Tune {
        #[arg(long)]
        family: String,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "none")]
        resampler: String,
        #[arg(long, default_value_t = 2023)]
        seed: u64,
        #[arg(long, default_value = "full")]
        grid: String,
        /// Shorthand for `--grid reduced`.
        #[arg(long)]
        reduced_grid: bool,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, default_value_t = 0.15)]
        test_fraction: f64,
        #[arg(long, default_value = "params.json")]
        out: PathBuf,
    },
    /// Fit one model on the (resampled) training split.
    Train {
        #[arg(long)]
        family: String,
        /// Output of `tune`, or a JSON object of hyperparameter overrides.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "none")]
        resampler: String,
        #[arg(long, default_value_t = 2023)]
        seed: u64,
        #[arg(long, default_value_t = 0.15)]
        test_fraction: f64,
        #[arg(long, default_value = "model.json")]
        out: PathBuf,
    },
    /// Score a model artifact on the test split.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 2023)]
        seed: u64,
        #[arg(long, default_value_t = 0.15)]
        test_fraction: f64,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long, default_value = "metrics.json")]
        out: PathBuf,
    },
    /// Render results.csv, results.md and timings.csv from metrics files.
    Report {
        #[arg(long, num_args = 1.., required = true)]
        metrics: Vec<PathBuf>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn config_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 2, error: e.into() }
}

fn stage_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 3, error: e.into() }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Failure {
            code: e.exit_code() as u8,
            error: e.into(),
        }
    }
}

fn parse_family(s: &str) -> Result<Family, Failure> {
    s.parse().map_err(config_err)
}

fn parse_resampler(s: &str) -> Result<Resampler, Failure> {
    s.parse().map_err(config_err)
}

fn load_dataset(path: &Path) -> Result<Dataset, Failure> {
    Dataset::load(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(stage_err)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(stage_err)?;
    fs::write(path, text + "\n")
        .with_context(|| format!("writing {}", path.display()))
        .map_err(stage_err)
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(stage_err)
}

fn spec_from_params(family: Family, path: Option<&Path>) -> Result<ModelSpec, Failure> {
    let Some(path) = path else {
        return Ok(ModelSpec::tuned(family));
    };
    let text = read_text(path)?;
    if let Ok(t) = serde_json::from_str::<TuneRecord>(&text) {
        if t.family != family {
            return Err(config_err(anyhow!(
                "{} was tuned for {}, not {family}",
                path.display(),
                t.family
            )));
        }
        return Ok(t.best);
    }
    let overrides: Hyperparams = serde_json::from_str(&text)
        .with_context(|| format!("{}: expected tune output or a hyperparameter object", path.display()))
        .map_err(config_err)?;
    ModelSpec::tuned(family)
        .with_overrides(&overrides)
        .map_err(config_err)
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let manifest = run_pipeline(&cfg)?;
            let executed = manifest.executed();
            if executed.is_empty() {
                println!("all stages up to date in {}", cfg.artifact_dir.display());
            } else {
                println!("ran {} in {}", executed.join(", "), cfg.artifact_dir.display());
            }
        }
        Command::Doe { n_cases, seed, out } => {
            if n_cases == 0 {
                return Err(config_err(anyhow!("--n-cases must be positive")));
            }
            design_stage(n_cases, seed)?.save(&out).map_err(stage_err)?;
            println!("wrote {} cases to {}", n_cases, out.display());
        }
        Command::Simulate {
            design,
            seeds_per_case,
            seed,
            out_dir,
            jobs,
        } => {
            if seeds_per_case == 0 {
                return Err(config_err(anyhow!("--seeds-per-case must be positive")));
            }
            let d = DesignMatrix::load(&design)
                .with_context(|| format!("reading {}", design.display()))
                .map_err(stage_err)?;
            let cases = decode_design(&d).map_err(stage_err)?;
            let jobs = jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let (events, runs) = with_pool(jobs.max(1), || simulate_stage(&cases, seeds_per_case, seed))?;
            fs::create_dir_all(&out_dir).map_err(stage_err)?;
            let f = fs::File::create(out_dir.join("shots.csv")).map_err(stage_err)?;
            write_shots_csv(BufWriter::new(f), &events).map_err(stage_err)?;
            let f = fs::File::create(out_dir.join("runs.csv")).map_err(stage_err)?;
            write_runs_csv(BufWriter::new(f), &runs).map_err(stage_err)?;
            println!("{} runs, {} launches", runs.len(), events.len());
        }
        Command::BuildDataset { shots, design, out } => {
            let d = DesignMatrix::load(&design)
                .with_context(|| format!("reading {}", design.display()))
                .map_err(stage_err)?;
            let cases = decode_design(&d).map_err(stage_err)?;
            let f = fs::File::open(&shots)
                .with_context(|| format!("reading {}", shots.display()))
                .map_err(stage_err)?;
            let events = read_shots_csv(BufReader::new(f)).map_err(stage_err)?;
            let ds = Dataset::from_events(&events, &cases).map_err(stage_err)?;
            ds.save(&out).map_err(stage_err)?;
            let kills = ds.labels().iter().filter(|&&k| k == 1).count();
            println!("{} blue launches, {} kills", ds.len(), kills);
        }
        Command::Eda { dataset, out_dir } => {
            let ds = load_dataset(&dataset)?;
            let art = write_eda(&ds, &out_dir).map_err(stage_err)?;
            let svg = render_correlation_svg(&header(), art.correlation.matrix.view()).map_err(stage_err)?;
            fs::write(out_dir.join("correlation.svg"), svg).map_err(stage_err)?;
            for w in &art.warnings {
                eprintln!("warning: {w}");
            }
            println!("wrote {}", art.report.display());
        }
        Command::Tune {
            family,
            dataset,
            resampler,
            seed,
            grid,
            reduced_grid,
            folds,
            test_fraction,
            out,
        } => {
            let family = parse_family(&family)?;
            let resampler = parse_resampler(&resampler)?;
            let mode: GridMode = if reduced_grid {
                GridMode::Reduced
            } else {
                grid.parse().map_err(config_err)?
            };
            let ds = load_dataset(&dataset)?;
            let split = split_dataset(&ds, test_fraction, seed)?;
            let rec = tune_family(family, mode, resampler, &split.x_train, &split.y_train, folds, seed)?;
            write_json(&out, &rec)?;
            match rec.mean_f1 {
                Some(f1) => println!("{}: mean F1 {f1:.4}", rec.best.describe()),
                None => println!("{}", rec.best.describe()),
            }
        }
        Command::Train {
            family,
            params,
            dataset,
            resampler,
            seed,
            test_fraction,
            out,
        } => {
            let family = parse_family(&family)?;
            let resampler = parse_resampler(&resampler)?;
            let spec = spec_from_params(family, params.as_deref())?;
            let ds = load_dataset(&dataset)?;
            let split = split_dataset(&ds, test_fraction, seed)?;
            let artifact = train_model(&spec, resampler, &split.x_train, &split.y_train, seed)?;
            artifact
                .save(&out)
                .with_context(|| format!("writing {}", out.display()))
                .map_err(stage_err)?;
            println!("wrote {}", out.display());
        }
        Command::Evaluate {
            model,
            dataset,
            seed,
            test_fraction,
            repeats,
            out,
        } => {
            let artifact = ModelArtifact::<f64>::load(&model).map_err(stage_err)?;
            let ds = load_dataset(&dataset)?;
            let split = split_dataset(&ds, test_fraction, seed)?;
            let row = evaluate_model(&artifact, &split.x_test, &split.y_test, repeats)?;
            write_json(&out, &row)?;
            println!(
                "{}: acc {:.3} prec {:.3} rec {:.3} f1 {:.3} ({:.2} ms)",
                row.label(),
                row.accuracy,
                row.precision,
                row.recall,
                row.f1,
                row.inference_time_ms
            );
        }
        Command::Report { metrics, out_dir } => {
            let mut rows: Vec<MetricsRow> = Vec::new();
            for p in &metrics {
                let text = read_text(p)?;
                match serde_json::from_str::<Vec<MetricsRow>>(&text) {
                    Ok(v) => rows.extend(v),
                    Err(_) => rows.push(
                        serde_json::from_str(&text)
                            .with_context(|| format!("{}: not a metrics file", p.display()))
                            .map_err(stage_err)?,
                    ),
                }
            }
            let files = render_report(&rows, &out_dir).map_err(stage_err)?;
            println!("wrote {}", files.results_csv.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
