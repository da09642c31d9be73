//! `experiment.cfg`: flat `key = value` lines, `#` comments.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::models::{Family, GridMode};
use crate::resample::Resampler;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n_cases: usize,
    pub seeds_per_case: usize,
    pub master_seed: u64,
    pub resamplers: Vec<Resampler>,
    pub models: Vec<Family>,
    pub grid: GridMode,
    pub artifact_dir: PathBuf,
    pub jobs: usize,
    pub test_fraction: f64,
    pub cv_folds: usize,
    pub timing_repeats: usize,
}

pub const KEYS: [&str; 12] = [
    "preset",
    "n_cases",
    "seeds_per_case",
    "master_seed",
    "resamplers",
    "models",
    "grid",
    "artifact_dir",
    "jobs",
    "test_fraction",
    "cv_folds",
    "timing_repeats",
];

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl ExperimentConfig {
    /// 240 cases x 30 seeds, every resampler in the results table, every
    /// model, full grids.
    pub fn full_scale() -> Self {
        Self {
            n_cases: 240,
            seeds_per_case: 30,
            master_seed: 2023,
            resamplers: Resampler::TABLE.to_vec(),
            models: Family::ALL.to_vec(),
            grid: GridMode::Full,
            artifact_dir: PathBuf::from("artifacts/full"),
            jobs: default_jobs(),
            test_fraction: 0.15,
            cv_folds: 5,
            timing_repeats: 5,
        }
    }

    /// 24 cases x 5 seeds with the tuned hyperparameters.
    pub fn desk() -> Self {
        Self {
            n_cases: 24,
            seeds_per_case: 5,
            resamplers: vec![Resampler::None, Resampler::Smote],
            grid: GridMode::FixedBest,
            artifact_dir: PathBuf::from("artifacts/desk"),
            ..Self::full_scale()
        }
    }

    pub fn preset(name: &str) -> Result<Self, HarnessError> {
        match name {
            "full" => Ok(Self::full_scale()),
            "desk" => Ok(Self::desk()),
            _ => Err(HarnessError::Config(format!("unknown preset `{name}` (full, desk)"))),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.n_cases == 0 || self.seeds_per_case == 0 {
            return bad("n_cases and seeds_per_case must be positive");
        }
        if self.resamplers.is_empty() || self.models.is_empty() {
            return bad("resamplers and models must not be empty");
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad("test_fraction must lie in (0, 1)");
        }
        if self.cv_folds < 2 {
            return bad("cv_folds must be at least 2");
        }
        if self.jobs == 0 || self.timing_repeats == 0 {
            return bad("jobs and timing_repeats must be positive");
        }
        Ok(())
    }

    /// Parses config text. A `preset` line selects the starting values
    /// wherever it appears; every other key overrides them.
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut pairs = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                HarnessError::Config(format!("line {}: expected `key = value`, found `{line}`", no + 1))
            })?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(HarnessError::Config(format!("line {}: unknown key `{k}`", no + 1)));
            }
            if pairs.iter().any(|(seen, _, _): &(&str, &str, usize)| *seen == k) {
                return Err(HarnessError::Config(format!("line {}: duplicate key `{k}`", no + 1)));
            }
            pairs.push((k, v, no + 1));
        }
        let mut cfg = match pairs.iter().find(|(k, _, _)| *k == "preset") {
            Some((_, v, _)) => Self::preset(v)?,
            None => Self::desk(),
        };
        for (k, v, line) in pairs {
            let err = |what: &str| HarnessError::Config(format!("line {line}: `{k}` {what}, found `{v}`"));
            let int = || v.parse::<usize>().map_err(|_| err("must be a non-negative integer"));
            match k {
                "preset" => {}
                "n_cases" => cfg.n_cases = int()?,
                "seeds_per_case" => cfg.seeds_per_case = int()?,
                "master_seed" => cfg.master_seed = v.parse().map_err(|_| err("must be an unsigned integer"))?,
                "resamplers" => {
                    cfg.resamplers = list(v)
                        .map(|t| t.parse().map_err(|_| err("lists an unknown resampler")))
                        .collect::<Result<_, _>>()?
                }
                "models" => {
                    cfg.models = list(v)
                        .map(|t| t.parse().map_err(|_| err("lists an unknown model")))
                        .collect::<Result<_, _>>()?
                }
                "grid" => cfg.grid = v.parse().map_err(|_| err("must be full, reduced or fixed-best"))?,
                "artifact_dir" => cfg.artifact_dir = PathBuf::from(v),
                "jobs" => cfg.jobs = int()?,
                "test_fraction" => cfg.test_fraction = v.parse().map_err(|_| err("must be a number"))?,
                "cv_folds" => cfg.cv_folds = int()?,
                "timing_repeats" => cfg.timing_repeats = int()?,
                _ => unreachable!("keys are checked above"),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Config text that parses back to `self`.
    pub fn to_cfg(&self) -> String {
        let join = |v: Vec<&str>| v.join(", ");
        let mut s = String::new();
        let _ = writeln!(s, "n_cases = {}", self.n_cases);
        let _ = writeln!(s, "seeds_per_case = {}", self.seeds_per_case);
        let _ = writeln!(s, "master_seed = {}", self.master_seed);
        let _ = writeln!(s, "resamplers = {}", join(self.resamplers.iter().map(|r| r.token()).collect()));
        let _ = writeln!(s, "models = {}", join(self.models.iter().map(|f| f.token()).collect()));
        let _ = writeln!(s, "grid = {}", self.grid);
        let _ = writeln!(s, "artifact_dir = {}", self.artifact_dir.display());
        let _ = writeln!(s, "jobs = {}", self.jobs);
        let _ = writeln!(s, "test_fraction = {}", self.test_fraction);
        let _ = writeln!(s, "cv_folds = {}", self.cv_folds);
        let _ = writeln!(s, "timing_repeats = {}", self.timing_repeats);
        s
    }
}

fn list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|t| !t.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        let p = ExperimentConfig::full_scale();
        assert_eq!((p.n_cases, p.seeds_per_case), (240, 30));
        let d = ExperimentConfig::desk();
        assert_eq!((d.n_cases, d.seeds_per_case), (24, 5));
        assert_eq!(d.grid, GridMode::FixedBest);
    }

    #[test]
    fn parse_overrides_preset_in_any_order() {
        let text = "# demo\nn_cases = 8\npreset = full\nmodels = rf, lr  # two\nresamplers = none,smote\ngrid = reduced\n";
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.n_cases, 8);
        assert_eq!(c.seeds_per_case, 30);
        assert_eq!(c.models, vec![Family::Rf, Family::Lr]);
        assert_eq!(c.grid, GridMode::Reduced);
        assert_eq!(ExperimentConfig::parse(&c.to_cfg()).unwrap(), c);
    }

    #[test]
    fn unknown_and_malformed_lines_are_config_errors() {
        for text in ["colour = red\n", "n_cases 4\n", "n_cases = -1\n", "models = cnn\n", "n_cases = 3\nn_cases = 4\n", "cv_folds = 1\n"] {
            assert!(matches!(ExperimentConfig::parse(text), Err(HarnessError::Config(_))), "{text}");
        }
    }
}
