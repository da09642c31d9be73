//! Exploratory report: `eda_report.md`, `eda_stats.csv`, `correlation.csv`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::stats::{class_balance, describe, mutual_info_rank, pearson_matrix, Correlation};
use super::{header, Dataset, DatasetError, CONCEPT_COLUMN, FEATURE_NAMES, MIN_MI_ROWS};

pub const STATS_HEADER: [&str; 8] = ["feature", "mean", "std", "min", "25%", "median", "75%", "max"];

#[derive(Debug, Clone)]
pub struct EdaArtifacts {
    pub report: PathBuf,
    pub stats: PathBuf,
    pub correlation_csv: PathBuf,
    /// 12 x 12 correlation of features and label.
    pub correlation: Correlation<f64>,
    pub warnings: Vec<String>,
}

fn f6(v: f64) -> String {
    format!("{v:.6}")
}

/// Writes the three EDA files into `out_dir` (created if needed).
pub fn write_eda(ds: &Dataset, out_dir: &Path) -> Result<EdaArtifacts, DatasetError> {
    if ds.is_empty() {
        return Err(DatasetError::TooSmall {
            what: "exploratory analysis",
            needed: 1,
            found: 0,
        });
    }
    fs::create_dir_all(out_dir)?;
    let mut warnings = Vec::new();
    let x = ds.features::<f64>();
    let y = ds.labels();
    let numeric: Vec<usize> = (0..FEATURE_NAMES.len()).filter(|&j| j != CONCEPT_COLUMN).collect();
    let summaries = describe(x.select(ndarray::Axis(1), &numeric).view());

    let stats_path = out_dir.join("eda_stats.csv");
    let mut w = csv::Writer::from_path(&stats_path).map_err(crate::format::FormatError::from)?;
    w.write_record(STATS_HEADER).map_err(crate::format::FormatError::from)?;
    for (&j, s) in numeric.iter().zip(&summaries) {
        w.write_record([
            FEATURE_NAMES[j].to_string(),
            f6(s.mean),
            f6(s.std),
            f6(s.min),
            f6(s.q25),
            f6(s.median),
            f6(s.q75),
            f6(s.max),
        ])
        .map_err(crate::format::FormatError::from)?;
    }
    w.flush()?;

    let names = header();
    let corr = pearson_matrix(ds.with_label::<f64>().view());
    for &j in &corr.constant_columns {
        warnings.push(format!("`{}` is constant; its correlations are reported as 0", names[j]));
    }
    let corr_path = out_dir.join("correlation.csv");
    let mut w = csv::Writer::from_path(&corr_path).map_err(crate::format::FormatError::from)?;
    let mut head = vec!["variable"];
    head.extend(&names);
    w.write_record(&head).map_err(crate::format::FormatError::from)?;
    for (i, row) in corr.matrix.rows().into_iter().enumerate() {
        let mut rec = vec![names[i].to_string()];
        rec.extend(row.iter().map(|&v| f6(v)));
        w.write_record(&rec).map_err(crate::format::FormatError::from)?;
    }
    w.flush()?;

    let balance = class_balance(&y);
    if balance.single_class {
        warnings.push("the dataset holds a single class".into());
    }

    let mut md = String::new();
    let _ = writeln!(md, "# Exploratory data analysis\n");
    let _ = writeln!(md, "Rows: {}\n", ds.len());
    let _ = writeln!(md, "## Class balance\n");
    let _ = writeln!(md, "| kill | count | share |\n|---|---:|---:|");
    for (label, n) in [("KILL", balance.positives), ("NO KILL", balance.negatives)] {
        let _ = writeln!(md, "| {label} | {n} | {:.2}% |", 100.0 * n as f64 / ds.len() as f64);
    }
    let _ = writeln!(md, "\nMinority fraction: {:.4}\n", balance.minority_fraction);

    let type1 = ds.records.iter().filter(|r| r.concept == 1).count();
    let _ = writeln!(md, "## Concept\n");
    let _ = writeln!(md, "| concept | count | share |\n|---|---:|---:|");
    for (label, n) in [("Type 1", type1), ("Type 2", ds.len() - type1)] {
        let _ = writeln!(md, "| {label} | {n} | {:.2}% |", 100.0 * n as f64 / ds.len() as f64);
    }

    let _ = writeln!(md, "\n## Descriptive statistics\n");
    let _ = writeln!(md, "| Variable | Mean | Std | Min | 25% | Median | 75% | Max |");
    let _ = writeln!(md, "|---|---:|---:|---:|---:|---:|---:|---:|");
    for (&j, s) in numeric.iter().zip(&summaries) {
        let _ = writeln!(
            md,
            "| {} | {:.1} | {:.1} | {:.1} | {:.1} | {:.1} | {:.1} | {:.1} |",
            FEATURE_NAMES[j], s.mean, s.std, s.min, s.q25, s.median, s.q75, s.max
        );
    }

    let _ = writeln!(md, "\n## Correlation with kill\n");
    let _ = writeln!(md, "| Variable | r |\n|---|---:|");
    let k = FEATURE_NAMES.len();
    for (j, name) in FEATURE_NAMES.iter().enumerate() {
        let _ = writeln!(md, "| {name} | {:.3} |", corr.matrix[[j, k]]);
    }
    let mut pairs: Vec<(usize, usize, f64)> = (0..k)
        .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, corr.matrix[[i, j]]))
        .collect();
    pairs.sort_by(|a, b| b.2.abs().partial_cmp(&a.2.abs()).expect("finite"));
    let _ = writeln!(md, "\nStrongest feature pairs:\n");
    for (i, j, r) in pairs.iter().take(5) {
        let _ = writeln!(md, "- {} / {}: {r:.3}", FEATURE_NAMES[*i], FEATURE_NAMES[*j]);
    }

    let _ = writeln!(md, "\n## Mutual information with kill\n");
    if ds.len() >= MIN_MI_ROWS {
        let rank = mutual_info_rank(x.view(), &y)?;
        let _ = writeln!(md, "| Rank | Variable | MI (nats) |\n|---:|---|---:|");
        for (i, e) in rank.iter().enumerate() {
            let _ = writeln!(md, "| {} | {} | {:.4} |", i + 1, e.name(), e.mi);
        }
    } else {
        let msg = format!("mutual information skipped: {} rows, {MIN_MI_ROWS} needed", ds.len());
        let _ = writeln!(md, "{msg}");
        warnings.push(msg);
    }

    if !warnings.is_empty() {
        let _ = writeln!(md, "\n## Warnings\n");
        for w in &warnings {
            let _ = writeln!(md, "- {w}");
        }
    }
    let report_path = out_dir.join("eda_report.md");
    fs::write(&report_path, md)?;

    Ok(EdaArtifacts {
        report: report_path,
        stats: stats_path,
        correlation_csv: corr_path,
        correlation: corr,
        warnings,
    })
}
