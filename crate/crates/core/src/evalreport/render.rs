//! `results.csv`, `results.md`, `timings.csv` and the correlation heatmap.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Metrics;
use crate::format::{expect_header, field, FormatError};
use crate::models::Family;
use crate::resample::Resampler;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no result rows to report")]
    Empty,
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("{names} names for a {size}x{size} matrix")]
    NameCount { names: usize, size: usize },
    #[error("unknown {what} `{value}` in results")]
    Unknown { what: &'static str, value: String },
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub const RESULTS_HEADER: [&str; 9] = [
    "model",
    "resampler",
    "accuracy",
    "precision",
    "recall",
    "f1",
    "f1_change_pct",
    "best_f1",
    "zero_division",
];

pub const TIMINGS_HEADER: [&str; 3] = ["model", "resampler", "inference_time_ms"];

/// Test-set metrics of one (model, resampler) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub family: Family,
    pub resampler: Resampler,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub inference_time_ms: f64,
    pub zero_division: bool,
}

impl MetricsRow {
    pub fn new(family: Family, resampler: Resampler, m: &Metrics, inference_time_ms: f64) -> Self {
        Self {
            family,
            resampler,
            accuracy: m.accuracy,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            inference_time_ms,
            zero_division: m.zero_division,
        }
    }

    /// Row label such as `RF + SMOTE`.
    pub fn label(&self) -> String {
        match self.resampler.label() {
            Some(r) => format!("{} + {r}", self.family.label()),
            None => self.family.label().to_string(),
        }
    }

    fn order_key(&self) -> (usize, usize) {
        (
            Family::ALL.iter().position(|&f| f == self.family).unwrap_or(usize::MAX),
            Resampler::ALL.iter().position(|&r| r == self.resampler).unwrap_or(usize::MAX),
        )
    }
}

/// Which F1 group a row wins: best without resampling or best with it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BestMark {
    None,
    Baseline,
    Resampled,
}

impl BestMark {
    fn token(self) -> &'static str {
        match self {
            BestMark::None => "",
            BestMark::Baseline => "baseline",
            BestMark::Resampled => "resampled",
        }
    }
}

/// One rendered row: metrics plus the derived columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub metrics: MetricsRow,
    /// Percent change of F1 over the same model without resampling.
    pub f1_change_pct: Option<f64>,
    pub best: BestMark,
}

/// Relative change `(new - base) / base` in percent; `None` for a zero base.
pub fn relative_change_pct(base: f64, new: f64) -> Option<f64> {
    (base != 0.0).then(|| (new - base) / base * 100.0)
}

fn best_index(rows: &[ReportRow], baseline: bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, r) in rows.iter().enumerate() {
        if (r.metrics.resampler == Resampler::None) != baseline {
            continue;
        }
        if best.is_none_or(|b| r.metrics.f1 > rows[b].metrics.f1) {
            best = Some(i);
        }
    }
    best
}

/// Sorts rows model-major and derives the change and best-F1 columns.
pub fn build_report(rows: &[MetricsRow]) -> Result<Vec<ReportRow>, ReportError> {
    if rows.is_empty() {
        return Err(ReportError::Empty);
    }
    let mut sorted = rows.to_vec();
    sorted.sort_by_key(MetricsRow::order_key);
    let mut out: Vec<ReportRow> = sorted
        .iter()
        .map(|m| {
            let base = sorted
                .iter()
                .find(|b| b.family == m.family && b.resampler == Resampler::None);
            let f1_change_pct = match base {
                Some(b) if m.resampler != Resampler::None => relative_change_pct(b.f1, m.f1),
                _ => None,
            };
            ReportRow {
                metrics: m.clone(),
                f1_change_pct,
                best: BestMark::None,
            }
        })
        .collect();
    if let Some(i) = best_index(&out, true) {
        out[i].best = BestMark::Baseline;
    }
    if let Some(i) = best_index(&out, false) {
        out[i].best = BestMark::Resampled;
    }
    Ok(out)
}

fn six(v: f64) -> String {
    let s = format!("{v:.6}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// Text of `results.csv`. Timing is kept out so the file is a pure
/// function of the data and seeds.
pub fn results_csv(rows: &[MetricsRow]) -> Result<String, ReportError> {
    let report = build_report(rows)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RESULTS_HEADER).map_err(FormatError::from)?;
    for r in &report {
        let m = &r.metrics;
        w.write_record([
            m.family.label().to_string(),
            m.resampler.token().to_string(),
            six(m.accuracy),
            six(m.precision),
            six(m.recall),
            six(m.f1),
            r.f1_change_pct.map(six).unwrap_or_default(),
            r.best.token().to_string(),
            u8::from(m.zero_division).to_string(),
        ])
        .map_err(FormatError::from)?;
    }
    let bytes = w.into_inner().map_err(|e| FormatError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("utf-8 csv"))
}

/// Rows parsed back from `results.csv`; inference time is not stored there
/// and reads as 0.
pub fn read_results_csv<R: std::io::Read>(r: R) -> Result<Vec<ReportRow>, ReportError> {
    let mut rdr = csv::Reader::from_reader(r);
    expect_header(&mut rdr, &RESULTS_HEADER)?;
    let h = &RESULTS_HEADER;
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(FormatError::from)?;
        let model = rec.get(0).unwrap_or("");
        let family = Family::ALL
            .into_iter()
            .find(|f| f.label() == model)
            .ok_or_else(|| ReportError::Unknown {
                what: "model",
                value: model.to_string(),
            })?;
        let token = rec.get(1).unwrap_or("");
        let resampler = token.parse().map_err(|_| ReportError::Unknown {
            what: "resampler",
            value: token.to_string(),
        })?;
        let change = rec.get(6).unwrap_or("");
        let best = match rec.get(7).unwrap_or("") {
            "" => BestMark::None,
            "baseline" => BestMark::Baseline,
            "resampled" => BestMark::Resampled,
            other => {
                return Err(ReportError::Unknown {
                    what: "best_f1 mark",
                    value: other.to_string(),
                })
            }
        };
        out.push(ReportRow {
            metrics: MetricsRow {
                family,
                resampler,
                accuracy: field(&rec, h, 2, row)?,
                precision: field(&rec, h, 3, row)?,
                recall: field(&rec, h, 4, row)?,
                f1: field(&rec, h, 5, row)?,
                inference_time_ms: 0.0,
                zero_division: field::<u8>(&rec, h, 8, row)? == 1,
            },
            f1_change_pct: if change.is_empty() {
                None
            } else {
                Some(field(&rec, h, 6, row)?)
            },
            best,
        });
    }
    Ok(out)
}

pub fn timings_csv(rows: &[MetricsRow]) -> Result<String, ReportError> {
    let report = build_report(rows)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TIMINGS_HEADER).map_err(FormatError::from)?;
    for r in &report {
        let m = &r.metrics;
        w.write_record([
            m.family.label().to_string(),
            m.resampler.token().to_string(),
            format!("{:.3}", m.inference_time_ms),
        ])
        .map_err(FormatError::from)?;
    }
    let bytes = w.into_inner().map_err(|e| FormatError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("utf-8 csv"))
}

/// Markdown table in the same order, best F1 values in bold.
pub fn results_markdown(rows: &[MetricsRow]) -> Result<String, ReportError> {
    let report = build_report(rows)?;
    let mut s = String::new();
    s.push_str("# Classification results\n\n");
    s.push_str("| MODEL | ACC | PREC | REC | F1 | ΔF1 vs none | IT[ms] |\n");
    s.push_str("|---|---:|---:|---:|---:|---:|---:|\n");
    for r in &report {
        let m = &r.metrics;
        let f1 = format!("{:.3}", m.f1);
        let f1 = if r.best == BestMark::None { f1 } else { format!("**{f1}**") };
        let change = r
            .f1_change_pct
            .map(|c| format!("{c:+.2}%"))
            .unwrap_or_else(|| "".to_string());
        let _ = writeln!(
            s,
            "| {} | {:.3} | {:.3} | {:.3} | {} | {} | {:.1} |",
            m.label(),
            m.accuracy,
            m.precision,
            m.recall,
            f1,
            change,
            m.inference_time_ms
        );
    }
    s.push_str("\nBold F1 marks the best model without resampling and the best with resampling.\n");
    if report.iter().any(|r| r.metrics.zero_division) {
        s.push_str("Rows with a zero denominator report 0 for the affected metrics.\n");
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportFiles {
    pub results_csv: PathBuf,
    pub results_md: PathBuf,
    pub timings_csv: PathBuf,
}

pub fn render_report(rows: &[MetricsRow], out_dir: &Path) -> Result<ReportFiles, ReportError> {
    fs::create_dir_all(out_dir)?;
    let files = ReportFiles {
        results_csv: out_dir.join("results.csv"),
        results_md: out_dir.join("results.md"),
        timings_csv: out_dir.join("timings.csv"),
    };
    fs::write(&files.results_csv, results_csv(rows)?)?;
    fs::write(&files.results_md, results_markdown(rows)?)?;
    fs::write(&files.timings_csv, timings_csv(rows)?)?;
    Ok(files)
}

const NEG: (f64, f64, f64) = (59.0, 76.0, 192.0);
const MID: (f64, f64, f64) = (242.0, 242.0, 242.0);
const POS: (f64, f64, f64) = (180.0, 4.0, 38.0);

/// Diverging color for a value in [-1, 1]; values outside are clamped.
pub fn diverging_color(v: f64) -> String {
    let v = if v.is_nan() { 0.0 } else { v.clamp(-1.0, 1.0) };
    let (a, t) = if v < 0.0 { (NEG, -v) } else { (POS, v) };
    let mix = |m: f64, e: f64| (m + (e - m) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(MID.0, a.0), mix(MID.1, a.1), mix(MID.2, a.2))
}

fn two(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Standalone SVG heatmap with one annotated cell per matrix entry.
pub fn render_correlation_svg(names: &[&str], m: ArrayView2<f64>) -> Result<String, ReportError> {
    let (rows, cols) = m.dim();
    if rows != cols {
        return Err(ReportError::NotSquare { rows, cols });
    }
    if names.len() != rows {
        return Err(ReportError::NameCount {
            names: names.len(),
            size: rows,
        });
    }
    let cell = 56.0;
    let left = 170.0;
    let top = 40.0;
    let bottom = 150.0;
    let bar = 90.0;
    let grid = cell * rows as f64;
    let width = left + grid + bar;
    let height = top + grid + bottom;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="Helvetica, Arial, sans-serif">"#
    );
    let _ = writeln!(s, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-size="16" text-anchor="middle">Pearson correlation</text>"#,
        left + grid / 2.0
    );
    for (i, row) in m.outer_iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let x = left + cell * j as f64;
            let y = top + cell * i as f64;
            let ink = if v.abs() > 0.6 { "white" } else { "black" };
            let _ = writeln!(
                s,
                r#"<rect class="cell" x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{}" stroke="white"/>"#,
                diverging_color(v)
            );
            let _ = writeln!(
                s,
                r#"<text class="cell-value" x="{}" y="{}" font-size="12" text-anchor="middle" dominant-baseline="central" fill="{ink}">{}</text>"#,
                x + cell / 2.0,
                y + cell / 2.0,
                two(v)
            );
        }
    }
    for (i, name) in names.iter().enumerate() {
        let c = cell * i as f64 + cell / 2.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="12" text-anchor="end" dominant-baseline="central">{}</text>"#,
            left - 8.0,
            top + c,
            escape(name)
        );
        let (lx, ly) = (left + c, top + grid + 10.0);
        let _ = writeln!(
            s,
            r#"<text x="{lx}" y="{ly}" font-size="12" text-anchor="end" transform="rotate(-60 {lx} {ly})">{}</text>"#,
            escape(name)
        );
    }
    let bx = left + grid + 30.0;
    let _ = writeln!(
        s,
        r#"<defs><linearGradient id="scale" x1="0" y1="1" x2="0" y2="0"><stop offset="0" stop-color="{}"/><stop offset="0.5" stop-color="{}"/><stop offset="1" stop-color="{}"/></linearGradient></defs>"#,
        diverging_color(-1.0),
        diverging_color(0.0),
        diverging_color(1.0)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{bx}" y="{top}" width="18" height="{grid}" fill="url(#scale)" stroke="black" stroke-width="0.5"/>"#
    );
    for (label, frac) in [("1.0", 0.0), ("0.0", 0.5), ("-1.0", 1.0)] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11" dominant-baseline="central">{label}</text>"#,
            bx + 24.0,
            top + grid * frac
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}
