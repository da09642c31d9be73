//! Test-set metrics and the experiment report.

mod metrics;
mod render;

pub use metrics::{
    confusion_counts, f1_from, f1_score, measure_inference_time, metrics_from_confusion,
    ConfusionCounts, Metrics, MetricsError,
};
pub use render::{
    build_report, diverging_color, read_results_csv, relative_change_pct, render_correlation_svg,
    render_report, results_csv, results_markdown, timings_csv, BestMark, MetricsRow, ReportError,
    ReportFiles, ReportRow, RESULTS_HEADER, TIMINGS_HEADER,
};
