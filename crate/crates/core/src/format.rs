//! Shared helpers for the CSV artifacts.

use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("header mismatch: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("row {row}: bad value `{value}` in column `{column}`")]
    Field {
        row: usize,
        column: String,
        value: String,
    },
}

/// Checks that a reader's header equals `expected`.
pub fn expect_header<R: std::io::Read>(
    rdr: &mut csv::Reader<R>,
    expected: &[&str],
) -> Result<(), FormatError> {
    let found: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if found != expected {
        return Err(FormatError::Header {
            expected: expected.join(","),
            found: found.join(","),
        });
    }
    Ok(())
}

/// Parses column `col` of `rec`.
pub fn field<T: FromStr>(
    rec: &csv::StringRecord,
    header: &[&str],
    col: usize,
    row: usize,
) -> Result<T, FormatError> {
    let raw = rec.get(col).unwrap_or("");
    raw.trim().parse().map_err(|_| FormatError::Field {
        row,
        column: header.get(col).copied().unwrap_or("?").to_string(),
        value: raw.to_string(),
    })
}

/// Shortest text that parses back to exactly `v`.
pub fn exact(v: f64) -> String {
    format!("{v}")
}
