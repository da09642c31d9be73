//! Experiment space and Latin Hypercube designs over it.
//!
//! The registry holds the fifteen scenario variables in their native units.
//! [`lhs_sample`] draws a stratified design in those units and
//! [`decode_case`] turns one design row into an SI-unit [`SimCase`].

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed::stream_rng;

pub const METERS_PER_KFT: f64 = 304.8;
pub const METERS_PER_KM: f64 = 1000.0;

#[derive(Debug, Error)]
pub enum DoeError {
    #[error("invalid variable `{name}`: {reason}")]
    InvalidSpec { name: String, reason: String },
    #[error("a design needs at least one case and one variable")]
    EmptyDesign,
    #[error("column `{column}` value {value} outside [{min}, {max}]")]
    OutOfBounds {
        column: String,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("design row has {got} values, expected {expected}")]
    RowWidth { got: usize, expected: usize },
    #[error("design header mismatch: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("design csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("design csv: bad number `{0}`")]
    Number(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unit {
    Kft,
    Mach,
    Km,
    DbSqm,
    Percent,
    DegLongitude,
    Dimensionless,
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Unit::Kft => "kft",
            Unit::Mach => "Mach",
            Unit::Km => "km",
            Unit::DbSqm => "dBm2",
            Unit::Percent => "%",
            Unit::DegLongitude => "deg",
            Unit::Dimensionless => "-",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Continuous,
    Binary,
    TwoLevelCategorical,
}

/// One axis of the experiment space, bounds in native units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub unit: Unit,
    pub kind: VarKind,
}

impl VariableSpec {
    pub fn new(name: &str, min: f64, max: f64, unit: Unit, kind: VarKind) -> Self {
        Self {
            name: name.to_string(),
            min,
            max,
            unit,
            kind,
        }
    }

    pub fn validate(&self) -> Result<(), DoeError> {
        let bad = |reason: &str| DoeError::InvalidSpec {
            name: self.name.clone(),
            reason: reason.to_string(),
        };
        if !self.min.is_finite() || !self.max.is_finite() {
            return Err(bad("bounds must be finite"));
        }
        match self.kind {
            VarKind::Continuous if self.min >= self.max => Err(bad("min must be below max")),
            VarKind::Binary if (self.min, self.max) != (0.0, 1.0) => {
                Err(bad("binary bounds must be {0, 1}"))
            }
            VarKind::TwoLevelCategorical if (self.min, self.max) != (1.0, 2.0) => {
                Err(bad("two-level bounds must be {1, 2}"))
            }
            _ => Ok(()),
        }
    }

    /// Midpoint used to threshold binary and categorical columns.
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.min + self.max)
    }
}

/// Column names of the canonical registry, in table order.
pub const VARIABLE_NAMES: [&str; 15] = [
    "blue_altitude",
    "red_altitude",
    "blue_speed",
    "red_speed",
    "blue_radar_track_range",
    "blue_missile_range_factor",
    "blue_rcs",
    "blue_missile_act_dist",
    "blue_shot_philosophy",
    "blue_spacing",
    "red_spacing",
    "blue_cap_speed",
    "red_cap_speed",
    "blue_concept",
    "blue_not_six",
];

/// The fifteen scenario variables and their sampling bounds.
pub fn registry() -> Vec<VariableSpec> {
    use Unit::*;
    use VarKind::*;
    let rows: [(f64, f64, Unit, VarKind); 15] = [
        (27.5, 42.5, Kft, Continuous),
        (27.5, 42.5, Kft, Continuous),
        (0.9, 1.5, Mach, Continuous),
        (0.9, 1.5, Mach, Continuous),
        (150.0, 300.0, Km, Continuous),
        (1.0, 2.0, Dimensionless, Continuous),
        (-10.0, 10.0, DbSqm, Continuous),
        (15.0, 30.0, Km, Continuous),
        (50.0, 70.0, Percent, Continuous),
        (0.1, 1.0, DegLongitude, Continuous),
        (0.1, 1.0, DegLongitude, Continuous),
        (0.7, 0.75, Mach, Continuous),
        (0.7, 0.75, Mach, Continuous),
        (1.0, 2.0, Dimensionless, TwoLevelCategorical),
        (0.0, 1.0, Dimensionless, Binary),
    ];
    VARIABLE_NAMES
        .iter()
        .zip(rows)
        .map(|(name, (min, max, unit, kind))| VariableSpec::new(name, min, max, unit, kind))
        .collect()
}

/// `n_cases` rows of sampled variables in native units.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    columns: Vec<String>,
    values: Array2<f64>,
}

impl DesignMatrix {
    pub fn new(columns: Vec<String>, values: Array2<f64>) -> Self {
        assert_eq!(columns.len(), values.ncols());
        Self { columns, values }
    }

    pub fn n_cases(&self) -> usize {
        self.values.nrows()
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.values.row(i).to_vec()
    }

    /// Rounds every value to the precision written by [`Self::write_csv`],
    /// so that a saved design reloads to exactly the same matrix.
    pub fn quantized(&self) -> Self {
        Self {
            columns: self.columns.clone(),
            values: self.values.mapv(quantize6),
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), DoeError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.columns)?;
        for row in self.values.rows() {
            out.write_record(row.iter().map(|&v| format_sig6(v)))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), DoeError> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    /// Reads a design whose header must match `VARIABLE_NAMES`.
    pub fn read_csv<R: Read>(r: R) -> Result<Self, DoeError> {
        let mut rdr = csv::Reader::from_reader(r);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let expected = VARIABLE_NAMES.join(",");
        if header.join(",") != expected {
            return Err(DoeError::Header {
                expected,
                found: header.join(","),
            });
        }
        let mut data = Vec::new();
        let mut n = 0;
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != header.len() {
                return Err(DoeError::RowWidth {
                    got: rec.len(),
                    expected: header.len(),
                });
            }
            for field in rec.iter() {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| DoeError::Number(field.to_string()))?;
                data.push(v);
            }
            n += 1;
        }
        let values = Array2::from_shape_vec((n, header.len()), data)
            .expect("row widths checked above");
        Ok(Self {
            columns: header,
            values,
        })
    }

    pub fn load(path: &Path) -> Result<Self, DoeError> {
        let f = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(f))
    }
}

/// Rounds to six significant digits.
pub fn quantize6(v: f64) -> f64 {
    format!("{v:.5e}").parse().unwrap_or(v)
}

/// Shortest decimal text for `v` rounded to six significant digits.
pub fn format_sig6(v: f64) -> String {
    let q = quantize6(v);
    if q == 0.0 {
        "0".to_string()
    } else {
        format!("{q}")
    }
}

/// Index of the equal-width stratum of `[min, max]` containing `v`.
pub fn stratum_of(v: f64, min: f64, max: f64, n: usize) -> usize {
    let s = ((v - min) / (max - min) * n as f64).floor();
    (s.max(0.0) as usize).min(n - 1)
}

const MAX_REDRAWS: usize = 64;

/// Latin Hypercube design: per column, one uniform draw inside each of
/// `n_cases` equal-width strata, with strata visited in a random order.
///
/// A draw is kept only when both it and its six-significant-digit rounding
/// lie in the stratum, so [`DesignMatrix::quantized`] preserves the
/// stratification. Column `j` draws from stream `j` of the seeded
/// generator, so columns do not perturb each other.
pub fn lhs_sample(
    specs: &[VariableSpec],
    n_cases: usize,
    seed: u64,
) -> Result<DesignMatrix, DoeError> {
    if n_cases == 0 || specs.is_empty() {
        return Err(DoeError::EmptyDesign);
    }
    for s in specs {
        s.validate()?;
    }
    let mut values = Array2::zeros((n_cases, specs.len()));
    let n = n_cases as f64;
    for (j, spec) in specs.iter().enumerate() {
        let mut rng = stream_rng(seed, j as u64);
        let mut strata: Vec<usize> = (0..n_cases).collect();
        strata.shuffle(&mut rng);
        let width = spec.max - spec.min;
        let inside = |v: f64, k: usize| {
            [v, quantize6(v)]
                .iter()
                .all(|&t| t < spec.max && stratum_of(t, spec.min, spec.max, n_cases) == k)
        };
        for (i, &k) in strata.iter().enumerate() {
            let mut v = spec.min + width * ((k as f64 + 0.5) / n);
            for _ in 0..MAX_REDRAWS {
                let u: f64 = rng.gen();
                let cand = spec.min + width * ((k as f64 + u) / n);
                if inside(cand, k) {
                    v = cand;
                    break;
                }
            }
            values[[i, j]] = v;
        }
    }
    Ok(DesignMatrix {
        columns: specs.iter().map(|s| s.name.clone()).collect(),
        values,
    })
}

/// One decoded design row in SI units (Mach values stay in Mach).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimCase {
    pub blue_alt_m: f64,
    pub red_alt_m: f64,
    pub blue_speed_mach: f64,
    pub red_speed_mach: f64,
    pub blue_track_range_m: f64,
    pub blue_missile_range_factor: f64,
    pub blue_rcs_delta_db: f64,
    pub blue_missile_act_dist_m: f64,
    pub blue_shot_philosophy_pct: f64,
    pub blue_spacing_deg: f64,
    pub red_spacing_deg: f64,
    pub blue_cap_mach: f64,
    pub red_cap_mach: f64,
    pub blue_concept: u8,
    pub blue_six_ship: bool,
}

/// Decodes a registry-ordered row into a [`SimCase`].
pub fn decode_case(row: &[f64]) -> Result<SimCase, DoeError> {
    let specs = registry();
    if row.len() != specs.len() {
        return Err(DoeError::RowWidth {
            got: row.len(),
            expected: specs.len(),
        });
    }
    for (spec, &v) in specs.iter().zip(row) {
        if !(v >= spec.min && v <= spec.max) {
            return Err(DoeError::OutOfBounds {
                column: spec.name.clone(),
                value: v,
                min: spec.min,
                max: spec.max,
            });
        }
    }
    let concept = if row[13] < specs[13].midpoint() { 1 } else { 2 };
    // the column encodes 0 = six ships, 1 = not six
    let not_six = row[14] >= specs[14].midpoint();
    Ok(SimCase {
        blue_alt_m: row[0] * METERS_PER_KFT,
        red_alt_m: row[1] * METERS_PER_KFT,
        blue_speed_mach: row[2],
        red_speed_mach: row[3],
        blue_track_range_m: row[4] * METERS_PER_KM,
        blue_missile_range_factor: row[5],
        blue_rcs_delta_db: row[6],
        blue_missile_act_dist_m: row[7] * METERS_PER_KM,
        blue_shot_philosophy_pct: row[8],
        blue_spacing_deg: row[9],
        red_spacing_deg: row[10],
        blue_cap_mach: row[11],
        red_cap_mach: row[12],
        blue_concept: concept,
        blue_six_ship: !not_six,
    })
}

/// Decodes every row of a design.
pub fn decode_design(design: &DesignMatrix) -> Result<Vec<SimCase>, DoeError> {
    (0..design.n_cases())
        .map(|i| decode_case(&design.row(i)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mid_row() -> Vec<f64> {
        registry().iter().map(|s| s.midpoint()).collect()
    }

    #[test]
    fn registry_has_fifteen_valid_rows() {
        let reg = registry();
        assert_eq!(reg.len(), 15);
        for s in &reg {
            s.validate().unwrap();
        }
        assert_eq!(reg[4].unit, Unit::Km);
        assert_eq!((reg[8].min, reg[8].max), (50.0, 70.0));
        assert_eq!(reg[13].kind, VarKind::TwoLevelCategorical);
    }

    #[test]
    fn invalid_bounds_are_rejected() {
        let bad = VariableSpec::new("x", 2.0, 1.0, Unit::Km, VarKind::Continuous);
        assert!(matches!(
            lhs_sample(&[bad], 4, 0),
            Err(DoeError::InvalidSpec { .. })
        ));
        let bad_bin = VariableSpec::new("b", 0.0, 2.0, Unit::Dimensionless, VarKind::Binary);
        assert!(bad_bin.validate().is_err());
        assert!(matches!(lhs_sample(&[], 4, 0), Err(DoeError::EmptyDesign)));
    }

    #[test]
    fn single_case_lands_in_unit_interval() {
        let s = VariableSpec::new("u", 0.0, 1.0, Unit::Dimensionless, VarKind::Continuous);
        let d = lhs_sample(&[s], 1, 99).unwrap();
        let v = d.values()[[0, 0]];
        assert!((0.0..1.0).contains(&v));
    }

    #[test]
    fn four_cases_fill_four_strata() {
        let s = VariableSpec::new("u", 0.0, 4.0, Unit::Dimensionless, VarKind::Continuous);
        for seed in 0..50 {
            let d = lhs_sample(std::slice::from_ref(&s), 4, seed).unwrap();
            let mut seen = [0; 4];
            for &v in d.values().column(0) {
                seen[v.floor() as usize] += 1;
            }
            assert_eq!(seen, [1, 1, 1, 1]);
        }
    }

    #[test]
    fn altitude_decodes_to_meters() {
        let mut row = mid_row();
        row[0] = 27.5;
        let c = decode_case(&row).unwrap();
        assert!((c.blue_alt_m - 8382.0).abs() < 1e-9);
        row[4] = 200.0;
        assert_eq!(decode_case(&row).unwrap().blue_track_range_m, 200_000.0);
    }

    #[test]
    fn categorical_columns_threshold_at_midpoint() {
        let mut row = mid_row();
        row[14] = 0.73;
        row[13] = 1.2;
        let c = decode_case(&row).unwrap();
        assert!(!c.blue_six_ship);
        assert_eq!(c.blue_concept, 1);
        row[14] = 0.2;
        row[13] = 1.5;
        let c = decode_case(&row).unwrap();
        assert!(c.blue_six_ship);
        assert_eq!(c.blue_concept, 2);
    }

    #[test]
    fn out_of_bounds_names_the_column() {
        let mut row = mid_row();
        row[8] = 71.0;
        match decode_case(&row) {
            Err(DoeError::OutOfBounds { column, .. }) => assert_eq!(column, "blue_shot_philosophy"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn header_is_registry_order() {
        let d = lhs_sample(&registry(), 3, 5).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), VARIABLE_NAMES.join(","));
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(format_sig6(27.5), "27.5");
        assert_eq!(format_sig6(123.456789), "123.457");
        assert_eq!(format_sig6(-0.000123456789), "-0.000123457");
        assert_eq!(format_sig6(0.0), "0");
    }

    proptest! {
        #[test]
        fn lhs_is_deterministic_and_quantized_designs_round_trip(seed in any::<u64>(), n in 1usize..40) {
            let a = lhs_sample(&registry(), n, seed).unwrap();
            let b = lhs_sample(&registry(), n, seed).unwrap();
            prop_assert_eq!(&a, &b);
            let q = a.quantized();
            let mut buf = Vec::new();
            q.write_csv(&mut buf).unwrap();
            let back = DesignMatrix::read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back, q);
        }
    }
}
