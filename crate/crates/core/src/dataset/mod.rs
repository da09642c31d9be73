//! Launch records in the learning schema, train/test splits, folds,
//! standardization and exploratory statistics.

mod eda;
mod stats;

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use thiserror::Error;

use crate::doe::SimCase;
use crate::format::{exact, expect_header, field, FormatError};
use crate::scalar::Scalar;
use crate::seed::rng_from_seed;
use crate::sim::geometry::wrap_360;
use crate::sim::{ShotEvent, ShotOutcome, Side};

pub use eda::{write_eda, EdaArtifacts};
pub use stats::{
    class_balance, describe, mutual_info_rank, mutual_information, pearson, pearson_matrix,
    quantile_edges, ClassBalance, Correlation, FeatureSummary, MiEntry, ScalerParams,
};

/// m/s to knots.
pub const KNOTS_PER_MPS: f64 = 1.943844;

/// The eleven model inputs, in column order.
pub const FEATURE_NAMES: [&str; 11] = [
    "radar_track_range",
    "distance",
    "missile_act_dist",
    "delta_altitude",
    "delta_speed",
    "missile_range",
    "rcs",
    "firerange",
    "angle_uni_to_tgt",
    "delta_heading",
    "concept",
];

pub const LABEL_NAME: &str = "kill";

/// Index of the categorical `concept` column.
pub const CONCEPT_COLUMN: usize = 10;

/// Minimum dataset size accepted by [`train_test_split`].
pub const MIN_SPLIT_ROWS: usize = 20;
/// Minimum dataset size accepted by [`mutual_info_rank`].
pub const MIN_MI_ROWS: usize = 50;

pub fn header() -> Vec<&'static str> {
    let mut h = FEATURE_NAMES.to_vec();
    h.push(LABEL_NAME);
    h
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("shot at t={time_s} s in run {run_id} has no resolved outcome")]
    Unresolved { run_id: u64, time_s: f64 },
    #[error("shot at t={time_s} s in run {run_id} was fired by red; only blue launches are recorded")]
    NotBlue { run_id: u64, time_s: f64 },
    #[error("shot references case {index} but the design has {available} cases")]
    UnknownCase { index: usize, available: usize },
    #[error("{what} needs at least {needed} rows, got {found}")]
    TooSmall {
        what: &'static str,
        needed: usize,
        found: usize,
    },
    #[error("dataset has a single class")]
    SingleClass,
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One blue launch described by the learning schema.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotRecord {
    pub radar_track_range: f64,
    pub distance: f64,
    pub missile_act_dist: f64,
    pub delta_altitude: f64,
    pub delta_speed: f64,
    pub missile_range: f64,
    pub rcs: f64,
    pub firerange: f64,
    pub angle_uni_to_tgt: f64,
    pub delta_heading: f64,
    pub concept: u8,
    pub kill: u8,
}

impl ShotRecord {
    pub fn features(&self) -> [f64; 11] {
        [
            self.radar_track_range,
            self.distance,
            self.missile_act_dist,
            self.delta_altitude,
            self.delta_speed,
            self.missile_range,
            self.rcs,
            self.firerange,
            self.angle_uni_to_tgt,
            self.delta_heading,
            self.concept as f64,
        ]
    }
}

/// Converts a resolved blue launch into a record.
pub fn extract_record(event: &ShotEvent, case: &SimCase) -> Result<ShotRecord, DatasetError> {
    let outcome = event.outcome.ok_or(DatasetError::Unresolved {
        run_id: event.run_id,
        time_s: event.time_s,
    })?;
    if event.shooter_side != Side::Blue {
        return Err(DatasetError::NotBlue {
            run_id: event.run_id,
            time_s: event.time_s,
        });
    }
    let (s, t) = (&event.shooter, &event.target);
    Ok(ShotRecord {
        radar_track_range: case.blue_track_range_m,
        distance: event.distance_m,
        missile_act_dist: case.blue_missile_act_dist_m,
        delta_altitude: s.altitude_m - t.altitude_m,
        delta_speed: (s.speed_mps - t.speed_mps) * KNOTS_PER_MPS,
        missile_range: case.blue_missile_range_factor,
        rcs: case.blue_rcs_delta_db,
        firerange: case.blue_shot_philosophy_pct,
        angle_uni_to_tgt: event.off_boresight_deg,
        delta_heading: wrap_360(s.heading_deg - t.heading_deg),
        concept: case.blue_concept,
        kill: u8::from(outcome == ShotOutcome::Kill),
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub records: Vec<ShotRecord>,
}

impl Dataset {
    pub fn new(records: Vec<ShotRecord>) -> Self {
        Self { records }
    }

    /// Builds the dataset from every blue launch; red launches are skipped.
    pub fn from_events(events: &[ShotEvent], cases: &[SimCase]) -> Result<Self, DatasetError> {
        let mut records = Vec::new();
        for e in events.iter().filter(|e| e.shooter_side == Side::Blue) {
            let case = cases.get(e.case_index).ok_or(DatasetError::UnknownCase {
                index: e.case_index,
                available: cases.len(),
            })?;
            records.push(extract_record(e, case)?);
        }
        Ok(Self { records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Rows × 11 feature matrix.
    pub fn features<F: Scalar>(&self) -> Array2<F> {
        let mut x = Array2::zeros((self.len(), FEATURE_NAMES.len()));
        for (mut row, r) in x.rows_mut().into_iter().zip(&self.records) {
            for (dst, v) in row.iter_mut().zip(r.features()) {
                *dst = F::lit(v);
            }
        }
        x
    }

    /// Rows × 12 matrix: features followed by the label.
    pub fn with_label<F: Scalar>(&self) -> Array2<F> {
        let mut x = Array2::zeros((self.len(), FEATURE_NAMES.len() + 1));
        for (mut row, r) in x.rows_mut().into_iter().zip(&self.records) {
            for (dst, v) in row.iter_mut().zip(r.features()) {
                *dst = F::lit(v);
            }
            row[FEATURE_NAMES.len()] = F::from_count(r.kill as usize);
        }
        x
    }

    pub fn labels(&self) -> Vec<u8> {
        self.records.iter().map(|r| r.kill).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            records: indices.iter().map(|&i| self.records[i]).collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), DatasetError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(header()).map_err(FormatError::from)?;
        for r in &self.records {
            let mut rec: Vec<String> = r.features()[..CONCEPT_COLUMN].iter().map(|&v| exact(v)).collect();
            rec.push(r.concept.to_string());
            rec.push(r.kill.to_string());
            out.write_record(&rec).map_err(FormatError::from)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, DatasetError> {
        let mut rdr = csv::Reader::from_reader(r);
        let h = header();
        expect_header(&mut rdr, &h)?;
        let mut records = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(FormatError::from)?;
            let f = |c: usize| field::<f64>(&rec, &h, c, row);
            let concept: u8 = field(&rec, &h, 10, row)?;
            let kill: u8 = field(&rec, &h, 11, row)?;
            if !(1..=2).contains(&concept) {
                return Err(bad_value(&h, 10, row, &rec));
            }
            if kill > 1 {
                return Err(bad_value(&h, 11, row, &rec));
            }
            records.push(ShotRecord {
                radar_track_range: f(0)?,
                distance: f(1)?,
                missile_act_dist: f(2)?,
                delta_altitude: f(3)?,
                delta_speed: f(4)?,
                missile_range: f(5)?,
                rcs: f(6)?,
                firerange: f(7)?,
                angle_uni_to_tgt: f(8)?,
                delta_heading: f(9)?,
                concept,
                kill,
            });
        }
        Ok(Self { records })
    }

    pub fn save(&self, path: &Path) -> Result<(), DatasetError> {
        self.write_csv(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        Self::read_csv(BufReader::new(File::open(path)?))
    }
}

fn bad_value(h: &[&str], col: usize, row: usize, rec: &csv::StringRecord) -> DatasetError {
    FormatError::Field {
        row,
        column: h[col].to_string(),
        value: rec.get(col).unwrap_or("").to_string(),
    }
    .into()
}

/// Indices of a seeded train/test partition; the test part holds
/// `ceil(test_fraction * n)` rows. Both index lists are sorted.
pub fn train_test_split(
    n: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), DatasetError> {
    if n < MIN_SPLIT_ROWS {
        return Err(DatasetError::TooSmall {
            what: "train/test split",
            needed: MIN_SPLIT_ROWS,
            found: n,
        });
    }
    let n_test = ((test_fraction * n as f64).ceil() as usize).clamp(1, n - 1);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_from_seed(seed));
    let mut test = idx[..n_test].to_vec();
    let mut train = idx[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

/// `k` disjoint validation folds covering `0..n`, sizes differing by at
/// most one (the larger folds come first). Each fold is sorted.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, DatasetError> {
    if k == 0 || n < k {
        return Err(DatasetError::TooSmall {
            what: "k-fold split",
            needed: k.max(1),
            found: n,
        });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_from_seed(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        let mut fold = idx[start..start + len].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += len;
    }
    Ok(folds)
}

/// Complement of `fold` within `0..n`.
pub fn fold_complement(n: usize, fold: &[usize]) -> Vec<usize> {
    let mut held = vec![false; n];
    for &i in fold {
        held[i] = true;
    }
    (0..n).filter(|&i| !held[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doe::{decode_case, registry};
    use crate::sim::Snapshot;
    use std::collections::HashSet;

    fn snap(alt: f64, heading: f64, speed: f64) -> Snapshot {
        Snapshot {
            x_m: 0.0,
            y_m: 0.0,
            altitude_m: alt,
            heading_deg: heading,
            speed_mps: speed,
        }
    }

    fn event(side: Side, outcome: Option<ShotOutcome>) -> ShotEvent {
        ShotEvent {
            run_id: 1,
            case_index: 0,
            seed: 2,
            time_s: 300.0,
            shooter_id: 0,
            shooter_side: side,
            target_id: 5,
            shooter: snap(9000.0, 350.0, 300.0),
            target: snap(8000.0, 10.0, 250.0),
            distance_m: 42_000.0,
            off_boresight_deg: -12.5,
            delta_heading_deg: 340.0,
            wez_rmax_m: 50_000.0,
            outcome,
        }
    }

    fn case() -> SimCase {
        let row: Vec<f64> = registry().iter().map(|s| s.midpoint()).collect();
        decode_case(&row).unwrap()
    }

    #[test]
    fn record_conversions() {
        let c = case();
        let r = extract_record(&event(Side::Blue, Some(ShotOutcome::Kill)), &c).unwrap();
        assert_eq!(r.delta_altitude, 1000.0);
        assert_eq!(r.delta_heading, 340.0);
        assert!((r.delta_speed - 50.0 * 1.943844).abs() < 1e-12);
        assert_eq!(r.angle_uni_to_tgt, -12.5);
        assert_eq!(r.distance, 42_000.0);
        assert_eq!(r.radar_track_range, c.blue_track_range_m);
        assert_eq!(r.missile_act_dist, c.blue_missile_act_dist_m);
        assert_eq!(r.firerange, c.blue_shot_philosophy_pct);
        assert_eq!(r.concept, c.blue_concept);
        assert_eq!(r.kill, 1);
    }

    #[test]
    fn unresolved_and_red_shots_are_rejected() {
        let c = case();
        assert!(matches!(
            extract_record(&event(Side::Blue, None), &c),
            Err(DatasetError::Unresolved { .. })
        ));
        assert!(matches!(
            extract_record(&event(Side::Red, Some(ShotOutcome::Kill)), &c),
            Err(DatasetError::NotBlue { .. })
        ));
        let events = vec![
            event(Side::Red, Some(ShotOutcome::Kill)),
            event(Side::Blue, Some(ShotOutcome::NoKill)),
        ];
        let ds = Dataset::from_events(&events, &[c]).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.records[0].kill, 0);
        assert!(matches!(
            Dataset::from_events(&events, &[]),
            Err(DatasetError::UnknownCase { index: 0, .. })
        ));
    }

    #[test]
    fn csv_round_trip_and_header() {
        let c = case();
        let mut recs = Vec::new();
        for i in 0..5 {
            let mut e = event(Side::Blue, Some(ShotOutcome::NoKill));
            e.distance_m = 10_000.0 / 3.0 * i as f64;
            recs.push(extract_record(&e, &c).unwrap());
        }
        let ds = Dataset::new(recs);
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "radar_track_range,distance,missile_act_dist,delta_altitude,delta_speed,missile_range,rcs,firerange,angle_uni_to_tgt,delta_heading,concept,kill"
        );
        assert_eq!(Dataset::read_csv(&buf[..]).unwrap(), ds);
    }

    #[test]
    fn split_sizes_and_partition() {
        let (train, test) = train_test_split(100, 0.15, 3).unwrap();
        assert_eq!((train.len(), test.len()), (85, 15));
        let (train2, test2) = train_test_split(100, 0.15, 3).unwrap();
        assert_eq!((&train, &test), (&train2, &test2));
        let all: HashSet<usize> = train.iter().chain(&test).copied().collect();
        assert_eq!(all.len(), 100);
        assert_eq!(train_test_split(101, 0.15, 0).unwrap().1.len(), 16);
        assert!(matches!(train_test_split(19, 0.15, 0), Err(DatasetError::TooSmall { .. })));
    }

    #[test]
    fn fold_sizes() {
        let f = kfold_indices(10, 5, 1).unwrap();
        assert!(f.iter().all(|f| f.len() == 2));
        let sizes: Vec<usize> = kfold_indices(11, 5, 1).unwrap().iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![3, 2, 2, 2, 2]);
        let folds = kfold_indices(1000, 5, 9).unwrap();
        let mut seen = HashSet::new();
        for f in &folds {
            for &i in f {
                assert!(seen.insert(i));
            }
        }
        assert_eq!(seen.len(), 1000);
        assert_eq!(fold_complement(1000, &folds[0]).len(), 800);
        assert!(kfold_indices(4, 5, 0).is_err());
    }
}
