//! `shots.csv` and `runs.csv`.

use std::io::{Read, Write};

use super::{RunSummary, ShotEvent, ShotOutcome, Side, Snapshot};
use crate::format::{exact, expect_header, field, FormatError};

pub const SHOTS_HEADER: [&str; 22] = [
    "run_id",
    "case_index",
    "seed",
    "time_s",
    "shooter_id",
    "shooter_side",
    "target_id",
    "shooter_x_m",
    "shooter_y_m",
    "shooter_alt_m",
    "shooter_heading_deg",
    "shooter_speed_mps",
    "target_x_m",
    "target_y_m",
    "target_alt_m",
    "target_heading_deg",
    "target_speed_mps",
    "distance_m",
    "off_boresight_deg",
    "delta_heading_deg",
    "wez_rmax_m",
    "outcome",
];

pub const RUNS_HEADER: [&str; 10] = [
    "run_id",
    "case_index",
    "seed",
    "blue_initial",
    "red_initial",
    "blue_survivors",
    "red_survivors",
    "missiles_fired_blue",
    "missiles_fired_red",
    "end_time_s",
];

fn snapshot_fields(s: &Snapshot) -> [String; 5] {
    [
        exact(s.x_m),
        exact(s.y_m),
        exact(s.altitude_m),
        exact(s.heading_deg),
        exact(s.speed_mps),
    ]
}

pub fn write_shots_csv<W: Write>(w: W, events: &[ShotEvent]) -> Result<(), FormatError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SHOTS_HEADER)?;
    for e in events {
        let mut rec = vec![
            e.run_id.to_string(),
            e.case_index.to_string(),
            e.seed.to_string(),
            exact(e.time_s),
            e.shooter_id.to_string(),
            e.shooter_side.as_str().to_string(),
            e.target_id.to_string(),
        ];
        rec.extend(snapshot_fields(&e.shooter));
        rec.extend(snapshot_fields(&e.target));
        rec.extend([
            exact(e.distance_m),
            exact(e.off_boresight_deg),
            exact(e.delta_heading_deg),
            exact(e.wez_rmax_m),
            e.outcome.map(|o| o.as_str()).unwrap_or("").to_string(),
        ]);
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_shots_csv<R: Read>(r: R) -> Result<Vec<ShotEvent>, FormatError> {
    let mut rdr = csv::Reader::from_reader(r);
    expect_header(&mut rdr, &SHOTS_HEADER)?;
    let h = &SHOTS_HEADER;
    let mut events = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let f = |c: usize| field::<f64>(&rec, h, c, row);
        let snap = |base: usize| -> Result<Snapshot, FormatError> {
            Ok(Snapshot {
                x_m: f(base)?,
                y_m: f(base + 1)?,
                altitude_m: f(base + 2)?,
                heading_deg: f(base + 3)?,
                speed_mps: f(base + 4)?,
            })
        };
        let bad = |col: usize| FormatError::Field {
            row,
            column: h[col].to_string(),
            value: rec.get(col).unwrap_or("").to_string(),
        };
        let side = Side::parse(rec.get(5).unwrap_or("")).ok_or_else(|| bad(5))?;
        let outcome = match rec.get(21).unwrap_or("") {
            "" => None,
            "KILL" => Some(ShotOutcome::Kill),
            "NO_KILL" => Some(ShotOutcome::NoKill),
            _ => return Err(bad(21)),
        };
        events.push(ShotEvent {
            run_id: field(&rec, h, 0, row)?,
            case_index: field(&rec, h, 1, row)?,
            seed: field(&rec, h, 2, row)?,
            time_s: f(3)?,
            shooter_id: field(&rec, h, 4, row)?,
            shooter_side: side,
            target_id: field(&rec, h, 6, row)?,
            shooter: snap(7)?,
            target: snap(12)?,
            distance_m: f(17)?,
            off_boresight_deg: f(18)?,
            delta_heading_deg: f(19)?,
            wez_rmax_m: f(20)?,
            outcome,
        });
    }
    Ok(events)
}

pub fn write_runs_csv<W: Write>(w: W, runs: &[RunSummary]) -> Result<(), FormatError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(RUNS_HEADER)?;
    for r in runs {
        out.write_record([
            r.run_id.to_string(),
            r.case_index.to_string(),
            r.seed.to_string(),
            r.blue_initial.to_string(),
            r.red_initial.to_string(),
            r.blue_survivors.to_string(),
            r.red_survivors.to_string(),
            r.missiles_fired_blue.to_string(),
            r.missiles_fired_red.to_string(),
            exact(r.end_time_s),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_runs_csv<R: Read>(r: R) -> Result<Vec<RunSummary>, FormatError> {
    let mut rdr = csv::Reader::from_reader(r);
    expect_header(&mut rdr, &RUNS_HEADER)?;
    let h = &RUNS_HEADER;
    rdr.records()
        .enumerate()
        .map(|(row, rec)| {
            let rec = rec?;
            Ok(RunSummary {
                run_id: field(&rec, h, 0, row)?,
                case_index: field(&rec, h, 1, row)?,
                seed: field(&rec, h, 2, row)?,
                blue_initial: field(&rec, h, 3, row)?,
                red_initial: field(&rec, h, 4, row)?,
                blue_survivors: field(&rec, h, 5, row)?,
                red_survivors: field(&rec, h, 6, row)?,
                missiles_fired_blue: field(&rec, h, 7, row)?,
                missiles_fired_red: field(&rec, h, 8, row)?,
                end_time_s: field(&rec, h, 9, row)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doe::{decode_case, registry};
    use crate::sim::{run_engagement, RunLabel};

    #[test]
    fn shots_and_runs_round_trip() {
        let row: Vec<f64> = registry().iter().map(|s| s.midpoint()).collect();
        let case = decode_case(&row).unwrap();
        let out = run_engagement(&case, 4, RunLabel { run_id: 9, case_index: 2 });
        assert!(!out.events.is_empty());

        let mut buf = Vec::new();
        write_shots_csv(&mut buf, &out.events).unwrap();
        assert_eq!(read_shots_csv(&buf[..]).unwrap(), out.events);

        let mut buf = Vec::new();
        write_runs_csv(&mut buf, std::slice::from_ref(&out.summary)).unwrap();
        assert_eq!(read_runs_csv(&buf[..]).unwrap(), vec![out.summary]);
    }

    #[test]
    fn wrong_header_is_rejected() {
        let text = "run_id,case\n1,2\n";
        assert!(matches!(read_runs_csv(text.as_bytes()), Err(FormatError::Header { .. })));
    }

    #[test]
    fn unknown_outcome_is_a_field_error() {
        let mut buf = Vec::new();
        write_shots_csv(&mut buf, &[]).unwrap();
        let mut text = String::from_utf8(buf).unwrap();
        text.push_str("0,0,0,1,0,blue,4,0,0,1,0,1,0,0,1,0,1,1,0,0,1,MAYBE\n");
        match read_shots_csv(text.as_bytes()) {
            Err(FormatError::Field { column, .. }) => assert_eq!(column, "outcome"),
            other => panic!("{other:?}"),
        }
    }
}
