use super::{AircraftState, SimError, REFERENCE_RCS_DB, SCAN_FRACTION};

const GAMMA_AIR: f64 = 1.4;
const R_AIR: f64 = 287.05;
const T_SEA_LEVEL: f64 = 288.15;
const LAPSE_RATE: f64 = 0.0065;
const TROPOPAUSE_M: f64 = 11_000.0;

const WEZ_BASE_RANGE_M: f64 = 25_000.0;
const WEZ_MIN_M: f64 = 5_000.0;
const WEZ_MAX_M: f64 = 80_000.0;

/// ISA speed of sound; constant above the tropopause.
pub fn speed_of_sound(altitude_m: f64) -> Result<f64, SimError> {
    if altitude_m < 0.0 || altitude_m.is_nan() {
        return Err(SimError::NegativeAltitude(altitude_m));
    }
    let h = altitude_m.min(TROPOPAUSE_M);
    Ok((GAMMA_AIR * R_AIR * (T_SEA_LEVEL - LAPSE_RATE * h)).sqrt())
}

/// Maximum launch range of the weapon engagement zone.
///
/// Scales a 25 km base range by a mean-altitude term, a closure-rate term
/// and a target-aspect term (1 when the target flies straight at the
/// shooter, 0.5 when it flies directly away), clamps to [5, 80] km and
/// multiplies by the missile range factor.
pub fn wez_max_range(
    shooter: &AircraftState,
    target: &AircraftState,
    range_factor: f64,
) -> Result<f64, SimError> {
    let los = target.position - shooter.position;
    let range = los.norm();
    if range <= 0.0 {
        return Err(SimError::CoincidentPositions);
    }
    let u = los * (1.0 / range);
    let v_s = shooter.velocity();
    let v_t = target.velocity();

    let mean_alt = 0.5 * (shooter.position.z + target.position.z);
    let altitude_term = (1.0 + 0.4 * (mean_alt - 10_000.0) / 10_000.0).clamp(0.6, 1.4);

    let closure = u.dot(v_s) - u.dot(v_t);
    let closure_term = (1.0 + 0.5 * closure / 600.0).clamp(0.5, 1.5);

    let vt_norm = v_t.norm();
    let cos_aspect = if vt_norm > 0.0 {
        (v_t.dot(-u) / vt_norm).clamp(-1.0, 1.0)
    } else {
        1.0
    };
    let aspect_term = 0.75 + 0.25 * cos_aspect;

    let raw = WEZ_BASE_RANGE_M * altitude_term * closure_term * aspect_term;
    Ok(range_factor * raw.clamp(WEZ_MIN_M, WEZ_MAX_M))
}

/// Track-mode detection range against a target of the given RCS, using the
/// fourth-root radar-equation scaling relative to the reference RCS.
pub fn effective_detection_range(radar_range_m: f64, target_rcs_db: f64) -> f64 {
    radar_range_m * 10f64.powf((target_rcs_db - REFERENCE_RCS_DB) / 40.0)
}

/// Scan-mode detection range.
pub fn scan_range(radar_range_m: f64, target_rcs_db: f64) -> f64 {
    SCAN_FRACTION * effective_detection_range(radar_range_m, target_rcs_db)
}

#[cfg(test)]
mod tests {
    use super::super::engagement::test_aircraft;
    use super::super::{Side, Vec3};
    use super::*;

    #[test]
    fn speed_of_sound_reference_points() {
        assert!((speed_of_sound(0.0).unwrap() - 340.3).abs() < 0.1);
        assert!((speed_of_sound(11_000.0).unwrap() - 295.07).abs() < 0.1);
        assert!((speed_of_sound(15_000.0).unwrap() - 295.07).abs() < 0.1);
        let mid = speed_of_sound(8382.0).unwrap();
        assert!(mid > 295.07 && mid < 340.3);
        assert_eq!(
            speed_of_sound(-1.0),
            Err(SimError::NegativeAltitude(-1.0))
        );
    }

    #[test]
    fn neutral_geometry_gives_base_range() {
        // target flies at the shooter, shooter runs away at the same speed:
        // zero closure, head-on aspect
        let s = test_aircraft(0, Side::Blue, Vec3::new(0.0, 0.0, 10_000.0), 180.0, 250.0);
        let t = test_aircraft(1, Side::Red, Vec3::new(0.0, 40_000.0, 10_000.0), 180.0, 250.0);
        let r1 = wez_max_range(&s, &t, 1.0).unwrap();
        assert!((r1 - 25_000.0).abs() < 1e-9, "{r1}");
        let r2 = wez_max_range(&s, &t, 2.0).unwrap();
        assert_eq!(r2, 2.0 * r1);
    }

    #[test]
    fn beam_aspect_with_zero_closure() {
        let s = test_aircraft(0, Side::Blue, Vec3::new(0.0, 0.0, 10_000.0), 90.0, 250.0);
        let t = test_aircraft(1, Side::Red, Vec3::new(0.0, 40_000.0, 10_000.0), 90.0, 250.0);
        let r = wez_max_range(&s, &t, 1.0).unwrap();
        assert!((r - 18_750.0).abs() < 1e-9, "{r}");
    }

    #[test]
    fn coincident_positions_rejected() {
        let s = test_aircraft(0, Side::Blue, Vec3::new(0.0, 0.0, 10_000.0), 0.0, 250.0);
        let t = test_aircraft(1, Side::Red, Vec3::new(0.0, 0.0, 10_000.0), 0.0, 250.0);
        assert_eq!(wez_max_range(&s, &t, 1.0), Err(SimError::CoincidentPositions));
    }

    #[test]
    fn range_non_decreasing_in_closure() {
        // shooter flies north at increasing speed toward a beam target
        let t = test_aircraft(1, Side::Red, Vec3::new(0.0, 50_000.0, 9_000.0), 90.0, 250.0);
        let mut last = f64::NEG_INFINITY;
        for i in 0..100 {
            let v = 1.0 + 12.0 * i as f64;
            let s = test_aircraft(0, Side::Blue, Vec3::new(0.0, 0.0, 9_000.0), 0.0, v);
            let r = wez_max_range(&s, &t, 1.3).unwrap();
            assert!(r >= last);
            last = r;
        }
    }

    #[test]
    fn detection_range_scaling() {
        assert_eq!(effective_detection_range(200_000.0, -10.0), 200_000.0);
        assert!((effective_detection_range(200_000.0, 30.0) - 2_000_000.0).abs() < 1e-6);
        assert!((scan_range(250_000.0, -10.0) - 150_000.0).abs() < 1e-9);
    }
}
