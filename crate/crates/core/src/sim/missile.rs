//! Point-mass missile flyout with proportional navigation.

use rand::Rng as _;

use super::agent::off_boresight;
use super::{
    AircraftState, Guidance, MissileState, ShotOutcome, Vec3, SUPPORT_CONE_DEG,
};
use crate::seed::Rng;

pub const BOOST_SPEED_MPS: f64 = 1000.0;
pub const BURN_TIME_S: f64 = 8.0;
pub const DRAG_CONSTANT: f64 = 0.02;
pub const NAV_GAIN: f64 = 4.0;
pub const MAX_LATERAL_G: f64 = 30.0;
pub const MAX_TIME_OF_FLIGHT_S: f64 = 180.0;
pub const OPENING_LIMIT_S: f64 = 2.0;
pub const LETHAL_RADIUS_M: f64 = 10.0;
pub const PROBABILITY_OF_KILL: f64 = 0.9;
const G0: f64 = 9.80665;

/// Result of advancing a missile by one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MissileStep {
    Flying,
    Terminal(ShotOutcome),
}

/// Endgame roll for a missile that passed within the lethal radius.
pub fn endgame_draw(rng: &mut Rng) -> ShotOutcome {
    if rng.gen::<f64>() < PROBABILITY_OF_KILL {
        ShotOutcome::Kill
    } else {
        ShotOutcome::NoKill
    }
}

/// Distance of closest approach while two points move linearly from
/// `(a0, b0)` to `(a1, b1)` over one step.
fn closest_approach(a0: Vec3, a1: Vec3, b0: Vec3, b1: Vec3) -> f64 {
    let r0 = b0 - a0;
    let dr = (b1 - a1) - r0;
    let dd = dr.dot(dr);
    let s = if dd > 0.0 {
        (-r0.dot(dr) / dd).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (r0 + dr * s).norm()
}

/// Advances `missile` by `dt` against the current aircraft states.
///
/// `aircraft` must already hold this tick's positions, with the previous
/// positions in `prev_position`. The endgame roll draws from `rng` only when
/// a guided missile passes within the lethal radius of a living target.
pub fn missile_step(
    missile: &mut MissileState,
    aircraft: &[AircraftState],
    dt: f64,
    rng: &mut Rng,
) -> MissileStep {
    let target = &aircraft[missile.target_id];
    if !target.alive {
        return MissileStep::Terminal(ShotOutcome::NoKill);
    }

    if missile.guidance == Guidance::Supported {
        let range = (target.prev_position - missile.position).norm();
        let shooter = &aircraft[missile.shooter_id];
        if range <= missile.activation_distance_m {
            missile.guidance = Guidance::Active;
        } else if !shooter.alive || off_boresight(shooter, target).abs() > SUPPORT_CONE_DEG {
            missile.guidance = Guidance::Dumb;
        }
    }

    missile.time_of_flight_s += dt;
    if missile.time_of_flight_s > BURN_TIME_S {
        let v = missile.speed_mps;
        missile.speed_mps = v * (-DRAG_CONSTANT / missile.range_factor * dt * v / 300.0).exp();
    } else {
        missile.speed_mps = BOOST_SPEED_MPS;
    }

    let dir = if missile.guidance == Guidance::Dumb {
        missile.velocity.normalized()
    } else {
        let r = target.prev_position - missile.position;
        let v_rel = target.velocity() - missile.velocity;
        let rr = r.dot(r).max(1e-9);
        let omega = r.cross(v_rel) * (1.0 / rr);
        let mut acc = omega.cross(missile.velocity) * NAV_GAIN;
        let limit = MAX_LATERAL_G * G0;
        let a = acc.norm();
        if a > limit {
            acc = acc * (limit / a);
        }
        (missile.velocity + acc * dt).normalized()
    };

    let p0 = missile.position;
    missile.velocity = dir * missile.speed_mps;
    missile.position = p0 + missile.velocity * dt;

    let miss_distance = closest_approach(p0, missile.position, target.prev_position, target.position);
    if missile.guidance != Guidance::Dumb && miss_distance <= LETHAL_RADIUS_M {
        return MissileStep::Terminal(endgame_draw(rng));
    }

    let range = (target.position - missile.position).norm();
    if range > missile.last_range_m {
        missile.opening_time_s += dt;
    } else {
        missile.opening_time_s = 0.0;
    }
    missile.last_range_m = range;
    if missile.opening_time_s >= OPENING_LIMIT_S - 1e-9
        || missile.time_of_flight_s > MAX_TIME_OF_FLIGHT_S
    {
        return MissileStep::Terminal(ShotOutcome::NoKill);
    }
    MissileStep::Flying
}

#[cfg(test)]
mod tests {
    use super::super::engagement::test_aircraft;
    use super::super::{Side, DT};
    use super::*;
    use crate::seed::rng_from_seed;

    fn missile_at(target: &AircraftState, shooter: &AircraftState, act: f64) -> MissileState {
        let los = (target.position - shooter.position).normalized();
        MissileState {
            id: 0,
            shooter_id: shooter.id,
            target_id: target.id,
            side: shooter.side,
            position: shooter.position,
            velocity: los * BOOST_SPEED_MPS,
            speed_mps: BOOST_SPEED_MPS,
            guidance: Guidance::Supported,
            time_of_flight_s: 0.0,
            activation_distance_m: act,
            range_factor: 1.0,
            opening_time_s: 0.0,
            last_range_m: (target.position - shooter.position).norm(),
            event_index: 0,
        }
    }

    fn advance(ac: &mut [AircraftState]) {
        for a in ac.iter_mut() {
            a.prev_position = a.position;
            a.position += a.velocity() * DT;
        }
    }

    #[test]
    fn closest_approach_inside_a_step() {
        let d = closest_approach(
            Vec3::new(0.0, -50.0, 0.0),
            Vec3::new(0.0, 50.0, 0.0),
            Vec3::new(3.0, 0.0, 0.0),
            Vec3::new(3.0, 0.0, 0.0),
        );
        assert!((d - 3.0).abs() < 1e-12);
    }

    #[test]
    fn dead_target_resolves_no_kill() {
        let s = test_aircraft(0, Side::Blue, Vec3::new(0.0, 0.0, 9000.0), 0.0, 250.0);
        let mut t = test_aircraft(1, Side::Red, Vec3::new(0.0, 30_000.0, 9000.0), 180.0, 250.0);
        t.alive = false;
        let mut m = missile_at(&t, &s, 20_000.0);
        let ac = vec![s, t];
        let r = missile_step(&mut m, &ac, DT, &mut rng_from_seed(0));
        assert_eq!(r, MissileStep::Terminal(ShotOutcome::NoKill));
    }

    #[test]
    fn shooter_loss_before_activation_goes_dumb_and_misses() {
        let mut s = test_aircraft(0, Side::Blue, Vec3::new(0.0, 0.0, 9000.0), 0.0, 250.0);
        let t = test_aircraft(1, Side::Red, Vec3::new(8_000.0, 45_000.0, 9000.0), 90.0, 250.0);
        let mut m = missile_at(&t, &s, 15_000.0);
        s.alive = false;
        let mut ac = vec![s, t];
        let mut rng = rng_from_seed(4);
        let mut outcome = None;
        for _ in 0..3000 {
            advance(&mut ac);
            if let MissileStep::Terminal(o) = missile_step(&mut m, &ac, DT, &mut rng) {
                outcome = Some(o);
                break;
            }
        }
        assert_eq!(m.guidance, Guidance::Dumb);
        assert_eq!(outcome, Some(ShotOutcome::NoKill));
    }

    #[test]
    fn target_leaving_support_cone_drops_guidance() {
        let mut s = test_aircraft(0, Side::Blue, Vec3::new(0.0, 0.0, 9000.0), 0.0, 250.0);
        let t = test_aircraft(1, Side::Red, Vec3::new(0.0, 60_000.0, 9000.0), 90.0, 250.0);
        let mut m = missile_at(&t, &s, 15_000.0);
        s.heading_deg = 180.0;
        let ac = vec![s, t];
        missile_step(&mut m, &ac, DT, &mut rng_from_seed(0));
        assert_eq!(m.guidance, Guidance::Dumb);
    }

    #[test]
    fn activation_inside_distance() {
        let s = test_aircraft(0, Side::Blue, Vec3::new(0.0, 0.0, 9000.0), 0.0, 250.0);
        let t = test_aircraft(1, Side::Red, Vec3::new(0.0, 18_000.0, 9000.0), 180.0, 250.0);
        let mut m = missile_at(&t, &s, 20_000.0);
        let ac = vec![s, t];
        missile_step(&mut m, &ac, DT, &mut rng_from_seed(0));
        assert_eq!(m.guidance, Guidance::Active);
    }

    #[test]
    fn guided_shot_at_straight_target_reaches_endgame() {
        let s = test_aircraft(0, Side::Blue, Vec3::new(0.0, 0.0, 9000.0), 0.0, 250.0);
        let t = test_aircraft(1, Side::Red, Vec3::new(3_000.0, 25_000.0, 9500.0), 250.0, 260.0);
        let mut m = missile_at(&t, &s, 20_000.0);
        let mut ac = vec![s, t];
        let mut rng = rng_from_seed(11);
        let mut min_range = f64::INFINITY;
        let mut terminal = None;
        for _ in 0..2000 {
            advance(&mut ac);
            let step = missile_step(&mut m, &ac, DT, &mut rng);
            min_range = min_range.min((ac[1].position - m.position).norm());
            if let MissileStep::Terminal(o) = step {
                terminal = Some(o);
                break;
            }
        }
        assert!(terminal.is_some());
        assert!(m.opening_time_s < OPENING_LIMIT_S, "missile flew past: min range {min_range}");
    }

    #[test]
    fn endgame_rate_near_probability_of_kill() {
        let mut rng = rng_from_seed(2024);
        let n = 20_000;
        let kills = (0..n)
            .filter(|_| endgame_draw(&mut rng) == ShotOutcome::Kill)
            .count();
        let rate = kills as f64 / n as f64;
        assert!((rate - 0.9).abs() < 0.01, "{rate}");
    }
}
