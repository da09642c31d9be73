//! Sensing, decision making and flight of a single aircraft.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::geometry::{bearing_deg, heading_unit, off_boresight_deg, wrap_180, wrap_360};
use super::physics::{effective_detection_range, scan_range, speed_of_sound, wez_max_range};
use super::{
    AircraftState, Behavior, Guidance, Vec3, WorldState, AIRCRAFT_ACCEL_MPS2, CAP_HALF_LEG_M,
    EVADE_FLOOR_M, MAX_FLIGHT_PATH_DEG, MISSILE_WARNING_RANGE_M,
};
use crate::seed::Rng;

/// Autopilot targets held between evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Command {
    pub heading_deg: f64,
    pub speed_mps: f64,
    pub altitude_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contact {
    pub id: usize,
    pub range_m: f64,
}

/// Perceived enemies, nearest first, plus the missile-warning flag.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Tracklist {
    pub contacts: Vec<Contact>,
    pub missile_warning: bool,
    /// Position of the closest warning missile.
    pub threat: Option<Vec3>,
}

impl Tracklist {
    pub fn contains(&self, id: usize) -> bool {
        self.contacts.iter().any(|c| c.id == id)
    }
}

/// Outcome of one behavior evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    pub behavior: Behavior,
    pub committed_target: Option<usize>,
    pub command: Command,
    pub cap_outbound: bool,
    pub fire_at: Option<usize>,
    pub next_eval_s: f64,
}

/// Builds the agent's tracklist from its radar and warning receiver.
///
/// Enemies inside scan range are always seen; the committed target is also
/// held out to the longer track range.
pub fn sense(world: &WorldState, agent: &AircraftState) -> Tracklist {
    let mut tl = Tracklist::default();
    for enemy in world.aircraft.iter().filter(|e| e.alive && e.side != agent.side) {
        let range = (enemy.position - agent.position).norm();
        let track = effective_detection_range(agent.profile.track_range_m, enemy.profile.rcs_db);
        let scan = scan_range(agent.profile.track_range_m, enemy.profile.rcs_db);
        let committed = agent.committed_target == Some(enemy.id);
        if range <= scan || (committed && range <= track) {
            tl.contacts.push(Contact {
                id: enemy.id,
                range_m: range,
            });
        }
    }
    tl.contacts
        .sort_by(|a, b| a.range_m.total_cmp(&b.range_m).then(a.id.cmp(&b.id)));

    let mut closest = f64::INFINITY;
    for m in &world.missiles {
        if m.target_id != agent.id || m.guidance != Guidance::Active {
            continue;
        }
        let r = (m.position - agent.position).norm();
        if r <= MISSILE_WARNING_RANGE_M && r < closest {
            closest = r;
            tl.missile_warning = true;
            tl.threat = Some(m.position);
        }
    }
    tl
}

/// Fire when inside the shot-philosophy fraction of the WEZ, with missiles
/// left, the target held in the tracklist and no friendly missile already
/// flying at it.
pub fn fire_decision(
    world: &WorldState,
    shooter: &AircraftState,
    target: &AircraftState,
    tracklist: &Tracklist,
) -> bool {
    if !shooter.alive || !target.alive || shooter.missiles_left == 0 {
        return false;
    }
    if !tracklist.contains(target.id) || world.missile_in_flight(shooter.side, target.id) {
        return false;
    }
    let Ok(rmax) = wez_max_range(shooter, target, shooter.profile.range_factor) else {
        return false;
    };
    let distance = (target.position - shooter.position).norm();
    distance <= shooter.profile.shot_philosophy_pct / 100.0 * rmax
}

fn mach_to_mps(mach: f64, altitude_m: f64) -> f64 {
    mach * speed_of_sound(altitude_m.max(0.0)).expect("non-negative altitude")
}

/// One evaluation of the agent's state machine.
///
/// Priority: evade an inbound active missile; otherwise commit to (or keep)
/// the nearest tracked enemy not already claimed by a living teammate,
/// engaging once inside the WEZ; otherwise fly the CAP racetrack.
pub fn behavior_step(world: &WorldState, agent_id: usize, rng: &mut Rng) -> Action {
    let agent = &world.aircraft[agent_id];
    let tl = sense(world, agent);
    let next_eval_s = world.time_s + rng.gen_range(0.8..=1.2);
    let p = &agent.profile;

    if tl.missile_warning {
        let threat = tl.threat.expect("warning implies a threat position");
        return Action {
            behavior: Behavior::Evade,
            committed_target: agent.committed_target,
            command: Command {
                heading_deg: bearing_deg(threat, agent.position),
                speed_mps: mach_to_mps(p.platform.max_mach, agent.position.z)
                    .max(agent.speed_mps),
                altitude_m: EVADE_FLOOR_M,
            },
            cap_outbound: agent.cap_outbound,
            fire_at: None,
            next_eval_s,
        };
    }

    let claimed_by_teammate = |enemy: usize| {
        world.aircraft.iter().any(|f| {
            f.id != agent.id && f.side == agent.side && f.alive && f.committed_target == Some(enemy)
        })
    };
    let target = agent
        .committed_target
        .filter(|&id| tl.contains(id))
        .or_else(|| {
            tl.contacts
                .iter()
                .find(|c| !claimed_by_teammate(c.id))
                .map(|c| c.id)
        });

    match target {
        Some(tid) => {
            let enemy = &world.aircraft[tid];
            let distance = (enemy.position - agent.position).norm();
            let rmax = wez_max_range(agent, enemy, p.range_factor).unwrap_or(0.0);
            let behavior = if distance <= rmax {
                Behavior::Engage
            } else {
                Behavior::Commit
            };
            let fire_at = (behavior == Behavior::Engage && fire_decision(world, agent, enemy, &tl))
                .then_some(tid);
            Action {
                behavior,
                committed_target: Some(tid),
                command: Command {
                    heading_deg: bearing_deg(agent.position, enemy.position),
                    speed_mps: mach_to_mps(p.maneuver_mach, agent.position.z),
                    altitude_m: p.maneuver_alt_m,
                },
                cap_outbound: agent.cap_outbound,
                fire_at,
                next_eval_s,
            }
        }
        None => {
            let (heading_deg, cap_outbound) = cap_heading(agent);
            Action {
                behavior: Behavior::Cap,
                committed_target: None,
                command: Command {
                    heading_deg,
                    speed_mps: mach_to_mps(p.cap_mach, agent.position.z),
                    altitude_m: p.maneuver_alt_m,
                },
                cap_outbound,
                fire_at: None,
                next_eval_s,
            }
        }
    }
}

/// Racetrack steering: out along the threat axis, back past the anchor,
/// with a lateral correction toward the anchor line.
fn cap_heading(agent: &AircraftState) -> (f64, bool) {
    let axis = agent.profile.threat_axis_deg;
    let offset = agent.position - agent.cap_anchor;
    let along = offset.dot(heading_unit(axis));
    let cross = offset.dot(heading_unit(axis + 90.0));
    let mut outbound = agent.cap_outbound;
    if outbound && along > CAP_HALF_LEG_M {
        outbound = false;
    } else if !outbound && along < -CAP_HALF_LEG_M {
        outbound = true;
    }
    let correction = (cross / 10_000.0).atan().to_degrees().clamp(-30.0, 30.0);
    let heading = if outbound {
        axis - correction
    } else {
        axis + 180.0 + correction
    };
    (wrap_360(heading), outbound)
}

/// Advances an aircraft toward its commanded heading, speed and altitude.
pub(crate) fn fly(a: &mut AircraftState, dt: f64) {
    a.prev_position = a.position;
    let max_turn = a.profile.platform.max_turn_rate_dps * dt;
    let dh = wrap_180(a.command.heading_deg - a.heading_deg).clamp(-max_turn, max_turn);
    a.heading_deg = wrap_360(a.heading_deg + dh);

    let dv = (a.command.speed_mps - a.speed_mps)
        .clamp(-AIRCRAFT_ACCEL_MPS2 * dt, AIRCRAFT_ACCEL_MPS2 * dt);
    a.speed_mps = (a.speed_mps + dv).max(1.0);

    let max_vz = a.speed_mps * MAX_FLIGHT_PATH_DEG.to_radians().sin();
    a.vertical_speed_mps = ((a.command.altitude_m - a.position.z) / dt).clamp(-max_vz, max_vz);

    a.position += a.velocity() * dt;
    if a.position.z < 1.0 {
        a.position.z = 1.0;
    }
}

/// Signed bearing of `target` off `shooter`'s nose.
pub(crate) fn off_boresight(shooter: &AircraftState, target: &AircraftState) -> f64 {
    off_boresight_deg(shooter.position, shooter.heading_deg, target.position)
}

#[cfg(test)]
mod tests {
    use super::super::engagement::test_aircraft;
    use super::super::{MissileState, Side};
    use super::*;
    use crate::seed::rng_from_seed;

    fn world(aircraft: Vec<AircraftState>) -> WorldState {
        WorldState::new(aircraft)
    }

    #[test]
    fn nothing_in_range_keeps_cap() {
        let b = test_aircraft(0, Side::Blue, Vec3::new(0.0, 0.0, 9000.0), 0.0, 220.0);
        let r = test_aircraft(1, Side::Red, Vec3::new(0.0, 900_000.0, 9000.0), 180.0, 220.0);
        let w = world(vec![b, r]);
        let tl = sense(&w, &w.aircraft[0]);
        assert!(tl.contacts.is_empty());
        let act = behavior_step(&w, 0, &mut rng_from_seed(1));
        assert_eq!(act.behavior, Behavior::Cap);
        assert!(act.fire_at.is_none());
        // on the outbound leg, aligned with the anchor: fly the threat axis
        assert!(act.command.heading_deg.abs() < 1e-9);
        assert!((0.8..=1.2).contains(&act.next_eval_s));
    }

    #[test]
    fn cap_turns_back_at_end_of_leg() {
        let mut b = test_aircraft(0, Side::Blue, Vec3::new(0.0, 25_000.0, 9000.0), 0.0, 220.0);
        b.cap_anchor = Vec3::new(0.0, 0.0, 9000.0);
        let r = test_aircraft(1, Side::Red, Vec3::new(0.0, 900_000.0, 9000.0), 180.0, 220.0);
        let w = world(vec![b, r]);
        let act = behavior_step(&w, 0, &mut rng_from_seed(1));
        assert!(!act.cap_outbound);
        assert!((act.command.heading_deg - 180.0).abs() < 1e-9);
    }

    #[test]
    fn committed_target_held_at_track_range() {
        let mut b = test_aircraft(0, Side::Blue, Vec3::new(0.0, 0.0, 9000.0), 0.0, 220.0);
        b.profile.track_range_m = 200_000.0;
        let r = test_aircraft(1, Side::Red, Vec3::new(0.0, 160_000.0, 9000.0), 180.0, 220.0);
        let mut w = world(vec![b, r]);
        assert!(sense(&w, &w.aircraft[0]).contacts.is_empty());
        w.aircraft[0].committed_target = Some(1);
        let tl = sense(&w, &w.aircraft[0]);
        assert_eq!(tl.contacts.len(), 1);
        assert_eq!(tl.contacts[0].id, 1);
    }

    #[test]
    fn mirrored_duel_detects_symmetrically() {
        let b = test_aircraft(0, Side::Blue, Vec3::new(0.0, 0.0, 9000.0), 0.0, 250.0);
        let r = test_aircraft(1, Side::Red, Vec3::new(0.0, 300_000.0, 9000.0), 180.0, 250.0);
        let mut w = world(vec![b, r]);
        let mut first = None;
        for tick in 0..20_000 {
            let sb = !sense(&w, &w.aircraft[0]).contacts.is_empty();
            let sr = !sense(&w, &w.aircraft[1]).contacts.is_empty();
            assert_eq!(sb, sr, "tick {tick}");
            if sb {
                first = Some(tick);
                break;
            }
            for a in &mut w.aircraft {
                a.command = Command {
                    heading_deg: a.heading_deg,
                    speed_mps: a.speed_mps,
                    altitude_m: a.position.z,
                };
                fly(a, 0.1);
            }
        }
        assert!(first.is_some());
    }

    #[test]
    fn exactly_one_teammate_commits() {
        let b0 = test_aircraft(0, Side::Blue, Vec3::new(-5000.0, 0.0, 9000.0), 0.0, 220.0);
        let b1 = test_aircraft(1, Side::Blue, Vec3::new(5000.0, 0.0, 9000.0), 0.0, 220.0);
        let r = test_aircraft(2, Side::Red, Vec3::new(0.0, 100_000.0, 9000.0), 180.0, 220.0);
        let mut w = world(vec![b0, b1, r]);
        // evaluate both blues in either order; whoever goes first claims it
        for order in [[0usize, 1], [1, 0]] {
            for a in &mut w.aircraft {
                a.committed_target = None;
            }
            let mut rng = rng_from_seed(3);
            for &i in &order {
                let act = behavior_step(&w, i, &mut rng);
                w.aircraft[i].committed_target = act.committed_target;
                w.aircraft[i].behavior = act.behavior;
            }
            let committed: Vec<_> = w.aircraft[..2]
                .iter()
                .filter(|a| a.committed_target == Some(2))
                .map(|a| a.id)
                .collect();
            assert_eq!(committed, vec![order[0]]);
            assert_eq!(w.aircraft[order[1]].behavior, Behavior::Cap);
        }
    }

    #[test]
    fn commit_rule_enumeration() {
        // two blues, one red; for every combination of prior commitments and
        // teammate liveness, at most one living blue ends up on the target
        for prior in 0..4u8 {
            for teammate_alive in [true, false] {
                let mut b0 = test_aircraft(0, Side::Blue, Vec3::new(-5000.0, 0.0, 9000.0), 0.0, 220.0);
                let mut b1 = test_aircraft(1, Side::Blue, Vec3::new(5000.0, 0.0, 9000.0), 0.0, 220.0);
                let r = test_aircraft(2, Side::Red, Vec3::new(0.0, 100_000.0, 9000.0), 180.0, 220.0);
                b0.committed_target = (prior & 1 != 0).then_some(2);
                b1.committed_target = (prior & 2 != 0).then_some(2);
                b1.alive = teammate_alive;
                let w = world(vec![b0, b1, r]);
                let act = behavior_step(&w, 0, &mut rng_from_seed(9));
                let teammate_claims = teammate_alive && prior & 2 != 0;
                let keeps_own = prior & 1 != 0;
                let expect = keeps_own || !teammate_claims;
                assert_eq!(act.committed_target == Some(2), expect, "prior {prior} alive {teammate_alive}");
            }
        }
    }

    #[test]
    fn warning_forces_evade_over_engagement() {
        let mut b = test_aircraft(0, Side::Blue, Vec3::new(0.0, 0.0, 9000.0), 0.0, 250.0);
        b.committed_target = Some(1);
        b.behavior = Behavior::Engage;
        let r = test_aircraft(1, Side::Red, Vec3::new(0.0, 30_000.0, 9000.0), 180.0, 250.0);
        let mut w = world(vec![b, r]);
        w.missiles.push(MissileState {
            id: 0,
            shooter_id: 1,
            target_id: 0,
            side: Side::Red,
            position: Vec3::new(0.0, 15_000.0, 9000.0),
            velocity: Vec3::new(0.0, -1000.0, 0.0),
            speed_mps: 1000.0,
            guidance: Guidance::Active,
            time_of_flight_s: 10.0,
            activation_distance_m: 20_000.0,
            range_factor: 1.0,
            opening_time_s: 0.0,
            last_range_m: 15_000.0,
            event_index: 0,
        });
        let act = behavior_step(&w, 0, &mut rng_from_seed(0));
        assert_eq!(act.behavior, Behavior::Evade);
        // threat dead ahead: turn to put it behind
        assert!((act.command.heading_deg - 180.0).abs() < 1e-9);
        assert_eq!(act.command.altitude_m, EVADE_FLOOR_M);
        assert!(act.fire_at.is_none());
    }

    fn duel_at(distance_fraction: f64, side: Side, philosophy: f64) -> bool {
        let pos_t = Vec3::new(0.0, 40_000.0, 10_000.0);
        let (s_side, t_side) = match side {
            Side::Blue => (Side::Blue, Side::Red),
            Side::Red => (Side::Red, Side::Blue),
        };
        let mut s = test_aircraft(0, s_side, Vec3::new(0.0, 0.0, 10_000.0), 0.0, 250.0);
        s.profile.shot_philosophy_pct = philosophy;
        let t = test_aircraft(1, t_side, pos_t, 180.0, 250.0);
        let rmax = wez_max_range(&s, &t, s.profile.range_factor).unwrap();
        // slide the target along the line of sight to the wanted fraction
        let mut t = t;
        t.position = Vec3::new(0.0, distance_fraction * rmax, 10_000.0);
        let rmax2 = wez_max_range(&s, &t, s.profile.range_factor).unwrap();
        assert!((rmax2 - rmax).abs() < 1e-6);
        let w = world(vec![s, t]);
        let tl = Tracklist {
            contacts: vec![Contact { id: 1, range_m: 0.0 }],
            ..Default::default()
        };
        fire_decision(&w, &w.aircraft[0], &w.aircraft[1], &tl)
    }

    #[test]
    fn shot_philosophy_boundaries() {
        assert!(duel_at(0.59, Side::Red, 60.0));
        assert!(!duel_at(0.61, Side::Red, 60.0));
        assert!(!duel_at(0.55, Side::Blue, 50.0));
        assert!(duel_at(0.45, Side::Blue, 50.0));
    }

    #[test]
    fn no_second_missile_at_same_target() {
        let s = test_aircraft(0, Side::Red, Vec3::new(0.0, 0.0, 10_000.0), 0.0, 250.0);
        let t = test_aircraft(1, Side::Blue, Vec3::new(0.0, 5_000.0, 10_000.0), 180.0, 250.0);
        let mut w = world(vec![s, t]);
        let tl = sense(&w, &w.aircraft[0]);
        assert!(fire_decision(&w, &w.aircraft[0], &w.aircraft[1], &tl));
        w.missiles.push(MissileState {
            id: 0,
            shooter_id: 0,
            target_id: 1,
            side: Side::Red,
            position: Vec3::ZERO,
            velocity: Vec3::ZERO,
            speed_mps: 1000.0,
            guidance: Guidance::Supported,
            time_of_flight_s: 0.0,
            activation_distance_m: 20_000.0,
            range_factor: 1.0,
            opening_time_s: 0.0,
            last_range_m: 5000.0,
            event_index: 0,
        });
        assert!(!fire_decision(&w, &w.aircraft[0], &w.aircraft[1], &tl));
        w.missiles.clear();
        w.aircraft[0].missiles_left = 0;
        assert!(!fire_decision(&w, &w.aircraft[0], &w.aircraft[1], &tl));
    }
}
