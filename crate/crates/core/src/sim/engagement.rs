//! The engagement loop.

use rand::Rng as _;

use super::agent::{behavior_step, fly, off_boresight, Command};
use super::geometry::wrap_360;
use super::missile::{missile_step, MissileStep, BOOST_SPEED_MPS};
use super::physics::{speed_of_sound, wez_max_range};
use super::{
    AgentProfile, AircraftState, Behavior, Guidance, MissileState, PlatformSpec, RunSummary,
    ShotEvent, ShotOutcome, Side, Snapshot, Vec3, WorldState, CAP_SEPARATION_M, DT,
    MAX_SIM_TIME_S, METERS_PER_DEG_LON, RED_ACTIVATION_DISTANCE_M, RED_RANGE_FACTOR,
    RED_SHOT_PHILOSOPHY_PCT, RED_TRACK_RANGE_M,
};
use crate::doe::SimCase;
use crate::seed::{rng_from_seed, Rng};

/// Identifiers stamped on every event and summary of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunLabel {
    pub run_id: u64,
    pub case_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub events: Vec<ShotEvent>,
    pub summary: RunSummary,
}

fn wall(
    side: Side,
    count: usize,
    spacing_deg: f64,
    anchor_y: f64,
    profile: AgentProfile,
    first_id: usize,
    rng: &mut Rng,
) -> Vec<AircraftState> {
    let spacing = spacing_deg * METERS_PER_DEG_LON;
    let center = 0.5 * (count as f64 - 1.0);
    (0..count)
        .map(|i| {
            let pos = Vec3::new((i as f64 - center) * spacing, anchor_y, profile.maneuver_alt_m);
            let speed = profile.cap_mach * speed_of_sound(pos.z).expect("positive altitude");
            AircraftState {
                id: first_id + i,
                side,
                position: pos,
                heading_deg: profile.threat_axis_deg,
                speed_mps: speed,
                vertical_speed_mps: 0.0,
                alive: true,
                missiles_left: profile.platform.missile_count,
                missiles_fired: 0,
                behavior: Behavior::Cap,
                committed_target: None,
                command: Command {
                    heading_deg: profile.threat_axis_deg,
                    speed_mps: speed,
                    altitude_m: pos.z,
                },
                next_eval_s: rng.gen_range(0.8..=1.2),
                cap_anchor: pos,
                cap_outbound: true,
                profile,
                prev_position: pos,
            }
        })
        .collect()
}

/// Blue wall on the southern CAP line heading north, red wall 150 km north
/// heading south. Draws each aircraft's first evaluation instant from `rng`.
pub fn initial_world(case: &SimCase, rng: &mut Rng) -> WorldState {
    let blue_platform = PlatformSpec::blue(case.blue_concept);
    let blue = AgentProfile {
        platform: blue_platform,
        rcs_db: blue_platform.baseline_rcs_db + case.blue_rcs_delta_db,
        track_range_m: case.blue_track_range_m,
        shot_philosophy_pct: case.blue_shot_philosophy_pct,
        range_factor: case.blue_missile_range_factor,
        activation_distance_m: case.blue_missile_act_dist_m,
        maneuver_alt_m: case.blue_alt_m,
        maneuver_mach: case.blue_speed_mach,
        cap_mach: case.blue_cap_mach,
        threat_axis_deg: 0.0,
    };
    let red_platform = PlatformSpec::red();
    let red = AgentProfile {
        platform: red_platform,
        rcs_db: red_platform.baseline_rcs_db,
        track_range_m: RED_TRACK_RANGE_M,
        shot_philosophy_pct: RED_SHOT_PHILOSOPHY_PCT,
        range_factor: RED_RANGE_FACTOR,
        activation_distance_m: RED_ACTIVATION_DISTANCE_M,
        maneuver_alt_m: case.red_alt_m,
        maneuver_mach: case.red_speed_mach,
        cap_mach: case.red_cap_mach,
        threat_axis_deg: 180.0,
    };
    let n_blue = if case.blue_six_ship { 6 } else { 4 };
    let mut aircraft = wall(Side::Blue, n_blue, case.blue_spacing_deg, 0.0, blue, 0, rng);
    aircraft.extend(wall(
        Side::Red,
        4,
        case.red_spacing_deg,
        CAP_SEPARATION_M,
        red,
        n_blue,
        rng,
    ));
    WorldState::new(aircraft)
}

fn launch(world: &mut WorldState, shooter_id: usize, target_id: usize, label: RunLabel, seed: u64) {
    let shooter = &world.aircraft[shooter_id];
    let target = &world.aircraft[target_id];
    let los = target.position - shooter.position;
    let distance = los.norm();
    let rmax = wez_max_range(shooter, target, shooter.profile.range_factor).unwrap_or(0.0);
    let event = ShotEvent {
        run_id: label.run_id,
        case_index: label.case_index,
        seed,
        time_s: world.time_s,
        shooter_id,
        shooter_side: shooter.side,
        target_id,
        shooter: Snapshot::of(shooter),
        target: Snapshot::of(target),
        distance_m: distance,
        off_boresight_deg: off_boresight(shooter, target),
        delta_heading_deg: wrap_360(shooter.heading_deg - target.heading_deg),
        wez_rmax_m: rmax,
        outcome: None,
    };
    let activation_distance_m = shooter.profile.activation_distance_m;
    let range_factor = shooter.profile.range_factor;
    let shooter_side = shooter.side;
    let shooter_pos = shooter.position;
    let id = world.alloc_missile_id();
    let missile = MissileState {
        id,
        shooter_id,
        target_id,
        side: shooter_side,
        position: shooter_pos,
        velocity: los.normalized() * BOOST_SPEED_MPS,
        speed_mps: BOOST_SPEED_MPS,
        guidance: Guidance::Supported,
        time_of_flight_s: 0.0,
        activation_distance_m,
        range_factor,
        opening_time_s: 0.0,
        last_range_m: distance,
        event_index: world.events.len(),
    };
    world.events.push(event);
    world.missiles.push(missile);
    let s = &mut world.aircraft[shooter_id];
    s.missiles_left -= 1;
    s.missiles_fired += 1;
}

/// Advances the world by one tick: behavior evaluations (with launches),
/// aircraft motion, then missile flyouts.
fn tick(world: &mut WorldState, rng: &mut Rng, label: RunLabel, seed: u64) {
    for i in 0..world.aircraft.len() {
        let a = &world.aircraft[i];
        if !a.alive || world.time_s + 1e-9 < a.next_eval_s {
            continue;
        }
        let action = behavior_step(world, i, rng);
        let a = &mut world.aircraft[i];
        a.behavior = action.behavior;
        a.committed_target = action.committed_target;
        a.command = action.command;
        a.cap_outbound = action.cap_outbound;
        a.next_eval_s = action.next_eval_s;
        if let Some(t) = action.fire_at {
            launch(world, i, t, label, seed);
        }
    }

    for a in world.aircraft.iter_mut().filter(|a| a.alive) {
        fly(a, DT);
    }

    let mut missiles = std::mem::take(&mut world.missiles);
    missiles.retain_mut(|m| match missile_step(m, &world.aircraft, DT, rng) {
        MissileStep::Flying => true,
        MissileStep::Terminal(outcome) => {
            if outcome == ShotOutcome::Kill {
                world.aircraft[m.target_id].alive = false;
            }
            world.events[m.event_index].outcome = Some(outcome);
            false
        }
    });
    world.missiles = missiles;
    world.time_s = ((world.time_s + DT) * 10.0).round() / 10.0;
}

/// Runs one engagement to completion.
///
/// The run ends when a side has no aircraft left and no missile is still
/// flying, or at the 1800 s cap, where unresolved missiles count as misses.
/// The result is a pure function of `(case, seed)`.
pub fn run_engagement(case: &SimCase, seed: u64, label: RunLabel) -> RunOutput {
    let mut rng = rng_from_seed(seed);
    let mut world = initial_world(case, &mut rng);
    let blue_initial = world.alive_count(Side::Blue);
    let red_initial = world.alive_count(Side::Red);

    while world.time_s < MAX_SIM_TIME_S - 1e-9 {
        let side_destroyed =
            world.alive_count(Side::Blue) == 0 || world.alive_count(Side::Red) == 0;
        if side_destroyed && world.missiles.is_empty() {
            break;
        }
        tick(&mut world, &mut rng, label, seed);
    }
    for m in world.missiles.drain(..) {
        world.events[m.event_index].outcome = Some(ShotOutcome::NoKill);
    }

    let fired = |side: Side| {
        world
            .aircraft
            .iter()
            .filter(|a| a.side == side)
            .map(|a| a.missiles_fired)
            .sum::<u32>()
    };
    let summary = RunSummary {
        run_id: label.run_id,
        case_index: label.case_index,
        seed,
        blue_initial,
        red_initial,
        blue_survivors: world.alive_count(Side::Blue),
        red_survivors: world.alive_count(Side::Red),
        missiles_fired_blue: fired(Side::Blue),
        missiles_fired_red: fired(Side::Red),
        end_time_s: world.time_s,
    };
    RunOutput {
        events: world.events,
        summary,
    }
}

/// Straight-flying aircraft with neutral profile for unit tests.
#[cfg(test)]
pub(crate) fn test_aircraft(
    id: usize,
    side: Side,
    position: Vec3,
    heading_deg: f64,
    speed_mps: f64,
) -> AircraftState {
    let platform = match side {
        Side::Blue => PlatformSpec::blue(1),
        Side::Red => PlatformSpec::red(),
    };
    let profile = AgentProfile {
        platform,
        rcs_db: -10.0,
        track_range_m: 250_000.0,
        shot_philosophy_pct: 60.0,
        range_factor: 1.0,
        activation_distance_m: 20_000.0,
        maneuver_alt_m: position.z,
        maneuver_mach: 0.9,
        cap_mach: 0.7,
        threat_axis_deg: if side == Side::Blue { 0.0 } else { 180.0 },
    };
    AircraftState {
        id,
        side,
        position,
        heading_deg,
        speed_mps,
        vertical_speed_mps: 0.0,
        alive: true,
        missiles_left: platform.missile_count,
        missiles_fired: 0,
        behavior: Behavior::Cap,
        committed_target: None,
        command: Command {
            heading_deg,
            speed_mps,
            altitude_m: position.z,
        },
        next_eval_s: 1.0,
        cap_anchor: position,
        cap_outbound: true,
        profile,
        prev_position: position,
    }
}
