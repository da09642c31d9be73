//! Deterministic constructive BVR engagement simulator.
//!
//! Blue and red wall formations hold CAP racetracks, detect each other by
//! radar, commit and engage under a shot philosophy expressed as a fraction
//! of the weapon engagement zone, and evade active inbound missiles. Every
//! launch produces a [`ShotEvent`] whose outcome is resolved by a point-mass
//! missile flyout with a probabilistic endgame.

mod agent;
mod engagement;
pub mod geometry;
mod io;
mod missile;
mod physics;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use agent::{behavior_step, fire_decision, sense, Action, Command, Contact, Tracklist};
pub use engagement::{initial_world, run_engagement, RunLabel, RunOutput};
pub use geometry::Vec3;
pub use io::{
    read_runs_csv, read_shots_csv, write_runs_csv, write_shots_csv, RUNS_HEADER, SHOTS_HEADER,
};
pub use missile::{endgame_draw, missile_step, MissileStep};
pub use physics::{effective_detection_range, scan_range, speed_of_sound, wez_max_range};

/// Integration step of the world clock.
pub const DT: f64 = 0.1;
/// Hard stop of a run.
pub const MAX_SIM_TIME_S: f64 = 1800.0;
/// Meters per degree of longitude at the equator.
pub const METERS_PER_DEG_LON: f64 = 111_320.0;
/// Separation between the blue and red CAP anchor lines.
pub const CAP_SEPARATION_M: f64 = 150_000.0;
/// Half length of a CAP racetrack leg, measured along the threat axis.
pub const CAP_HALF_LEG_M: f64 = 20_000.0;
/// Radar scan range as a fraction of track range.
pub const SCAN_FRACTION: f64 = 0.6;
/// RCS at which the radar's nominal track range applies.
pub const REFERENCE_RCS_DB: f64 = -10.0;
/// Inbound active missiles inside this range trigger the warning receiver.
pub const MISSILE_WARNING_RANGE_M: f64 = 20_000.0;
/// Half angle of the cone in which a shooter can support its missile.
pub const SUPPORT_CONE_DEG: f64 = 60.0;
/// Lowest altitude an evading aircraft descends to.
pub const EVADE_FLOOR_M: f64 = 1500.0;
/// Steepest climb or dive.
pub const MAX_FLIGHT_PATH_DEG: f64 = 10.0;
/// Longitudinal acceleration limit of aircraft.
pub const AIRCRAFT_ACCEL_MPS2: f64 = 15.0;
/// Red shot philosophy (percent of the WEZ maximum range).
pub const RED_SHOT_PHILOSOPHY_PCT: f64 = 60.0;
pub const RED_TRACK_RANGE_M: f64 = 250_000.0;
pub const RED_ACTIVATION_DISTANCE_M: f64 = 20_000.0;
pub const RED_RANGE_FACTOR: f64 = 1.0;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("altitude {0} m is below sea level")]
    NegativeAltitude(f64),
    #[error("shooter and target positions coincide")]
    CoincidentPositions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Blue,
    Red,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Blue => "blue",
            Side::Red => "red",
        }
    }

    pub fn parse(s: &str) -> Option<Side> {
        match s {
            "blue" => Some(Side::Blue),
            "red" => Some(Side::Red),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Behavior {
    Cap,
    Commit,
    Engage,
    Evade,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Guidance {
    Supported,
    Active,
    Dumb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShotOutcome {
    Kill,
    NoKill,
}

impl ShotOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            ShotOutcome::Kill => "KILL",
            ShotOutcome::NoKill => "NO_KILL",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Airframe {
    Red,
    BlueType1,
    BlueType2,
}

/// Static characteristics of an airframe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlatformSpec {
    pub side: Side,
    pub airframe: Airframe,
    pub missile_count: u32,
    pub baseline_rcs_db: f64,
    pub max_turn_rate_dps: f64,
    pub max_mach: f64,
}

impl PlatformSpec {
    pub fn red() -> Self {
        Self {
            side: Side::Red,
            airframe: Airframe::Red,
            missile_count: 4,
            baseline_rcs_db: -10.0,
            max_turn_rate_dps: 6.0,
            max_mach: 1.1,
        }
    }

    /// Blue airframe for concept 1 or 2.
    pub fn blue(concept: u8) -> Self {
        let (airframe, missile_count, baseline_rcs_db) = if concept == 1 {
            (Airframe::BlueType1, 3, -10.0)
        } else {
            (Airframe::BlueType2, 6, -25.0)
        };
        Self {
            side: Side::Blue,
            airframe,
            missile_count,
            baseline_rcs_db,
            max_turn_rate_dps: 6.0,
            max_mach: 1.1,
        }
    }
}

/// Per-aircraft parameters fixed for the whole run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentProfile {
    pub platform: PlatformSpec,
    pub rcs_db: f64,
    pub track_range_m: f64,
    pub shot_philosophy_pct: f64,
    pub range_factor: f64,
    pub activation_distance_m: f64,
    pub maneuver_alt_m: f64,
    pub maneuver_mach: f64,
    pub cap_mach: f64,
    /// True heading of the threat axis (outbound CAP leg).
    pub threat_axis_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AircraftState {
    pub id: usize,
    pub side: Side,
    pub position: Vec3,
    pub heading_deg: f64,
    pub speed_mps: f64,
    pub vertical_speed_mps: f64,
    pub alive: bool,
    pub missiles_left: u32,
    pub missiles_fired: u32,
    pub behavior: Behavior,
    pub committed_target: Option<usize>,
    pub command: Command,
    pub next_eval_s: f64,
    pub cap_anchor: Vec3,
    pub cap_outbound: bool,
    pub profile: AgentProfile,
    pub prev_position: Vec3,
}

impl AircraftState {
    pub fn velocity(&self) -> Vec3 {
        let vh = (self.speed_mps * self.speed_mps - self.vertical_speed_mps * self.vertical_speed_mps)
            .max(0.0)
            .sqrt();
        let h = geometry::heading_unit(self.heading_deg);
        Vec3::new(h.x * vh, h.y * vh, self.vertical_speed_mps)
    }

    pub fn altitude_m(&self) -> f64 {
        self.position.z
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissileState {
    pub id: usize,
    pub shooter_id: usize,
    pub target_id: usize,
    pub side: Side,
    pub position: Vec3,
    pub velocity: Vec3,
    pub speed_mps: f64,
    pub guidance: Guidance,
    pub time_of_flight_s: f64,
    pub activation_distance_m: f64,
    /// Kinematic range multiplier; divides the drag constant.
    pub range_factor: f64,
    /// Continuous time the range to target has been growing.
    pub opening_time_s: f64,
    pub last_range_m: f64,
    /// Index of the launch in the run's event list.
    pub event_index: usize,
}

/// Kinematic snapshot of an aircraft at launch time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub x_m: f64,
    pub y_m: f64,
    pub altitude_m: f64,
    pub heading_deg: f64,
    pub speed_mps: f64,
}

impl Snapshot {
    pub fn of(a: &AircraftState) -> Self {
        Self {
            x_m: a.position.x,
            y_m: a.position.y,
            altitude_m: a.position.z,
            heading_deg: a.heading_deg,
            speed_mps: a.speed_mps,
        }
    }
}

/// One missile launch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotEvent {
    pub run_id: u64,
    pub case_index: usize,
    pub seed: u64,
    pub time_s: f64,
    pub shooter_id: usize,
    pub shooter_side: Side,
    pub target_id: usize,
    pub shooter: Snapshot,
    pub target: Snapshot,
    pub distance_m: f64,
    pub off_boresight_deg: f64,
    pub delta_heading_deg: f64,
    pub wez_rmax_m: f64,
    /// `None` until the flyout resolves.
    pub outcome: Option<ShotOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: u64,
    pub case_index: usize,
    pub seed: u64,
    pub blue_initial: u32,
    pub red_initial: u32,
    pub blue_survivors: u32,
    pub red_survivors: u32,
    pub missiles_fired_blue: u32,
    pub missiles_fired_red: u32,
    pub end_time_s: f64,
}

/// Everything the engagement loop advances.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub time_s: f64,
    pub aircraft: Vec<AircraftState>,
    pub missiles: Vec<MissileState>,
    pub events: Vec<ShotEvent>,
    next_missile_id: usize,
}

impl WorldState {
    pub fn new(aircraft: Vec<AircraftState>) -> Self {
        Self {
            time_s: 0.0,
            aircraft,
            missiles: Vec::new(),
            events: Vec::new(),
            next_missile_id: 0,
        }
    }

    pub fn alive_count(&self, side: Side) -> u32 {
        self.aircraft
            .iter()
            .filter(|a| a.side == side && a.alive)
            .count() as u32
    }

    /// True when an unresolved missile of `side` is flying at `target`.
    pub fn missile_in_flight(&self, side: Side, target: usize) -> bool {
        self.missiles
            .iter()
            .any(|m| m.side == side && m.target_id == target)
    }

    fn alloc_missile_id(&mut self) -> usize {
        let id = self.next_missile_id;
        self.next_missile_id += 1;
        id
    }
}
