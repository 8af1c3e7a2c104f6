//! Microscopic traffic flow around the ego truck: IDM car following,
//! MOBIL lane changes, stochastic spawning, and the four run modes
//! (free-running, ego-interactive, config-restored rerun, trajectory
//! replay).

mod idm;
mod mobil;
mod record;
mod world;

pub use idm::{equilibrium_gap, idm_acceleration, IdmParams};
pub use mobil::{change_is_safe, mobil_decide, GapCar, LaneSide, MobilParams, MobilSurround, TargetLaneNeighbors};
pub use record::{ConfigSnapshot, TrajectoryLog};
pub use world::{EgoObstacle, StepOutcome, World};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrafficError {
    #[error("log/snapshot format error: {0}")]
    Format(String),
    #[error("unsupported version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
}

/// Kinematic state of one traffic vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: u64,
    pub lane: usize,
    /// Longitudinal station of the front bumper, meters.
    pub s: f64,
    pub v: f64,
    pub a: f64,
    pub length: f64,
}

/// Traffic generation and behavior parameters. All fields are plain
/// data so a config can be snapshotted and restored byte-for-byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficConfig {
    /// Per-lane per-step probability of inserting a vehicle at the entry.
    pub spawn_probability: f64,
    /// Upper speed of the spawned traffic, m/s.
    pub v_max_traffic: f64,
    pub idm: IdmParams,
    pub mobil: MobilParams,
    pub seed: u64,
    /// Length of spawned vehicles, meters.
    pub car_length: f64,
}

impl TrafficConfig {
    pub fn new(spawn_probability: f64, v_max_traffic: f64, seed: u64) -> Self {
        assert!((0.0..=1.0).contains(&spawn_probability));
        let mut idm = IdmParams::default();
        idm.v0 = v_max_traffic;
        Self {
            spawn_probability,
            v_max_traffic,
            idm,
            mobil: MobilParams::default(),
            seed,
            car_length: 4.5,
        }
    }
}

/// Run mode of a traffic world.
#[derive(Debug, Clone)]
pub enum SimMode {
    /// Free-running traffic; the ego is invisible to the flow.
    PureSim,
    /// Traffic interacts with the registered ego truck.
    InterSim,
    /// Deterministic rerun from a stored configuration snapshot.
    ReSim(ConfigSnapshot),
    /// State-by-state replay of a stored trajectory log.
    RepSim(TrajectoryLog),
}

/// One observed neighbor slot relative to the ego (padded when absent).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborObservation {
    /// (delta s, delta lateral offset) in meters.
    pub rel_position: (f64, f64),
    /// (delta longitudinal speed, delta lateral speed) in m/s.
    pub rel_velocity: (f64, f64),
    pub present: bool,
}

/// Sentinel padding distance for absent neighbor slots, meters.
pub const NEIGHBOR_PAD_DISTANCE: f64 = 200.0;

impl NeighborObservation {
    pub fn absent_front() -> Self {
        Self { rel_position: (NEIGHBOR_PAD_DISTANCE, 0.0), rel_velocity: (0.0, 0.0), present: false }
    }

    pub fn absent_rear() -> Self {
        Self { rel_position: (-NEIGHBOR_PAD_DISTANCE, 0.0), rel_velocity: (0.0, 0.0), present: false }
    }
}
