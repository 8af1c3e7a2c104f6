//! Versioned text serialization for replay logs and config snapshots.

use serde::{Deserialize, Serialize};

use super::{TrafficConfig, TrafficError};

const LOG_VERSION: u32 = 1;
const SNAPSHOT_VERSION: u32 = 1;

/// Per-frame record of one agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentRecord {
    pub id: u64,
    pub lane: usize,
    pub s: f64,
    pub v: f64,
    pub a: f64,
    pub length: f64,
}

/// A recorded traffic run: one frame of agent records per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    version: u32,
    dt: f64,
    frames: Vec<Vec<AgentRecord>>,
}

impl TrajectoryLog {
    pub fn new(dt: f64) -> Self {
        Self { version: LOG_VERSION, dt, frames: Vec::new() }
    }

    pub fn push_frame(&mut self, frame: Vec<AgentRecord>) {
        self.frames.push(frame);
    }

    pub fn frame(&self, idx: usize) -> Option<&[AgentRecord]> {
        self.frames.get(idx).map(|f| f.as_slice())
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn to_text(&self) -> String {
        serde_json::to_string(self).expect("log serialization cannot fail")
    }

    pub fn from_text(text: &str) -> Result<Self, TrafficError> {
        let log: Self = serde_json::from_str(text).map_err(|e| TrafficError::Format(e.to_string()))?;
        if log.version != LOG_VERSION {
            return Err(TrafficError::Version { found: log.version, expected: LOG_VERSION });
        }
        Ok(log)
    }
}

/// Everything needed to restart an episode from t = 0: the config (seed
/// included) and the road slice the world ran on. Consumed rng draws are
/// deliberately not part of a snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSnapshot {
    version: u32,
    pub config: TrafficConfig,
    pub lane_centers: Vec<f64>,
    pub road_length: f64,
}

impl ConfigSnapshot {
    pub fn new(config: TrafficConfig, lane_centers: Vec<f64>, road_length: f64) -> Self {
        Self { version: SNAPSHOT_VERSION, config, lane_centers, road_length }
    }

    pub fn to_text(&self) -> String {
        serde_json::to_string_pretty(self).expect("snapshot serialization cannot fail")
    }

    pub fn from_text(text: &str) -> Result<Self, TrafficError> {
        let snap: Self = serde_json::from_str(text).map_err(|e| TrafficError::Format(e.to_string()))?;
        if snap.version != SNAPSHOT_VERSION {
            return Err(TrafficError::Version { found: snap.version, expected: SNAPSHOT_VERSION });
        }
        Ok(snap)
    }
}
