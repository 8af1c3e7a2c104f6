//! MOBIL lane-change criterion: a safety veto on the new follower's
//! braking plus a politeness-weighted acceleration incentive.

use serde::{Deserialize, Serialize};

use super::idm::{idm_acceleration, IdmParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobilParams {
    /// Politeness factor weighting follower gains.
    pub politeness: f64,
    /// Incentive threshold, m/s².
    pub a_thr: f64,
    /// Safe braking bound for the new follower (positive), m/s².
    pub b_safe: f64,
}

impl Default for MobilParams {
    fn default() -> Self {
        Self { politeness: 0.3, a_thr: 0.1, b_safe: 4.0 }
    }
}

/// A neighboring car reduced to what the criterion needs: its speed and
/// the bumper-to-bumper gap to the deciding agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapCar {
    pub gap: f64,
    pub v: f64,
}

/// Leader/follower pair in one candidate target lane.
#[derive(Debug, Clone, Copy, Default)]
pub struct TargetLaneNeighbors {
    pub leader: Option<GapCar>,
    pub follower: Option<GapCar>,
}

/// Everything the deciding agent can see. `left`/`right` are `None`
/// where no such lane exists.
#[derive(Debug, Clone, Copy, Default)]
pub struct MobilSurround {
    pub cur_leader: Option<GapCar>,
    pub cur_follower: Option<GapCar>,
    pub left: Option<TargetLaneNeighbors>,
    pub right: Option<TargetLaneNeighbors>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaneSide {
    Left,
    Right,
}

fn accel_vs(v: f64, leader: Option<GapCar>, idm: &IdmParams) -> f64 {
    match leader {
        Some(l) => idm_acceleration(v, l.v, l.gap, idm),
        None => idm_acceleration(v, 0.0, f64::INFINITY, idm),
    }
}

/// Incentive for moving into one target lane, or None if the safety
/// criterion vetoes it.
fn evaluate_side(
    v: f64,
    agent_length: f64,
    cur_leader: Option<GapCar>,
    cur_follower: Option<GapCar>,
    t: &TargetLaneNeighbors,
    p: &MobilParams,
    idm: &IdmParams,
) -> Option<f64> {
    // overlap with either target neighbor is an immediate veto
    if t.leader.map_or(false, |l| l.gap <= 0.0) || t.follower.map_or(false, |f| f.gap <= 0.0) {
        return None;
    }
    // safety: the new follower must not need to brake harder than b_safe
    let new_follower_after = match t.follower {
        Some(f) => idm_acceleration(f.v, v, f.gap, idm),
        None => 0.0,
    };
    if new_follower_after < -p.b_safe {
        return None;
    }

    let a_self_now = accel_vs(v, cur_leader, idm);
    let a_self_new = accel_vs(v, t.leader, idm);

    // target follower: currently follows the target leader
    let (tf_before, tf_after) = match t.follower {
        Some(f) => {
            let before = match t.leader {
                Some(l) => idm_acceleration(f.v, l.v, f.gap + agent_length + l.gap, idm),
                None => idm_acceleration(f.v, 0.0, f64::INFINITY, idm),
            };
            (before, new_follower_after)
        }
        None => (0.0, 0.0),
    };
    // old follower: gains the current leader after the change
    let (of_before, of_after) = match cur_follower {
        Some(f) => {
            let before = idm_acceleration(f.v, v, f.gap, idm);
            let after = match cur_leader {
                Some(l) => idm_acceleration(f.v, l.v, f.gap + agent_length + l.gap, idm),
                None => idm_acceleration(f.v, 0.0, f64::INFINITY, idm),
            };
            (before, after)
        }
        None => (0.0, 0.0),
    };

    Some(a_self_new - a_self_now + p.politeness * ((tf_after - tf_before) + (of_after - of_before)))
}

/// Decide whether to change lane. Returns the chosen side only when both
/// the safety criterion and the incentive criterion hold; ties between
/// sides resolve to the left, and an incentive at or below the threshold
/// keeps the agent in lane.
pub fn mobil_decide(
    v: f64,
    agent_length: f64,
    surround: &MobilSurround,
    p: &MobilParams,
    idm: &IdmParams,
) -> Option<LaneSide> {
    let left = surround
        .left
        .as_ref()
        .and_then(|t| evaluate_side(v, agent_length, surround.cur_leader, surround.cur_follower, t, p, idm));
    let right = surround
        .right
        .as_ref()
        .and_then(|t| evaluate_side(v, agent_length, surround.cur_leader, surround.cur_follower, t, p, idm));

    let best = match (left, right) {
        (Some(l), Some(r)) if r > l => (LaneSide::Right, r),
        (Some(l), _) => (LaneSide::Left, l),
        (None, Some(r)) => (LaneSide::Right, r),
        (None, None) => return None,
    };
    (best.1 > p.a_thr).then_some(best.0)
}

/// Re-evaluate the safety criterion for a decided change; used by the
/// world as a post-condition check.
pub fn change_is_safe(
    v: f64,
    t: &TargetLaneNeighbors,
    p: &MobilParams,
    idm: &IdmParams,
) -> bool {
    if t.leader.map_or(false, |l| l.gap <= 0.0) || t.follower.map_or(false, |f| f.gap <= 0.0) {
        return false;
    }
    match t.follower {
        Some(f) => idm_acceleration(f.v, v, f.gap, idm) >= -p.b_safe,
        None => true,
    }
}
