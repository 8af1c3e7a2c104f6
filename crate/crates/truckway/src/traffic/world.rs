//! The traffic world: deterministic per-seed stepping of all agents.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::idm::idm_acceleration;
use super::mobil::{mobil_decide, GapCar, LaneSide, MobilSurround, TargetLaneNeighbors};
use super::record::{AgentRecord, ConfigSnapshot, TrajectoryLog};
use super::{AgentState, NeighborObservation, SimMode, TrafficConfig};

/// The ego truck as seen by the traffic flow (interactive mode only).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EgoObstacle {
    pub s: f64,
    pub v: f64,
    /// Lateral offset from the road reference line, meters.
    pub lateral: f64,
    /// Lateral velocity, m/s.
    pub lateral_velocity: f64,
    /// Lane index the ego currently occupies.
    pub lane: usize,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Running,
    /// Replay source has no more frames.
    LogExhausted,
}

#[derive(Debug, Clone)]
pub struct World {
    cfg: TrafficConfig,
    lane_count: usize,
    road_length: f64,
    lane_centers: Vec<f64>,
    agents: Vec<AgentState>,
    rng: ChaCha8Rng,
    next_id: u64,
    time: f64,
    step_count: u64,
    spawn_attempts: u64,
    mode_kind: ModeKind,
    replay: Option<ReplayState>,
    ego: Option<EgoObstacle>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ModeKind {
    Pure,
    Inter,
    Replay,
}

#[derive(Debug, Clone)]
struct ReplayState {
    log: TrajectoryLog,
    cursor: usize,
}

impl World {
    /// Create a world over `lane_count` parallel lanes of `road_length`
    /// meters with the given lateral lane centers (leftmost first).
    pub fn new(cfg: TrafficConfig, lane_centers: Vec<f64>, road_length: f64, mode: SimMode) -> Self {
        let lane_count = lane_centers.len();
        assert!(lane_count >= 1);
        match mode {
            SimMode::PureSim => Self::fresh(cfg, lane_centers, road_length, ModeKind::Pure),
            SimMode::InterSim => Self::fresh(cfg, lane_centers, road_length, ModeKind::Inter),
            SimMode::ReSim(snapshot) => {
                // restart the recorded episode from t = 0: the snapshot holds
                // the original config (and with it the seed), not consumed
                // rng state
                Self::fresh(snapshot.config, snapshot.lane_centers, snapshot.road_length, ModeKind::Pure)
            }
            SimMode::RepSim(log) => {
                let mut w = Self::fresh(cfg, lane_centers, road_length, ModeKind::Replay);
                w.replay = Some(ReplayState { log, cursor: 0 });
                w
            }
        }
    }

    fn fresh(cfg: TrafficConfig, lane_centers: Vec<f64>, road_length: f64, mode_kind: ModeKind) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Self {
            lane_count: lane_centers.len(),
            lane_centers,
            road_length,
            rng,
            next_id: 1,
            time: 0.0,
            step_count: 0,
            spawn_attempts: 0,
            mode_kind,
            replay: None,
            ego: None,
            cfg,
            agents: Vec::new(),
        }
    }

    pub fn config(&self) -> &TrafficConfig {
        &self.cfg
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn lane_count(&self) -> usize {
        self.lane_count
    }

    pub fn road_length(&self) -> f64 {
        self.road_length
    }

    pub fn lane_center(&self, lane: usize) -> f64 {
        self.lane_centers[lane]
    }

    /// How many spawn draws have fired so far (including blocked entries).
    pub fn spawn_attempts(&self) -> u64 {
        self.spawn_attempts
    }

    /// Register (or clear) the ego obstacle. Only interactive worlds let
    /// the flow react to it; observation queries use it in any mode.
    pub fn set_ego(&mut self, ego: Option<EgoObstacle>) {
        self.ego = ego;
    }

    pub fn ego(&self) -> Option<&EgoObstacle> {
        self.ego.as_ref()
    }

    /// Capture a restart-from-zero snapshot of this world's configuration.
    pub fn snapshot_config(&self) -> ConfigSnapshot {
        ConfigSnapshot::new(self.cfg.clone(), self.lane_centers.clone(), self.road_length)
    }

    /// Record the current agent states as one frame of a trajectory log.
    pub fn record_frame(&self, log: &mut TrajectoryLog) {
        log.push_frame(
            self.agents
                .iter()
                .map(|a| AgentRecord {
                    id: a.id,
                    lane: a.lane,
                    s: a.s,
                    v: a.v,
                    a: a.a,
                    length: a.length,
                })
                .collect(),
        );
    }

    /// Advance the world by `dt` seconds.
    pub fn step(&mut self, dt: f64) -> StepOutcome {
        assert!(dt > 0.0);
        if self.mode_kind == ModeKind::Replay {
            return self.step_replay();
        }

        self.spawn_step(dt);
        self.lane_change_pass();
        self.integrate(dt);

        self.time += dt;
        self.step_count += 1;
        StepOutcome::Running
    }

    fn step_replay(&mut self) -> StepOutcome {
        let replay = self.replay.as_mut().expect("replay worlds carry a log");
        let Some(frame) = replay.log.frame(replay.cursor) else {
            return StepOutcome::LogExhausted;
        };
        self.agents = frame
            .iter()
            .map(|r| AgentState { id: r.id, lane: r.lane, s: r.s, v: r.v, a: r.a, length: r.length })
            .collect();
        replay.cursor += 1;
        self.time += replay.log.dt();
        self.step_count += 1;
        StepOutcome::Running
    }

    /// Stochastic entry spawning. Each lane draws independently; a draw
    /// that fires but finds the entry blocked is skipped (the rng stream
    /// still advances identically).
    fn spawn_step(&mut self, _dt: f64) {
        for lane in 0..self.lane_count {
            if self.rng.gen::<f64>() >= self.cfg.spawn_probability {
                continue;
            }
            self.spawn_attempts += 1;
            let v = self.rng.gen_range(0.7..=1.0) * self.cfg.v_max_traffic;
            let entry_gap = self
                .agents
                .iter()
                .filter(|a| a.lane == lane)
                .map(|a| a.s - a.length)
                .fold(f64::INFINITY, f64::min);
            if entry_gap <= self.cfg.idm.s0 + v * self.cfg.idm.t_headway {
                continue;
            }
            self.agents.push(AgentState {
                id: self.next_id,
                lane,
                s: 0.0,
                v,
                a: 0.0,
                length: self.cfg.car_length,
            });
            self.next_id += 1;
        }
    }

    /// Leader of a position in a lane among traffic agents (and the ego in
    /// interactive mode): the nearest vehicle strictly ahead. Returns the
    /// bumper-to-bumper gap and the leader speed.
    fn leader_in_lane(&self, lane: usize, s: f64, exclude: u64) -> Option<GapCar> {
        let mut best: Option<GapCar> = None;
        for a in &self.agents {
            if a.lane != lane || a.id == exclude || a.s <= s {
                continue;
            }
            let gap = a.s - a.length - s;
            if best.map_or(true, |b| gap < b.gap) {
                best = Some(GapCar { gap, v: a.v });
            }
        }
        if self.mode_kind == ModeKind::Inter {
            if let Some(e) = &self.ego {
                if e.lane == lane && e.s > s {
                    let gap = e.s - e.length - s;
                    if best.map_or(true, |b| gap < b.gap) {
                        best = Some(GapCar { gap, v: e.v });
                    }
                }
            }
        }
        best
    }

    /// Nearest vehicle at or behind `s_front` in a lane. Everything not
    /// strictly ahead counts as a follower so that side-by-side overlaps
    /// surface as negative gaps instead of vanishing between the leader
    /// and follower queries.
    fn follower_in_lane(&self, lane: usize, s_front: f64, rear_bumper: f64, exclude: u64) -> Option<GapCar> {
        let mut best: Option<GapCar> = None;
        for a in &self.agents {
            if a.lane != lane || a.id == exclude || a.s > s_front {
                continue;
            }
            let gap = rear_bumper - a.s;
            if best.map_or(true, |b| gap < b.gap) {
                best = Some(GapCar { gap, v: a.v });
            }
        }
        if self.mode_kind == ModeKind::Inter {
            if let Some(e) = &self.ego {
                if e.lane == lane && e.s <= s_front {
                    let gap = rear_bumper - e.s;
                    if best.map_or(true, |b| gap < b.gap) {
                        best = Some(GapCar { gap, v: e.v });
                    }
                }
            }
        }
        best
    }

    fn surround_for(&self, agent: &AgentState) -> MobilSurround {
        let side = |lane: isize| -> Option<TargetLaneNeighbors> {
            if lane < 0 || lane as usize >= self.lane_count {
                return None;
            }
            let lane = lane as usize;
            Some(TargetLaneNeighbors {
                leader: self.leader_in_lane(lane, agent.s, agent.id),
                follower: self.follower_in_lane(lane, agent.s, agent.s - agent.length, agent.id),
            })
        };
        MobilSurround {
            cur_leader: self.leader_in_lane(agent.lane, agent.s, agent.id),
            cur_follower: self.follower_in_lane(agent.lane, agent.s, agent.s - agent.length, agent.id),
            left: side(agent.lane as isize - 1),
            right: side(agent.lane as isize + 1),
        }
    }

    /// Instantaneous MOBIL lane reassignment, evaluated front to back so
    /// earlier movers are visible to the agents behind them.
    fn lane_change_pass(&mut self) {
        let mut order: Vec<usize> = (0..self.agents.len()).collect();
        order.sort_by(|&i, &j| self.agents[j].s.total_cmp(&self.agents[i].s));
        for idx in order {
            let agent = self.agents[idx];
            let surround = self.surround_for(&agent);
            if let Some(side) = mobil_decide(agent.v, agent.length, &surround, &self.cfg.mobil, &self.cfg.idm) {
                let target = match side {
                    LaneSide::Left => agent.lane - 1,
                    LaneSide::Right => agent.lane + 1,
                };
                self.agents[idx].lane = target;
            }
        }
    }

    /// IDM accelerations from the post-change configuration, then a
    /// semi-implicit Euler step; vehicles past the road end despawn.
    fn integrate(&mut self, dt: f64) {
        let accels: Vec<f64> = self
            .agents
            .iter()
            .map(|agent| {
                let leader = self.leader_in_lane(agent.lane, agent.s, agent.id);
                match leader {
                    Some(l) => idm_acceleration(agent.v, l.v, l.gap, &self.cfg.idm),
                    None => idm_acceleration(agent.v, 0.0, f64::INFINITY, &self.cfg.idm),
                }
            })
            .collect();
        for (agent, a) in self.agents.iter_mut().zip(accels) {
            agent.a = a;
            agent.v = (agent.v + a * dt).max(0.0);
            agent.s += agent.v * dt;
        }
        let end = self.road_length;
        self.agents.retain(|a| a.s - a.length <= end);
    }

    /// Observe up to 6 cars ahead of and 2 behind the given ego pose,
    /// nearest first, padded to fixed slot counts.
    pub fn observe_neighbors(&self, ego: &EgoObstacle) -> Vec<NeighborObservation> {
        let mut front: Vec<(f64, &AgentState)> = Vec::new();
        let mut rear: Vec<(f64, &AgentState)> = Vec::new();
        for a in &self.agents {
            let ds = a.s - ego.s;
            if ds > 0.0 {
                front.push((ds, a));
            } else {
                rear.push((ds, a));
            }
        }
        front.sort_by(|x, y| x.0.total_cmp(&y.0));
        rear.sort_by(|x, y| y.0.total_cmp(&x.0));

        let obs = |ds: f64, a: &AgentState| NeighborObservation {
            rel_position: (ds, self.lane_centers[a.lane] - ego.lateral),
            rel_velocity: (a.v - ego.v, -ego.lateral_velocity),
            present: true,
        };
        let mut out = Vec::with_capacity(8);
        for i in 0..6 {
            out.push(front.get(i).map(|(ds, a)| obs(*ds, a)).unwrap_or_else(NeighborObservation::absent_front));
        }
        for i in 0..2 {
            out.push(rear.get(i).map(|(ds, a)| obs(*ds, a)).unwrap_or_else(NeighborObservation::absent_rear));
        }
        out
    }

    /// Smallest bumper-to-bumper gap over all leader-follower pairs, and
    /// the count of overlapping pairs. Used by safety audits.
    pub fn min_gap(&self) -> f64 {
        let mut min_gap = f64::INFINITY;
        for lane in 0..self.lane_count {
            let mut in_lane: Vec<&AgentState> = self.agents.iter().filter(|a| a.lane == lane).collect();
            in_lane.sort_by(|a, b| a.s.total_cmp(&b.s));
            for pair in in_lane.windows(2) {
                min_gap = min_gap.min(pair[1].s - pair[1].length - pair[0].s);
            }
        }
        min_gap
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traffic::TrafficConfig;

    fn lane_centers(n: usize) -> Vec<f64> {
        (0..n).map(|k| ((n - 1) as f64 / 2.0 - k as f64) * 3.75).collect()
    }

    fn world(prob: f64, seed: u64) -> World {
        World::new(TrafficConfig::new(prob, 15.0, seed), lane_centers(2), 15_000.0, SimMode::PureSim)
    }

    #[test]
    fn zero_probability_spawns_nothing() {
        let mut w = world(0.0, 7);
        for _ in 0..100 {
            w.step(0.1);
        }
        assert!(w.agents().is_empty());
    }

    #[test]
    fn spawn_count_matches_binomial_expectation() {
        // p=0.05, 10 Hz, 2 lanes, 600 s: n = 12000 draws, mean 600, sigma = sqrt(n p (1-p)) ~ 23.9
        let mut w = world(0.05, 42);
        for _ in 0..6000 {
            w.step(0.1);
        }
        let attempts = w.spawn_attempts() as f64;
        let inserted = (w.next_id - 1) as f64;
        assert!(inserted <= attempts);
        let mean = 600.0;
        let sigma = (12000.0f64 * 0.05 * 0.95).sqrt();
        assert!(
            (attempts - mean).abs() < 3.0 * sigma,
            "attempts {attempts}, expected {mean} +- {}",
            3.0 * sigma
        );
    }

    #[test]
    fn same_seed_same_stream() {
        let mut a = world(0.05, 9);
        let mut b = world(0.05, 9);
        for _ in 0..2000 {
            a.step(0.1);
            b.step(0.1);
        }
        assert_eq!(a.agents(), b.agents());
    }

    #[test]
    fn free_agent_approaches_desired_speed_from_below() {
        let mut w = world(0.0, 1);
        w.agents.push(AgentState { id: 99, lane: 0, s: 100.0, v: 5.0, a: 0.0, length: 4.5 });
        let mut prev = 5.0;
        for _ in 0..3000 {
            w.step(0.1);
            if w.agents.is_empty() {
                break;
            }
            let v = w.agents[0].v;
            assert!(v >= prev - 1e-12, "speed should be nondecreasing toward v0");
            assert!(v <= 15.0 + 1e-9, "never exceeds v0");
            prev = v;
        }
    }

    #[test]
    fn no_rear_end_collision_long_run() {
        for seed in [3, 4] {
            let mut w = world(0.05, seed);
            for _ in 0..6000 {
                w.step(0.1);
                assert!(w.min_gap() > 0.0, "overlap at t={} seed={seed}", w.time());
            }
        }
    }

    #[test]
    fn observe_neighbors_padding_and_truncation() {
        let mut w = world(0.0, 1);
        let ego = EgoObstacle { s: 500.0, v: 16.0, lateral: -1.875, lateral_velocity: 0.0, lane: 1, length: 17.0 };
        let obs = w.observe_neighbors(&ego);
        assert_eq!(obs.len(), 8);
        assert!(obs.iter().all(|o| !o.present));
        assert_eq!(obs[0].rel_position.0, 200.0);
        assert_eq!(obs[6].rel_position.0, -200.0);

        // 10 cars ahead -> exactly the 6 nearest
        for i in 0..10 {
            w.agents.push(AgentState {
                id: 100 + i,
                lane: 0,
                s: 510.0 + 10.0 * i as f64,
                v: 10.0,
                a: 0.0,
                length: 4.5,
            });
        }
        let obs = w.observe_neighbors(&ego);
        let present_front: Vec<_> = obs[..6].iter().filter(|o| o.present).collect();
        assert_eq!(present_front.len(), 6);
        assert_eq!(obs[0].rel_position.0, 10.0);
        assert_eq!(obs[5].rel_position.0, 60.0);
    }

    #[test]
    fn observe_matches_exhaustive_sort() {
        // hand-placed 3-car scene
        let mut w = world(0.0, 1);
        let ego = EgoObstacle { s: 300.0, v: 16.0, lateral: 1.875, lateral_velocity: 0.0, lane: 0, length: 17.0 };
        w.agents.push(AgentState { id: 1, lane: 0, s: 340.0, v: 12.0, a: 0.0, length: 4.5 });
        w.agents.push(AgentState { id: 2, lane: 1, s: 320.0, v: 13.0, a: 0.0, length: 4.5 });
        w.agents.push(AgentState { id: 3, lane: 1, s: 280.0, v: 14.0, a: 0.0, length: 4.5 });
        let obs = w.observe_neighbors(&ego);
        assert_eq!(obs[0].rel_position, (20.0, -3.75));
        assert_eq!(obs[0].rel_velocity, (-3.0, 0.0));
        assert_eq!(obs[1].rel_position, (40.0, 0.0));
        assert!(!obs[2].present);
        assert_eq!(obs[6].rel_position, (-20.0, -3.75));
        assert!(!obs[7].present);
    }

    #[test]
    fn resim_restarts_identically() {
        let mut original = world(0.05, 77);
        let snapshot = original.snapshot_config();
        let mut states = Vec::new();
        for _ in 0..500 {
            original.step(0.1);
            states.push(original.agents().to_vec());
        }
        let mut resim = World::new(
            TrafficConfig::new(0.0, 1.0, 0),
            lane_centers(2),
            1.0,
            SimMode::ReSim(snapshot),
        );
        for expected in &states {
            resim.step(0.1);
            assert_eq!(resim.agents(), expected.as_slice());
        }
    }
}
