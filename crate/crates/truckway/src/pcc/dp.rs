//! Dynamic-programming oracle for the speed planner: an exact discrete
//! optimum over a (position, speed) grid, used only to validate the
//! continuous solver.
//!
//! The grid is coupled so transitions stay exact: with time step `dt`
//! and speed step `dv`, the position step is `ds = dv*dt/2`, making the
//! trapezoidal advance `(v_i + v_j)/2 * dt` an integer number of
//! position cells for any pair of on-grid speeds. Halving `(ds, dv)`
//! therefore yields a superset of paths, so refinement can only lower
//! the optimal cost.

use super::profile::SpeedProfile;
use super::{PccError, PccProblem};

/// Speed window half-width around the reference, m/s.
const SPEED_WINDOW: f64 = 8.0;
/// Position deviation cap around the constant-speed path, m.
const DEVIATION_CAP: f64 = 300.0;
/// Acceleration cap per transition, m/s².
const ACCEL_CAP: f64 = 2.0;

#[derive(Debug, Clone)]
pub struct DpSolution {
    pub profile: SpeedProfile,
    pub cost: f64,
    pub stages: usize,
    pub states_per_stage: usize,
}

/// Solve the discretized problem exactly on the requested grid.
pub fn dp_oracle(prob: &PccProblem, ds: f64, dv: f64) -> Result<DpSolution, PccError> {
    prob.check_feasible()?;
    // snap dv so v_ref is on the grid, then derive dt and the exact ds
    let i_ref = (prob.v_ref / dv).round().max(1.0) as usize;
    let dv = prob.v_ref / i_ref as f64;
    let k_stages = ((prob.horizon * dv) / (2.0 * ds)).round().max(2.0) as usize;
    let dt = prob.horizon / k_stages as f64;
    let ds = dv * dt / 2.0;

    let v_lo_idx = (((prob.v_ref - SPEED_WINDOW).max(0.0) / dv).ceil()) as usize;
    let v_hi_idx = ((prob.v_ref + SPEED_WINDOW).min(prob.v_max) / dv).floor() as usize;
    let nv = v_hi_idx - v_lo_idx + 1;
    let m_cap = (DEVIATION_CAP / ds).round() as isize;
    let nm = (2 * m_cap + 1) as usize;
    let idx = |moff: isize, vi: usize| -> usize { (moff + m_cap) as usize * nv + (vi - v_lo_idx) };

    let max_dv_steps = ((ACCEL_CAP * dt) / dv).floor().max(1.0) as isize;
    let inf = f64::INFINITY;

    // terminal stage: exact endpoint
    let mut value = vec![inf; nm * nv];
    let vi_ref = i_ref;
    if !(v_lo_idx..=v_hi_idx).contains(&vi_ref) {
        return Err(PccError::Invalid("reference speed outside DP window".into()));
    }
    value[idx(0, vi_ref)] = 0.0;

    // backpointers: chosen next speed index per (stage, state)
    let mut choices: Vec<Vec<u8>> = Vec::with_capacity(k_stages);
    for _ in 0..k_stages {
        choices.push(vec![u8::MAX; nm * nv]);
    }

    let fence_at = |t: f64| -> f64 {
        // linear interpolation of the per-node fences in time
        let h = prob.element_dt();
        let pos = t / h;
        let i = pos.floor() as usize;
        if i + 1 >= prob.n {
            return prob.fences[prob.n - 1];
        }
        let frac = pos - i as f64;
        let (a, b) = (prob.fences[i], prob.fences[i + 1]);
        if a.is_infinite() || b.is_infinite() {
            f64::INFINITY
        } else {
            a + frac * (b - a)
        }
    };

    for k in (0..k_stages).rev() {
        let mut next_value = vec![inf; nm * nv];
        let fence = fence_at(k as f64 * dt);
        let nominal = 2 * k as isize * i_ref as isize;
        for moff in -m_cap..=m_cap {
            let s_here = prob.s0 + (nominal + moff) as f64 * ds;
            if s_here > fence {
                continue;
            }
            for vi in v_lo_idx..=v_hi_idx {
                let v0 = vi as f64 * dv;
                let mut best = inf;
                let mut best_choice = u8::MAX;
                for step in -max_dv_steps..=max_dv_steps {
                    let vj = vi as isize + step;
                    if vj < v_lo_idx as isize || vj > v_hi_idx as isize {
                        continue;
                    }
                    let vj = vj as usize;
                    let moff_next = moff + vi as isize + vj as isize - 2 * i_ref as isize;
                    if moff_next < -m_cap || moff_next > m_cap {
                        continue;
                    }
                    let tail = value[idx(moff_next, vj)];
                    if !tail.is_finite() {
                        continue;
                    }
                    let v1 = vj as f64 * dv;
                    let a = (v1 - v0) / dt;
                    let v_avg = 0.5 * (v0 + v1);
                    let s_mid = s_here + v_avg * dt / 2.0;
                    let cost =
                        dt * (prob.fuel.flow(prob.power_kw(s_mid, v_avg, a)) + prob.k_a * a * a);
                    let total = cost + tail;
                    if total < best {
                        best = total;
                        best_choice = (vj - v_lo_idx) as u8;
                    }
                }
                next_value[idx(moff, vi)] = best;
                choices[k][idx(moff, vi)] = best_choice;
            }
        }
        value = next_value;
    }

    let vi0 = (prob.v0 / dv).round() as usize;
    if !(v_lo_idx..=v_hi_idx).contains(&vi0) {
        return Err(PccError::Invalid("initial speed outside DP window".into()));
    }
    let cost = value[idx(0, vi0)];
    if !cost.is_finite() {
        return Err(PccError::Invalid("DP found no feasible path on this grid".into()));
    }

    // forward reconstruction
    let mut nodes = Vec::with_capacity(2 * (k_stages + 1));
    let mut moff = 0isize;
    let mut vi = vi0;
    nodes.push(prob.s0);
    nodes.push(vi as f64 * dv);
    for (k, stage_choices) in choices.iter().enumerate() {
        let choice = stage_choices[idx(moff, vi)];
        debug_assert_ne!(choice, u8::MAX, "path broke at stage {k}");
        let vj = v_lo_idx + choice as usize;
        moff += vi as isize + vj as isize - 2 * i_ref as isize;
        vi = vj;
        let nominal = 2 * (k + 1) as isize * i_ref as isize;
        nodes.push(prob.s0 + (nominal + moff) as f64 * ds);
        nodes.push(vi as f64 * dv);
    }
    let profile = SpeedProfile::from_nodes(&nodes, dt, prob.v_max)?;
    Ok(DpSolution { profile, cost, stages: k_stages, states_per_stage: nm * nv })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::SlopeProfile;
    use crate::pcc::{PccFuelModel, PccProblem};
    use crate::truck::{FuelMap, TruckParams};
    use approx::assert_relative_eq;

    fn problem(slope: SlopeProfile, horizon: f64, n: usize) -> PccProblem {
        let params = TruckParams::empty_load();
        let map = FuelMap::bundled();
        let fuel = PccFuelModel::fit(&params, &map, 1300.0);
        PccProblem::new(horizon, 20.0, 25.0, n, 0.0, slope, &params, fuel).unwrap()
    }

    #[test]
    fn flat_road_dp_is_constant_speed() {
        let prob = problem(SlopeProfile::flat(), 120.0, 25);
        let sol = dp_oracle(&prob, 2.0, 0.5).unwrap();
        for i in 0..sol.profile.node_count() {
            assert_eq!(sol.profile.speed_at_node(i), prob.v_ref);
        }
        // cost equals T * flow(constant power)
        let flow = prob.fuel.flow(prob.power_kw(0.0, prob.v_ref, 0.0));
        assert_relative_eq!(sol.cost, prob.horizon * flow, max_relative = 1e-12);
    }

    #[test]
    fn refining_the_grid_never_raises_cost() {
        let prob = problem(SlopeProfile::sinusoidal(30.0, 3000.0, 20_000.0), 150.0, 31);
        let coarse = dp_oracle(&prob, 4.0, 1.0).unwrap();
        let fine = dp_oracle(&prob, 2.0, 0.5).unwrap();
        assert!(fine.cost <= coarse.cost + 1e-9, "fine {} coarse {}", fine.cost, coarse.cost);
    }

    #[test]
    fn dp_beats_constant_on_a_hill() {
        let prob = problem(SlopeProfile::sinusoidal(30.0, 3000.0, 20_000.0), 150.0, 31);
        let sol = dp_oracle(&prob, 2.0, 0.5).unwrap();
        let (j_const, _) = crate::pcc::objective(&prob.constant_profile_nodes(), &prob);
        assert!(sol.cost < j_const);
    }
}
