//! Fuel-optimal speed-profile generation over a slope profile
//! (predictive cruise control): solved offline on cubic Hermite
//! elements, queried online by the trajectory planner.

mod dp;
mod objective;
mod profile;
mod solver;

pub use dp::dp_oracle;
pub use objective::objective;
pub use profile::SpeedProfile;
pub use solver::{solve_pcc, SolveReport};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::map::SlopeProfile;
use crate::truck::{FuelMap, TruckParams, GRAVITY};

#[derive(Debug, Error)]
pub enum PccError {
    #[error("infeasible problem: node {node} violates {what}")]
    Infeasible { node: usize, what: String },
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error("profile format error: {0}")]
    Format(String),
}

/// Smooth power-to-fuel-flow map used inside the optimizer:
/// `flow(p) = idle + k1 * p + k2 * p^2` for `p` clamped to
/// `[0, p_max]` kW, with `k2 >= 0` so the map stays convex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PccFuelModel {
    pub idle: f64,
    pub k1: f64,
    pub k2: f64,
    pub p_max: f64,
}

impl PccFuelModel {
    /// Least-squares fit against the truck's BSFC surface along a nominal
    /// engine speed. The quadratic coefficient is clamped at zero if the
    /// surface is locally concave in power.
    pub fn fit(params: &TruckParams, map: &FuelMap, rpm_nominal: f64) -> Self {
        let idle = params.idle_fuel_rate;
        let p_max = params.engine_power_max_kw;
        let n = 60;
        let mut s11 = 0.0;
        let mut s12 = 0.0;
        let mut s22 = 0.0;
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for i in 0..n {
            let p = 5.0 + (p_max - 5.0) * i as f64 / (n - 1) as f64;
            let y = crate::truck::fuel_rate(p, rpm_nominal, map, params) - idle;
            s11 += p * p;
            s12 += p * p * p;
            s22 += p * p * p * p;
            b1 += p * y;
            b2 += p * p * y;
        }
        let det = s11 * s22 - s12 * s12;
        let mut k1 = (b1 * s22 - b2 * s12) / det;
        let mut k2 = (s11 * b2 - s12 * b1) / det;
        if k2 < 0.0 {
            k2 = 0.0;
            k1 = b1 / s11;
        }
        Self { idle, k1, k2, p_max }
    }

    /// Half-width of the quadratic blend at the coasting transition, kW.
    /// The hinge at zero power is smoothed so the map is C¹; descent
    /// methods stall on the raw kink.
    fn blend(&self) -> f64 {
        (self.p_max / 70.0).min(5.0)
    }

    /// Fuel flow in g/s for a power demand in kW. Negative demand means
    /// coasting at the idle flow; demand beyond `p_max` continues at the
    /// marginal cost of the cap so that energy pushed through the limit
    /// is never free to the optimizer.
    pub fn flow(&self, p_kw: f64) -> f64 {
        let w = self.blend();
        if p_kw <= -w {
            return self.idle;
        }
        if p_kw < w {
            let hinge = (p_kw + w) * (p_kw + w) / (4.0 * w);
            return self.idle + self.k1 * hinge + self.k2 * p_kw.max(0.0).powi(2);
        }
        if p_kw >= self.p_max {
            let at_cap = self.idle + self.k1 * self.p_max + self.k2 * self.p_max * self.p_max;
            return at_cap + (self.k1 + 2.0 * self.k2 * self.p_max) * (p_kw - self.p_max);
        }
        self.idle + self.k1 * p_kw + self.k2 * p_kw * p_kw
    }

    /// d(flow)/d(power); zero only in the coasting region.
    pub fn dflow(&self, p_kw: f64) -> f64 {
        let w = self.blend();
        if p_kw <= -w {
            0.0
        } else if p_kw < w {
            self.k1 * (p_kw + w) / (2.0 * w) + 2.0 * self.k2 * p_kw.max(0.0)
        } else if p_kw >= self.p_max {
            self.k1 + 2.0 * self.k2 * self.p_max
        } else {
            self.k1 + 2.0 * self.k2 * p_kw
        }
    }
}

/// The speed-planning problem on a uniform time grid of `n` nodes over
/// `[0, horizon]`: boundary conditions, speed cap, per-node position
/// fences, the slope profile, and the vehicle's resistance model.
#[derive(Debug, Clone)]
pub struct PccProblem {
    pub horizon: f64,
    pub v_ref: f64,
    pub v_max: f64,
    /// Initial position and speed.
    pub s0: f64,
    pub v0: f64,
    /// Per-node position caps (one per node; infinity = unconstrained).
    pub fences: Vec<f64>,
    pub slope: SlopeProfile,
    /// Acceleration penalty weight.
    pub k_a: f64,
    pub n: usize,
    pub fuel: PccFuelModel,
    /// Resistance-model constants.
    pub m_total: f64,
    pub rho_air: f64,
    pub frontal_area: f64,
    pub drag_coeff: f64,
    pub efficiency: f64,
    pub mu0: f64,
    pub mu1: f64,
}

impl PccProblem {
    /// Problem with the truck's resistance model, flat fences, and the
    /// boundary conditions `s(0) = s0`, `v(0) = v_ref`, terminal
    /// `s = s0 + v_ref * horizon`, `v = v_ref`.
    pub fn new(
        horizon: f64,
        v_ref: f64,
        v_max: f64,
        n: usize,
        s0: f64,
        slope: SlopeProfile,
        params: &TruckParams,
        fuel: PccFuelModel,
    ) -> Result<Self, PccError> {
        if !(v_max >= v_ref && v_ref > 0.0) {
            return Err(PccError::Invalid(format!("need v_max >= v_ref > 0, got {v_max}, {v_ref}")));
        }
        if n < 3 {
            return Err(PccError::Invalid(format!("need at least 3 nodes, got {n}")));
        }
        Ok(Self {
            horizon,
            v_ref,
            v_max,
            s0,
            v0: v_ref,
            fences: vec![f64::INFINITY; n],
            slope,
            k_a: 0.05,
            n,
            fuel,
            m_total: params.m_total,
            rho_air: params.rho_air,
            frontal_area: params.frontal_area,
            drag_coeff: params.drag_coeff,
            efficiency: params.efficiency,
            mu0: params.mu0,
            mu1: params.mu1,
        })
    }

    pub fn terminal_position(&self) -> f64 {
        self.s0 + self.v_ref * self.horizon
    }

    /// Element length of the uniform time grid.
    pub fn element_dt(&self) -> f64 {
        self.horizon / (self.n - 1) as f64
    }

    fn mu(&self, v: f64) -> f64 {
        self.mu0 + self.mu1 * v
    }

    /// Engine power demand in kW (unclamped; the fuel model clamps).
    pub fn power_kw(&self, s: f64, v: f64, a: f64) -> f64 {
        let theta = self.slope.grade(s);
        let force = (theta.sin() + self.mu(v)) * GRAVITY * self.m_total
            + 0.5 * self.rho_air * self.frontal_area * self.drag_coeff * v * v
            + a * self.m_total;
        v * force / self.efficiency / 1000.0
    }

    /// Partial derivatives of `power_kw` with respect to (s, v, a).
    pub fn power_grad(&self, s: f64, v: f64, a: f64) -> (f64, f64, f64) {
        let theta = self.slope.grade(s);
        let dtheta_ds = self.slope.grade_derivative(s);
        let scale = 1.0 / self.efficiency / 1000.0;
        let dp_ds = v * theta.cos() * dtheta_ds * GRAVITY * self.m_total * scale;
        let dp_dv = ((theta.sin() + self.mu(v)) * GRAVITY * self.m_total
            + self.mu1 * v * GRAVITY * self.m_total
            + 1.5 * self.rho_air * self.frontal_area * self.drag_coeff * v * v
            + a * self.m_total)
            * scale;
        let dp_da = v * self.m_total * scale;
        (dp_ds, dp_dv, dp_da)
    }

    /// The constant-speed reference trajectory as a node vector
    /// `[s_1, v_1, ..., s_n, v_n]`; it is the solver's initial iterate.
    pub fn constant_profile_nodes(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(2 * self.n);
        let h = self.element_dt();
        for i in 0..self.n {
            x.push(self.s0 + self.v_ref * h * i as f64);
            x.push(self.v_ref);
        }
        x
    }

    /// Check that the constant-speed profile is feasible; error names the
    /// violated node otherwise.
    pub fn check_feasible(&self) -> Result<(), PccError> {
        if self.fences.len() != self.n {
            return Err(PccError::Invalid(format!(
                "fence list has {} entries for {} nodes",
                self.fences.len(),
                self.n
            )));
        }
        if self.v_ref > self.v_max {
            return Err(PccError::Infeasible { node: 0, what: format!("v_ref {} > v_max {}", self.v_ref, self.v_max) });
        }
        let h = self.element_dt();
        for i in 0..self.n {
            let s_const = self.s0 + self.v_ref * h * i as f64;
            // endpoints are pinned by the boundary constraints and may not
            // be fenced tighter than that
            if s_const > self.fences[i] {
                return Err(PccError::Infeasible {
                    node: i,
                    what: format!("fence {} below constant-speed position {s_const}", self.fences[i]),
                });
            }
        }
        Ok(())
    }
}

/// Cubic Hermite basis values at normalized element coordinate `t`
/// in `[0, 1]` for an element of length `h`: returns (value, first,
/// second) rows for the four degrees of freedom (s_left, v_left,
/// s_right, v_right).
pub(crate) fn hermite_basis(t: f64, h: f64) -> ([f64; 4], [f64; 4], [f64; 4]) {
    let t2 = t * t;
    let t3 = t2 * t;
    let value = [
        1.0 - 3.0 * t2 + 2.0 * t3,
        h * (t - 2.0 * t2 + t3),
        3.0 * t2 - 2.0 * t3,
        h * (-t2 + t3),
    ];
    let first = [
        (-6.0 * t + 6.0 * t2) / h,
        1.0 - 4.0 * t + 3.0 * t2,
        (6.0 * t - 6.0 * t2) / h,
        -2.0 * t + 3.0 * t2,
    ];
    let second = [
        (-6.0 + 12.0 * t) / (h * h),
        (-4.0 + 6.0 * t) / h,
        (6.0 - 12.0 * t) / (h * h),
        (-2.0 + 6.0 * t) / h,
    ];
    (value, first, second)
}

/// 3-point Gauss-Legendre rule on [0, 1]: integrates the Hermite basis
/// polynomials and their products with element-constant factors exactly,
/// which keeps the constant-speed profile exactly stationary on flat
/// ground.
pub(crate) const GAUSS3: [(f64, f64); 3] = [
    (0.11270166537925831, 0.2777777777777778),
    (0.5, 0.4444444444444444),
    (0.8872983346207417, 0.2777777777777778),
];

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fuel_fit_is_convex_and_positive() {
        let p = TruckParams::empty_load();
        let map = FuelMap::bundled();
        let fm = PccFuelModel::fit(&p, &map, 1300.0);
        assert!(fm.k1 > 0.0);
        assert!(fm.k2 >= 0.0);
        assert_eq!(fm.flow(-50.0), fm.idle);
        assert!(fm.flow(100.0) > fm.flow(50.0));
        // derivative consistent with finite differences inside the range
        let eps = 1e-5;
        let fd = (fm.flow(120.0 + eps) - fm.flow(120.0 - eps)) / (2.0 * eps);
        assert_relative_eq!(fd, fm.dflow(120.0), max_relative = 1e-8);
    }

    #[test]
    fn power_matches_truck_model_formula() {
        let params = TruckParams::full_load();
        let map = FuelMap::bundled();
        let fuel = PccFuelModel::fit(&params, &map, 1300.0);
        let prob = PccProblem::new(
            100.0,
            20.0,
            25.0,
            11,
            0.0,
            SlopeProfile::linear_ramp(0.03),
            &params,
            fuel,
        )
        .unwrap();
        for (v, a) in [(20.0, 0.0), (15.0, 0.4), (22.0, -0.3)] {
            let grade = prob.slope.grade(50.0);
            let reference = crate::truck::engine_power(v, a, grade, &params);
            let raw = prob.power_kw(50.0, v, a).clamp(0.0, params.engine_power_max_kw);
            assert_relative_eq!(raw, reference, max_relative = 1e-12);
        }
    }

    #[test]
    fn power_grad_matches_fd() {
        let params = TruckParams::empty_load();
        let map = FuelMap::bundled();
        let fuel = PccFuelModel::fit(&params, &map, 1300.0);
        let prob = PccProblem::new(
            100.0,
            20.0,
            25.0,
            11,
            0.0,
            SlopeProfile::sinusoidal(30.0, 3000.0, 10_000.0),
            &params,
            fuel,
        )
        .unwrap();
        let (s, v, a) = (777.0, 18.0, 0.2);
        let eps = 1e-5;
        let (dps, dpv, dpa) = prob.power_grad(s, v, a);
        let fd_s = (prob.power_kw(s + eps, v, a) - prob.power_kw(s - eps, v, a)) / (2.0 * eps);
        let fd_v = (prob.power_kw(s, v + eps, a) - prob.power_kw(s, v - eps, a)) / (2.0 * eps);
        let fd_a = (prob.power_kw(s, v, a + eps) - prob.power_kw(s, v, a - eps)) / (2.0 * eps);
        assert_relative_eq!(dps, fd_s, max_relative = 1e-6);
        assert_relative_eq!(dpv, fd_v, max_relative = 1e-8);
        assert_relative_eq!(dpa, fd_a, max_relative = 1e-8);
    }

    #[test]
    fn infeasible_fence_names_node() {
        let params = TruckParams::empty_load();
        let map = FuelMap::bundled();
        let fuel = PccFuelModel::fit(&params, &map, 1300.0);
        let mut prob =
            PccProblem::new(100.0, 20.0, 25.0, 11, 0.0, SlopeProfile::flat(), &params, fuel).unwrap();
        prob.fences[4] = 700.0; // constant profile reaches 800 m at node 4
        match prob.check_feasible().unwrap_err() {
            PccError::Infeasible { node, .. } => assert_eq!(node, 4),
            other => panic!("unexpected {other}"),
        }
    }
}
