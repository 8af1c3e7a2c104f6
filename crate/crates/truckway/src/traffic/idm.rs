//! Intelligent Driver Model longitudinal behavior.

use serde::{Deserialize, Serialize};

/// IDM parameters. Defaults are the standard published values; the
/// desired speed `v0` is normally overridden by the traffic config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdmParams {
    /// Desired (free-flow) speed, m/s.
    pub v0: f64,
    /// Desired time headway, s.
    pub t_headway: f64,
    /// Maximum comfortable acceleration, m/s².
    pub a_max: f64,
    /// Comfortable braking deceleration (positive), m/s².
    pub b_comf: f64,
    /// Jam distance, m.
    pub s0: f64,
    /// Free-acceleration exponent.
    pub delta: f64,
    /// Hard physical deceleration bound (positive), m/s².
    pub b_max: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        Self { v0: 33.3, t_headway: 1.5, a_max: 1.0, b_comf: 1.5, s0: 2.0, delta: 4.0, b_max: 6.0 }
    }
}

/// IDM acceleration for a vehicle at speed `v` with a leader at speed
/// `v_lead` and bumper-to-bumper `gap`. Pass `f64::INFINITY` for a free
/// road. A non-positive gap with a leader present returns the emergency
/// value `-b_max`; the result is always clamped below by `-b_max`.
pub fn idm_acceleration(v: f64, v_lead: f64, gap: f64, p: &IdmParams) -> f64 {
    let free = p.a_max * (1.0 - (v / p.v0).powf(p.delta));
    if gap.is_infinite() {
        return free.max(-p.b_max);
    }
    if gap <= 0.0 {
        return -p.b_max;
    }
    let dv = v - v_lead;
    let s_star = p.s0 + v * p.t_headway + v * dv / (2.0 * (p.a_max * p.b_comf).sqrt());
    let a = p.a_max * (1.0 - (v / p.v0).powf(p.delta) - (s_star / gap).powi(2));
    a.max(-p.b_max)
}

/// Equilibrium gap: the spacing at which `idm_acceleration(v, v, gap)`
/// vanishes. Closed form from the steady-state IDM relation.
pub fn equilibrium_gap(v: f64, p: &IdmParams) -> f64 {
    let s_star = p.s0 + v * p.t_headway;
    s_star / (1.0 - (v / p.v0).powf(p.delta)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> IdmParams {
        IdmParams { v0: 15.0, t_headway: 1.5, a_max: 1.0, b_comf: 1.5, s0: 2.0, delta: 4.0, b_max: 6.0 }
    }

    #[test]
    fn free_flow_equilibrium_is_zero() {
        let p = params();
        assert_eq!(idm_acceleration(15.0, 0.0, f64::INFINITY, &p), 0.0);
    }

    #[test]
    fn hand_evaluated_interaction() {
        // v=10, v_lead=10, gap=20:
        //   s* = 2 + 10*1.5 + 0 = 17
        //   a  = 1*(1 - (10/15)^4 - (17/20)^2) = 0.079969135802469...
        let p = params();
        let a = idm_acceleration(10.0, 10.0, 20.0, &p);
        assert_relative_eq!(a, 0.079969135802469, epsilon = 1e-12);
    }

    #[test]
    fn equilibrium_gap_roots_the_model() {
        let p = params();
        for v in [2.0, 5.0, 10.0, 13.0] {
            let gap = equilibrium_gap(v, &p);
            let a = idm_acceleration(v, v, gap, &p);
            assert!(a.abs() < 1e-12, "v={v} gap={gap} a={a}");
            // bisection cross-check: accel is positive above, negative below
            assert!(idm_acceleration(v, v, gap * 1.01, &p) > 0.0);
            assert!(idm_acceleration(v, v, gap * 0.99, &p) < 0.0);
        }
    }

    #[test]
    fn emergency_on_nonpositive_gap() {
        let p = params();
        assert_eq!(idm_acceleration(10.0, 10.0, 0.0, &p), -p.b_max);
        assert_eq!(idm_acceleration(10.0, 10.0, -3.0, &p), -p.b_max);
    }

    #[test]
    fn clamped_by_hard_bound() {
        let p = params();
        // closing fast on a slow leader
        let a = idm_acceleration(15.0, 0.0, 3.0, &p);
        assert_eq!(a, -p.b_max);
    }
}
