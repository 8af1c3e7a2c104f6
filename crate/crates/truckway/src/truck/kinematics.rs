//! Hitch kinematics of the vehicle-trailer pair and its RK4 integrator.

use super::{KinematicState, TruckError, TruckParams};

/// Rates applied to the kinematic state over a step.
#[derive(Debug, Clone, Copy, Default)]
pub struct KinematicInput {
    /// Steering rate at the road wheels, rad/s.
    pub steer_rate: f64,
    /// Longitudinal acceleration, m/s².
    pub accel: f64,
}

/// Time derivative of the kinematic state:
///   x' = v cos(heading)
///   y' = v sin(heading)
///   heading' = v tan(steer) / L
///   steer' = steer rate input
///   hitch' = -v (sin(hitch)/L2 + (L1/(L L2)) cos(hitch) tan(steer) + tan(steer)/L)
pub fn kinematic_derivative(k: &KinematicState, input: &KinematicInput, p: &TruckParams) -> KinematicState {
    let l = p.wheelbase;
    let l1 = p.tongue_length;
    let l2 = p.hitch_length;
    let tan_steer = k.steer.tan();
    KinematicState {
        x: k.v * k.heading.cos(),
        y: k.v * k.heading.sin(),
        heading: k.v * tan_steer / l,
        steer: input.steer_rate,
        hitch: -k.v * (k.hitch.sin() / l2 + (l1 / (l * l2)) * k.hitch.cos() * tan_steer + tan_steer / l),
        v: input.accel,
    }
}

fn add_scaled(base: &KinematicState, d: &KinematicState, h: f64) -> KinematicState {
    KinematicState {
        x: base.x + h * d.x,
        y: base.y + h * d.y,
        heading: base.heading + h * d.heading,
        steer: base.steer + h * d.steer,
        hitch: base.hitch + h * d.hitch,
        v: base.v + h * d.v,
    }
}

/// Classical fourth-order step. The steer angle is clamped to its bound
/// after integration; exceeding the hitch bound raises a jackknife fault.
pub fn integrate_rk4(
    k: &KinematicState,
    input: &KinematicInput,
    p: &TruckParams,
    dt: f64,
) -> Result<KinematicState, TruckError> {
    debug_assert!(dt > 0.0 && dt <= 0.1 + 1e-12);
    let k1 = kinematic_derivative(k, input, p);
    let k2 = kinematic_derivative(&add_scaled(k, &k1, dt / 2.0), input, p);
    let k3 = kinematic_derivative(&add_scaled(k, &k2, dt / 2.0), input, p);
    let k4 = kinematic_derivative(&add_scaled(k, &k3, dt), input, p);
    let mut out = *k;
    out.x += dt / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
    out.y += dt / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y);
    out.heading += dt / 6.0 * (k1.heading + 2.0 * k2.heading + 2.0 * k3.heading + k4.heading);
    out.steer += dt / 6.0 * (k1.steer + 2.0 * k2.steer + 2.0 * k3.steer + k4.steer);
    out.hitch += dt / 6.0 * (k1.hitch + 2.0 * k2.hitch + 2.0 * k3.hitch + k4.hitch);
    out.v = (out.v + dt / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v)).max(0.0);
    out.steer = out.steer.clamp(-p.max_steer_angle, p.max_steer_angle);
    if out.hitch.abs() > p.jackknife_bound {
        return Err(TruckError::Jackknife(out.hitch));
    }
    Ok(out)
}

/// Steady hitch angle for a held steer angle: the root of the hitch rate
/// in the kinematic model, found by bisection.
pub fn steady_hitch_angle(steer: f64, p: &TruckParams) -> f64 {
    let rate = |hitch: f64| {
        -(hitch.sin() / p.hitch_length
            + (p.tongue_length / (p.wheelbase * p.hitch_length)) * hitch.cos() * steer.tan()
            + steer.tan() / p.wheelbase)
    };
    let (mut lo, mut hi) = (-1.5, 1.5);
    let mut f_lo = rate(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f_mid = rate(mid);
        if (f_lo > 0.0) == (f_mid > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> TruckParams {
        TruckParams::full_load()
    }

    #[test]
    fn straight_line_equilibrium() {
        let p = params();
        let k = KinematicState { v: 20.0, ..KinematicState::at_rest() };
        let d = kinematic_derivative(&k, &KinematicInput::default(), &p);
        assert_eq!(d.heading, 0.0);
        assert_eq!(d.hitch, 0.0);
        assert_eq!(d.x, 20.0);
        assert_eq!(d.y, 0.0);
    }

    #[test]
    fn rest_state_is_fixed_point() {
        let p = params();
        let k = KinematicState::at_rest();
        let out = integrate_rk4(&k, &KinematicInput::default(), &p, 0.1).unwrap();
        assert_eq!(k, out);
    }

    #[test]
    fn constant_steer_traces_circle() {
        // analytic oracle: tractor path radius = L / tan(steer)
        let p = params();
        let steer = 0.08f64;
        let radius = p.wheelbase / steer.tan();
        let v = 10.0;
        let lap_time = 2.0 * std::f64::consts::PI * radius / v;
        let mut k = KinematicState { steer, v, ..KinematicState::at_rest() };
        let dt = 0.1;
        let steps = (lap_time / dt).round() as usize;
        let mut max_err: f64 = 0.0;
        // circle center for start pose (0,0,heading 0): (0, radius)
        for _ in 0..steps {
            k = integrate_rk4(&k, &KinematicInput::default(), &p, dt).unwrap();
            let r = (k.x.powi(2) + (k.y - radius).powi(2)).sqrt();
            max_err = max_err.max((r - radius).abs() / radius);
        }
        assert!(max_err < 1e-3, "radius error {max_err}");
    }

    #[test]
    fn rk4_order_by_richardson() {
        let p = params();
        let input = KinematicInput { steer_rate: 0.02, accel: 0.3 };
        let start = KinematicState { v: 15.0, steer: 0.05, hitch: 0.1, ..KinematicState::at_rest() };
        let run = |dt: f64| -> KinematicState {
            let mut k = start;
            let steps = (1.0 / dt).round() as usize;
            for _ in 0..steps {
                k = integrate_rk4(&k, &input, &p, dt).unwrap();
            }
            k
        };
        let norm = |a: &KinematicState, b: &KinematicState| -> f64 {
            ((a.x - b.x).powi(2)
                + (a.y - b.y).powi(2)
                + (a.heading - b.heading).powi(2)
                + (a.hitch - b.hitch).powi(2))
            .sqrt()
        };
        let reference = run(0.1 / 16.0);
        let e1 = norm(&run(0.1), &reference);
        let e2 = norm(&run(0.05), &reference);
        let order = (e1 / e2).log2();
        assert!(order >= 3.8, "measured order {order}");
    }

    #[test]
    fn hitch_converges_to_steady_angle() {
        let p = params();
        let steer = 0.05;
        let target = steady_hitch_angle(steer, &p);
        let mut k = KinematicState { steer, v: 15.0, ..KinematicState::at_rest() };
        for _ in 0..2000 {
            k = integrate_rk4(&k, &KinematicInput::default(), &p, 0.05).unwrap();
        }
        assert_relative_eq!(k.hitch, target, epsilon = 1e-6);
        // and the root really zeroes the hitch rate
        let d = kinematic_derivative(
            &KinematicState { hitch: target, ..k },
            &KinematicInput::default(),
            &p,
        );
        assert!(d.hitch.abs() < 1e-9);
    }

    #[test]
    fn jackknife_raises_fault() {
        let p = params();
        let k = KinematicState { hitch: 1.19, steer: -0.5, v: 20.0, ..KinematicState::at_rest() };
        let mut state = k;
        let mut faulted = false;
        for _ in 0..200 {
            match integrate_rk4(&state, &KinematicInput::default(), &p, 0.1) {
                Ok(next) => state = next,
                Err(TruckError::Jackknife(angle)) => {
                    assert!(angle.abs() > p.jackknife_bound);
                    faulted = true;
                    break;
                }
                Err(other) => panic!("unexpected error {other}"),
            }
        }
        assert!(faulted, "expected a jackknife fault");
    }

    #[test]
    fn derivative_consistent_with_flow() {
        // central finite differences along the integrated flow reproduce the
        // derivative at the midpoint to O(dt^2)
        let p = params();
        let input = KinematicInput { steer_rate: 0.01, accel: 0.2 };
        let k0 = KinematicState { v: 12.0, steer: 0.06, hitch: -0.2, heading: 0.4, ..KinematicState::at_rest() };
        let check = |dt: f64| -> f64 {
            let k1 = integrate_rk4(&k0, &input, &p, dt).unwrap();
            let k2 = integrate_rk4(&k1, &input, &p, dt).unwrap();
            let d = kinematic_derivative(&k1, &input, &p);
            let errs = [
                (k2.x - k0.x) / (2.0 * dt) - d.x,
                (k2.y - k0.y) / (2.0 * dt) - d.y,
                (k2.heading - k0.heading) / (2.0 * dt) - d.heading,
                (k2.hitch - k0.hitch) / (2.0 * dt) - d.hitch,
            ];
            errs.iter().map(|e| e.abs()).fold(0.0, f64::max)
        };
        let e1 = check(0.02);
        let e2 = check(0.01);
        assert!(e1 < 1e-4, "central difference error {e1}");
        // quadratic falloff
        assert_relative_eq!(e1 / e2, 4.0, max_relative = 0.15);
    }
}
