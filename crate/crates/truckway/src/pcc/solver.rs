//! Projected quasi-Newton descent over the Hermite node vector with
//! simple bounds: fixed boundary nodes, speed box `[0, v_max]`, and
//! per-node position fences.
//!
//! Internally positions are scaled by the element duration so position
//! and speed coordinates see comparable curvature; without this the
//! Hessian conditioning degrades as 1/h² and the descent stalls.

use super::objective::objective;
use super::profile::SpeedProfile;
use super::{PccError, PccProblem};

const MEMORY: usize = 10;
const MAX_ITERS: usize = 4000;
/// Stationarity tolerance relative to the objective magnitude.
const GRAD_TOL_REL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
    /// Largest scaled gradient component over free, inactive coordinates.
    pub stationarity: f64,
}

struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    /// Bounds in the scaled coordinates (positions divided by `h`).
    fn build(prob: &PccProblem, h: f64) -> Self {
        let n = prob.n;
        let mut lower = vec![f64::NEG_INFINITY; 2 * n];
        let mut upper = vec![f64::INFINITY; 2 * n];
        for i in 0..n {
            lower[2 * i + 1] = 0.0;
            upper[2 * i + 1] = prob.v_max;
            upper[2 * i] = prob.fences[i] / h;
        }
        // boundary constraints hold exactly: pin the four boundary dofs
        let s_t = prob.terminal_position();
        lower[0] = prob.s0 / h;
        upper[0] = prob.s0 / h;
        lower[1] = prob.v0;
        upper[1] = prob.v0;
        lower[2 * n - 2] = s_t / h;
        upper[2 * n - 2] = s_t / h;
        lower[2 * n - 1] = prob.v_ref;
        upper[2 * n - 1] = prob.v_ref;
        Self { lower, upper }
    }

    fn project(&self, x: &mut [f64]) {
        for ((xi, lo), hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *xi = xi.clamp(*lo, *hi);
        }
    }

    fn is_fixed(&self, i: usize) -> bool {
        self.lower[i] == self.upper[i]
    }

    /// Largest gradient component over coordinates free to move downhill.
    fn stationarity(&self, x: &[f64], g: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..x.len() {
            if self.is_fixed(i) {
                continue;
            }
            let at_lower = x[i] <= self.lower[i] && g[i] > 0.0;
            let at_upper = x[i] >= self.upper[i] && g[i] < 0.0;
            if !(at_lower || at_upper) {
                worst = worst.max(g[i].abs());
            }
        }
        worst
    }
}

/// Objective and gradient in the scaled coordinates.
fn eval_scaled(y: &[f64], h: f64, prob: &PccProblem, x_buf: &mut Vec<f64>) -> (f64, Vec<f64>) {
    x_buf.clear();
    for (i, v) in y.iter().enumerate() {
        x_buf.push(if i % 2 == 0 { v * h } else { *v });
    }
    let (j, mut g) = objective(x_buf, prob);
    for (i, gi) in g.iter_mut().enumerate() {
        if i % 2 == 0 {
            *gi *= h;
        }
    }
    (j, g)
}

/// Solve the speed-planning problem. The constant-speed profile must be
/// feasible; the solver starts there and descends. A run that stops on
/// the iteration cap returns the best iterate with the report flagging
/// non-convergence.
pub fn solve_pcc(prob: &PccProblem) -> Result<(SpeedProfile, SolveReport), PccError> {
    prob.check_feasible()?;
    let h = prob.element_dt();
    let bounds = Bounds::build(prob, h);
    let mut y: Vec<f64> = prob
        .constant_profile_nodes()
        .iter()
        .enumerate()
        .map(|(i, v)| if i % 2 == 0 { v / h } else { *v })
        .collect();
    bounds.project(&mut y);

    let mut x_buf = Vec::with_capacity(2 * prob.n);
    let (mut j, mut g) = eval_scaled(&y, h, prob, &mut x_buf);
    let mut s_mem: Vec<Vec<f64>> = Vec::new();
    let mut y_mem: Vec<Vec<f64>> = Vec::new();
    let mut rho_mem: Vec<f64> = Vec::new();
    let mut prev_frozen: Vec<bool> = Vec::new();
    let mut report = SolveReport { iterations: 0, converged: false, objective: j, stationarity: 0.0 };
    let grad_tol = |j: f64| GRAD_TOL_REL * j.abs().max(1.0);

    for iter in 0..MAX_ITERS {
        report.iterations = iter + 1;
        let stationarity = bounds.stationarity(&y, &g);
        report.stationarity = stationarity;
        if stationarity <= grad_tol(j) {
            report.converged = true;
            break;
        }

        // freeze fixed coordinates and bound coordinates whose gradient
        // points out of the feasible box; quasi-Newton curvature is only
        // meaningful within one such subspace, so reset the memory when
        // the frozen set changes
        let frozen: Vec<bool> = (0..y.len())
            .map(|i| {
                bounds.is_fixed(i)
                    || (y[i] <= bounds.lower[i] && g[i] > 0.0)
                    || (y[i] >= bounds.upper[i] && g[i] < 0.0)
            })
            .collect();
        if frozen != prev_frozen {
            s_mem.clear();
            y_mem.clear();
            rho_mem.clear();
            prev_frozen = frozen.clone();
        }

        // two-loop recursion on the free subspace
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        for i in 0..d.len() {
            if frozen[i] {
                d[i] = 0.0;
            }
        }
        let k = s_mem.len();
        let mut alpha = vec![0.0; k];
        for i in (0..k).rev() {
            alpha[i] = rho_mem[i] * dot(&s_mem[i], &d);
            axpy(&mut d, -alpha[i], &y_mem[i]);
        }
        if k > 0 {
            let sy = dot(&s_mem[k - 1], &y_mem[k - 1]);
            let yy = dot(&y_mem[k - 1], &y_mem[k - 1]);
            if sy > 0.0 && yy > 0.0 {
                scale(&mut d, sy / yy);
            }
        } else {
            // no curvature information yet: normalize so the unit step
            // moves O(1) in the scaled coordinates
            let gn = dot(&g, &g).sqrt();
            if gn > 1.0 {
                scale(&mut d, 1.0 / gn);
            }
        }
        for i in 0..k {
            let beta = rho_mem[i] * dot(&y_mem[i], &d);
            axpy(&mut d, alpha[i] - beta, &s_mem[i]);
        }
        for i in 0..d.len() {
            if frozen[i] {
                d[i] = 0.0;
            }
        }
        // fall back to normalized steepest descent when the direction is
        // uphill
        if dot(&d, &g) >= 0.0 {
            let gn = dot(&g, &g).sqrt().max(1.0);
            d = g.iter().enumerate().map(|(i, v)| if frozen[i] { 0.0 } else { -v / gn }).collect();
            s_mem.clear();
            y_mem.clear();
            rho_mem.clear();
        }

        // Wolfe line search along the free-subspace direction, capped at
        // the first bound breakpoint so the searched path stays linear
        let mut alpha_max = f64::INFINITY;
        for i in 0..y.len() {
            if d[i] > 0.0 {
                alpha_max = alpha_max.min((bounds.upper[i] - y[i]) / d[i]);
            } else if d[i] < 0.0 {
                alpha_max = alpha_max.min((bounds.lower[i] - y[i]) / d[i]);
            }
        }
        alpha_max = alpha_max.max(0.0);
        let dphi0 = dot(&g, &d);
        if std::env::var("PCC_TRACE").is_ok() && iter % 100 == 0 {
            eprintln!("iter {iter}: J={j:.6} stat={:.4} mem={} amax={alpha_max:.3e} dphi0={dphi0:.3e}", report.stationarity, s_mem.len());
        }
        match wolfe_search(&y, &d, j, dphi0, alpha_max, h, prob, &mut x_buf) {
            Some((alpha, j_new, g_new)) => {
                let mut y_new: Vec<f64> = y.iter().zip(&d).map(|(xi, di)| xi + alpha * di).collect();
                bounds.project(&mut y_new);
                let s_vec: Vec<f64> = y_new.iter().zip(&y).map(|(a, b)| a - b).collect();
                let y_vec: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
                let sy = dot(&s_vec, &y_vec);
                if sy > 1e-12 {
                    s_mem.push(s_vec);
                    y_mem.push(y_vec);
                    rho_mem.push(1.0 / sy);
                    if s_mem.len() > MEMORY {
                        s_mem.remove(0);
                        y_mem.remove(0);
                        rho_mem.remove(0);
                    }
                }
                y = y_new;
                j = j_new;
                g = g_new;
            }
            None => {
                if std::env::var("PCC_TRACE").is_ok() {
                    eprintln!("iter {iter}: wolfe None. J={j:.6} dphi0={dphi0:.3e} amax={alpha_max:.3e} mem={}", s_mem.len());
                }
                // no productive step remains at this precision
                report.converged = bounds.stationarity(&y, &g) <= 10.0 * grad_tol(j);
                break;
            }
        }
    }
    report.objective = j;
    report.stationarity = bounds.stationarity(&y, &g);
    if !report.converged {
        log::warn!(
            "speed planner stopped after {} iterations with stationarity {:.3e}; returning best iterate",
            report.iterations,
            report.stationarity
        );
    }

    let x: Vec<f64> =
        y.iter().enumerate().map(|(i, v)| if i % 2 == 0 { v * h } else { *v }).collect();
    let profile = SpeedProfile::from_nodes(&x, h, prob.v_max)?;
    Ok((profile, report))
}


/// Strong-Wolfe line search (bracket and zoom) on `phi(a) = J(y + a d)`
/// over `a` in `(0, alpha_max]`. Returns the accepted step with its
/// objective and gradient, or None when no acceptable step exists.
#[allow(clippy::too_many_arguments)]
fn wolfe_search(
    y: &[f64],
    d: &[f64],
    phi0: f64,
    dphi0: f64,
    alpha_max: f64,
    h: f64,
    prob: &PccProblem,
    x_buf: &mut Vec<f64>,
) -> Option<(f64, f64, Vec<f64>)> {
    const C1: f64 = 1e-4;
    const C2: f64 = 0.9;
    if dphi0 >= 0.0 || alpha_max <= 1e-16 {
        return None;
    }
    let eval = |a: f64, x_buf: &mut Vec<f64>| {
        let yt: Vec<f64> = y.iter().zip(d).map(|(xi, di)| xi + a * di).collect();
        let (jv, gv) = eval_scaled(&yt, h, prob, x_buf);
        let slope = dot(&gv, d);
        (jv, gv, slope)
    };

    let mut a_prev = 0.0;
    let mut phi_prev = phi0;
    let mut a = alpha_max.min(1.0);
    let mut bracket: Option<(f64, f64, f64, f64)> = None; // lo, phi_lo, hi, phi_hi
    for _ in 0..12 {
        let (phi_a, g_a, slope_a) = eval(a, x_buf);
        if phi_a > phi0 + C1 * a * dphi0 || (phi_a >= phi_prev && a_prev > 0.0) {
            bracket = Some((a_prev, phi_prev, a, phi_a));
            break;
        }
        if slope_a.abs() <= -C2 * dphi0 {
            return Some((a, phi_a, g_a));
        }
        if slope_a >= 0.0 {
            bracket = Some((a, phi_a, a_prev, phi_prev));
            break;
        }
        if a >= alpha_max {
            // ran into the bound while still descending: take it
            return Some((a, phi_a, g_a));
        }
        a_prev = a;
        phi_prev = phi_a;
        a = (2.0 * a).min(alpha_max);
    }
    let (mut lo, mut phi_lo, mut hi, mut phi_hi) = bracket?;
    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    for _ in 0..25 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() < 1e-16 {
            break;
        }
        let (phi_m, g_m, slope_m) = eval(mid, x_buf);
        if phi_m > phi0 + C1 * mid * dphi0 || phi_m >= phi_lo {
            hi = mid;
            phi_hi = phi_m;
        } else {
            if slope_m.abs() <= -C2 * dphi0 {
                return Some((mid, phi_m, g_m));
            }
            if slope_m * (hi - lo) >= 0.0 {
                hi = lo;
                phi_hi = phi_lo;
            }
            lo = mid;
            phi_lo = phi_m;
            best = Some((mid, phi_m, g_m));
        }
    }
    let _ = phi_hi;
    // fall back to the best Armijo point found inside the bracket
    best.filter(|(a, _, _)| *a > 0.0)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn scale(v: &mut [f64], a: f64) {
    for vi in v.iter_mut() {
        *vi *= a;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::SlopeProfile;
    use crate::pcc::{PccFuelModel, PccProblem};
    use crate::truck::{FuelMap, TruckParams};

    fn problem(slope: SlopeProfile, horizon: f64, n: usize) -> PccProblem {
        let params = TruckParams::empty_load();
        let map = FuelMap::bundled();
        let fuel = PccFuelModel::fit(&params, &map, 1300.0);
        PccProblem::new(horizon, 20.0, 25.0, n, 0.0, slope, &params, fuel).unwrap()
    }

    #[test]
    fn flat_road_returns_constant_profile() {
        let prob = problem(SlopeProfile::flat(), 300.0, 61);
        let (profile, report) = solve_pcc(&prob).unwrap();
        assert!(report.converged);
        for i in 0..prob.n {
            assert!(
                (profile.speed_at_node(i) - prob.v_ref).abs() < 1e-4,
                "node {i}: {}",
                profile.speed_at_node(i)
            );
        }
    }

    #[test]
    fn endpoints_hold_exactly() {
        let prob = problem(SlopeProfile::sinusoidal(30.0, 3000.0, 20_000.0), 300.0, 101);
        let (profile, _) = solve_pcc(&prob).unwrap();
        assert_eq!(profile.position_at_node(0), prob.s0);
        assert_eq!(profile.speed_at_node(0), prob.v0);
        assert_eq!(profile.position_at_node(prob.n - 1), prob.terminal_position());
        assert_eq!(profile.speed_at_node(prob.n - 1), prob.v_ref);
    }

    #[test]
    fn hill_slows_uphill_speeds_downhill() {
        let prob = problem(SlopeProfile::sinusoidal(30.0, 3000.0, 20_000.0), 300.0, 101);
        let (profile, report) = solve_pcc(&prob).unwrap();
        assert!(report.converged, "stationarity {}", report.stationarity);
        let mut up = Vec::new();
        let mut down = Vec::new();
        for i in 0..prob.n - 1 {
            let s_mid = 0.5 * (profile.position_at_node(i) + profile.position_at_node(i + 1));
            let dv = profile.speed_at_node(i + 1) - profile.speed_at_node(i);
            let grade = prob.slope.grade(s_mid);
            if grade > 0.01 {
                up.push(dv);
            } else if grade < -0.01 {
                down.push(dv);
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(mean(&up) < 0.0, "uphill mean dv {}", mean(&up));
        assert!(mean(&down) > 0.0, "downhill mean dv {}", mean(&down));
        for i in 0..prob.n {
            let v = profile.speed_at_node(i);
            assert!((0.0..=prob.v_max + 1e-12).contains(&v));
        }
    }

    #[test]
    fn hill_beats_constant_cruise_on_same_objective() {
        let prob = problem(SlopeProfile::sinusoidal(30.0, 3000.0, 20_000.0), 300.0, 101);
        let (_, report) = solve_pcc(&prob).unwrap();
        let (j_const, _) = crate::pcc::objective(&prob.constant_profile_nodes(), &prob);
        assert!(
            report.objective < j_const * 0.95,
            "optimized {} vs constant {j_const}",
            report.objective
        );
    }

    #[test]
    fn solver_is_deterministic() {
        let prob = problem(SlopeProfile::sinusoidal(30.0, 3000.0, 20_000.0), 300.0, 61);
        let (p1, r1) = solve_pcc(&prob).unwrap();
        let (p2, r2) = solve_pcc(&prob).unwrap();
        assert_eq!(r1, r2);
        for i in 0..prob.n {
            assert_eq!(p1.position_at_node(i), p2.position_at_node(i));
            assert_eq!(p1.speed_at_node(i), p2.speed_at_node(i));
        }
    }

    #[test]
    fn first_order_optimality_certificate() {
        // perturbing any single free coefficient cannot produce a
        // first-order decrease beyond tolerance
        let prob = problem(SlopeProfile::sinusoidal(30.0, 3000.0, 20_000.0), 300.0, 61);
        let (profile, report) = solve_pcc(&prob).unwrap();
        assert!(report.converged, "stationarity {}", report.stationarity);
        let mut x = Vec::with_capacity(2 * prob.n);
        for i in 0..prob.n {
            x.push(profile.position_at_node(i));
            x.push(profile.speed_at_node(i));
        }
        let (j, _) = crate::pcc::objective(&x, &prob);
        let eps = 1e-4;
        for i in (2..2 * prob.n - 2).step_by(5) {
            for sign in [-1.0, 1.0] {
                let mut xp = x.clone();
                xp[i] += sign * eps;
                if i % 2 == 1 {
                    xp[i] = xp[i].clamp(0.0, prob.v_max);
                }
                let (jp, _) = crate::pcc::objective(&xp, &prob);
                assert!(jp >= j - 1e-6 * j.abs().max(1.0), "coord {i} sign {sign}: {jp} < {j}");
            }
        }
    }

    #[test]
    fn fence_violation_is_reported_with_node() {
        let mut prob = problem(SlopeProfile::flat(), 100.0, 11);
        prob.fences[5] = 900.0;
        match solve_pcc(&prob).unwrap_err() {
            PccError::Infeasible { node, .. } => assert_eq!(node, 5),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn binding_fence_is_respected() {
        // fence slightly above the constant path forces the solution to
        // stay under it
        let mut prob = problem(SlopeProfile::sinusoidal(30.0, 3000.0, 20_000.0), 300.0, 61);
        let h = prob.element_dt();
        for i in 0..prob.n {
            prob.fences[i] = prob.s0 + prob.v_ref * h * i as f64 + 40.0;
        }
        let (profile, _) = solve_pcc(&prob).unwrap();
        for i in 0..prob.n {
            assert!(profile.position_at_node(i) <= prob.fences[i] + 1e-9, "node {i}");
        }
    }
}
