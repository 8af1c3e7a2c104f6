//! Linear lateral yaw-sideslip dynamics of the tractor-trailer,
//! derived from Lagrangian mechanics with the generalized force taken
//! as the gradient of the virtual work done by the tire forces and the
//! convective pseudo-forces.
//!
//! States: `[v_yc, omega_c, omega_t, gamma]` with `gamma` the tractor
//! heading minus the trailer heading. Tire forces are linear in slip,
//! `F = C * slip`, with slip angles built from the states at each axle
//! position; the steer-projection factor sqrt(1 - delta^2) is
//! approximated as 1 so the system stays linear.

use nalgebra::{Matrix4, Matrix5, Vector4};

use super::{LateralState, TruckError, TruckParams};

#[derive(Debug, Clone, PartialEq)]
pub struct LateralMatrices {
    /// Generalized mass matrix (mass/inertia block plus unit gamma row).
    pub h: Matrix4<f64>,
    /// State coefficient of the generalized force.
    pub a_h: Matrix4<f64>,
    /// Steer coefficient of the generalized force.
    pub b_h: Vector4<f64>,
    /// State matrix `H^-1 A_h`.
    pub a: Matrix4<f64>,
    /// Input matrix `H^-1 B_h`.
    pub b: Vector4<f64>,
}

/// One tire axle reduced to its stiffness, its slip-angle dependence on
/// `(s, delta)`, and its virtual-work arms on `(dy_c, dbeta_c, dbeta_t)`.
struct Axle {
    stiffness: f64,
    /// d(slip)/d([v_yc, omega_c, omega_t, gamma])
    slip_state: [f64; 4],
    /// d(slip)/d(delta)
    slip_steer: f64,
    arms: [f64; 3],
}

fn axles(p: &TruckParams, v: f64) -> [Axle; 6] {
    let lh = p.cg_to_hitch;
    let lt1 = p.hitch_to_trailer_cg;
    // tractor axle at signed arm `a` (positive forward of CG):
    //   slip = delta_axle - (v_yc + a*omega_c)/v
    let tractor = |stiffness: f64, arm: f64, steered: bool| Axle {
        stiffness,
        slip_state: [-1.0 / v, -arm / v, 0.0, 0.0],
        slip_steer: if steered { 1.0 } else { 0.0 },
        arms: [1.0, arm, 0.0],
    };
    // trailer axle at signed trailer-frame arm `a` (negative rearward):
    //   v_yt = v_yc - L_h*omega_c - L_t1*omega_t
    //   slip = -gamma - (v_yt + a*omega_t)/v
    // virtual work acts through dy_t = dy_c - L_h dbeta_c - L_t1 dbeta_t
    let trailer = |stiffness: f64, arm: f64| Axle {
        stiffness,
        slip_state: [-1.0 / v, lh / v, (lt1 - arm) / v, -1.0],
        slip_steer: 0.0,
        arms: [1.0, -lh, -lt1 + arm],
    };
    [
        tractor(p.c_steer, p.cg_to_front_axle, true),
        tractor(p.c_tandem_front, -(p.cg_to_rear_tandem - p.tandem_half_spacing), false),
        tractor(p.c_tandem_rear, -(p.cg_to_rear_tandem + p.tandem_half_spacing), false),
        trailer(p.c_tridem_front, -(p.trailer_cg_to_tridem - p.tridem_half_spacing)),
        trailer(p.c_tridem_middle, -p.trailer_cg_to_tridem),
        trailer(p.c_tridem_rear, -(p.trailer_cg_to_tridem + p.tridem_half_spacing)),
    ]
}

/// Generalized force `Q = grad_dq(dW)` on the `(y_c, beta_c, beta_t)`
/// degrees of freedom, evaluated numerically from the tire forces, the
/// virtual-work arms, and the convective pseudo-forces. This is the
/// reference route the analytic assembly is checked against.
pub fn generalized_force(p: &TruckParams, v: f64, s: &LateralState, delta: f64) -> [f64; 3] {
    let sv = s.to_vector();
    let mut q = [0.0; 3];
    for axle in axles(p, v) {
        let slip: f64 =
            axle.slip_steer * delta + axle.slip_state.iter().zip(sv.iter()).map(|(c, x)| c * x).sum::<f64>();
        let force = axle.stiffness * slip;
        for (qi, arm) in q.iter_mut().zip(axle.arms) {
            *qi += force * arm;
        }
    }
    // convective pseudo-forces -m_c v omega_c dy_c - m_t v omega_t dy_t
    q[0] += -p.m_tractor * v * s.omega_c - p.m_trailer * v * s.omega_t;
    q[1] += p.cg_to_hitch * p.m_trailer * v * s.omega_t;
    q[2] += p.hitch_to_trailer_cg * p.m_trailer * v * s.omega_t;
    q
}

/// Assemble the lateral matrices at longitudinal speed `v`.
pub fn assemble_lateral_matrices(p: &TruckParams, v: f64) -> Result<LateralMatrices, TruckError> {
    if !(v > 0.0) {
        return Err(TruckError::InvalidInput(format!("lateral model singular at v = {v}")));
    }
    let (m_c, m_t) = (p.m_tractor, p.m_trailer);
    let (lh, lt1) = (p.cg_to_hitch, p.hitch_to_trailer_cg);
    #[rustfmt::skip]
    let h = Matrix4::new(
        m_c + m_t,  -lh * m_t,            -lt1 * m_t,            0.0,
        -lh * m_t,   m_t * lh * lh + p.inertia_tractor, lh * lt1 * m_t, 0.0,
        -lt1 * m_t,  lh * lt1 * m_t,      m_t * lt1 * lt1 + p.inertia_trailer, 0.0,
        0.0,         0.0,                 0.0,                   1.0,
    );

    let mut a_h = Matrix4::zeros();
    let mut b_h = Vector4::zeros();
    for axle in axles(p, v) {
        for (row, arm) in axle.arms.iter().enumerate() {
            for col in 0..4 {
                a_h[(row, col)] += axle.stiffness * arm * axle.slip_state[col];
            }
            b_h[row] += axle.stiffness * arm * axle.slip_steer;
        }
    }
    a_h[(0, 1)] += -m_c * v;
    a_h[(0, 2)] += -m_t * v;
    a_h[(1, 2)] += lh * m_t * v;
    a_h[(2, 2)] += lt1 * m_t * v;
    // articulation row: gamma' = omega_c - omega_t
    a_h[(3, 1)] = 1.0;
    a_h[(3, 2)] = -1.0;

    let h_inv = h.try_inverse().ok_or(TruckError::SingularMassMatrix)?;
    Ok(LateralMatrices { h, a_h, b_h, a: h_inv * a_h, b: h_inv * b_h })
}

/// Exact discrete step of `s' = A s + B delta` over `dt` via the matrix
/// exponential of the augmented system (A, B frozen at the given v).
pub fn lateral_step(s: &LateralState, delta: f64, mats: &LateralMatrices, dt: f64) -> LateralState {
    let mut aug = Matrix5::zeros();
    aug.fixed_view_mut::<4, 4>(0, 0).copy_from(&mats.a);
    aug.fixed_view_mut::<4, 1>(0, 4).copy_from(&mats.b);
    let phi = (aug * dt).exp();
    let x = s.to_vector();
    let next = phi.fixed_view::<4, 4>(0, 0) * x + phi.fixed_view::<4, 1>(0, 4) * delta;
    LateralState::from_vector(next)
}

/// Trailer lateral velocity reconstructed from the state via the
/// kinematic constraint `v_yt = v_yc - L_h omega_c - L_t1 omega_t`.
pub fn trailer_lateral_velocity(s: &LateralState, p: &TruckParams) -> f64 {
    s.v_yc - p.cg_to_hitch * s.omega_c - p.hitch_to_trailer_cg * s.omega_t
}
