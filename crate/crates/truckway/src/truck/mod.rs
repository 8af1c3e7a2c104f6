//! The ego tractor-trailer: hitch kinematics, a drive-line/brake
//! longitudinal surrogate, the linear lateral yaw-sideslip dynamics, and
//! the engine power / fuel-rate models.
//!
//! Two lateral descriptions run side by side: the kinematic model is the
//! authoritative pose for routing and tracking, while the linear
//! yaw-sideslip model provides yaw-rate and hitch-articulation
//! diagnostics and supports controller analysis.

mod fuel;
mod kinematics;
mod lateral;
mod powertrain;
mod rig;

pub use fuel::{engine_power, fuel_rate, FuelMap};
pub use kinematics::{integrate_rk4, kinematic_derivative, steady_hitch_angle, KinematicInput};
pub use lateral::{
    assemble_lateral_matrices, generalized_force, lateral_step, trailer_lateral_velocity,
    LateralMatrices,
};
pub use powertrain::{brake_dynamics, drive_force, engine_torque, gear_schedule, longitudinal_step, terminal_speed, Driveline};
pub use rig::{Truck, TruckInput, TruckOutput};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const GRAVITY: f64 = 9.81;

#[derive(Debug, Error)]
pub enum TruckError {
    #[error("jackknife: hitch angle {0:.3} rad beyond bound")]
    Jackknife(f64),
    #[error("singular mass matrix; check masses and inertias")]
    SingularMassMatrix,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("data file error: {0}")]
    Data(String),
}

/// Physical and geometric parameters of the tractor-trailer rig.
///
/// The two constructors are the reference presets (empty and full
/// load). Geometry and tire stiffness values are estimates for a
/// 12-wheel tractor with a tridem-axle semitrailer; the drive-line
/// data files carry the engine and gearbox side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruckParams {
    /// Tractor wheelbase, m.
    pub wheelbase: f64,
    /// Tongue length: tractor rear axle to hitch, m.
    pub tongue_length: f64,
    /// Hitch length: hitch to trailer axle, m.
    pub hitch_length: f64,
    /// Tractor / trailer masses, kg.
    pub m_tractor: f64,
    pub m_trailer: f64,
    /// Yaw inertias, kg*m^2.
    pub inertia_tractor: f64,
    pub inertia_trailer: f64,
    /// Tractor CG to hitch (rearward), m.
    pub cg_to_hitch: f64,
    /// Hitch to trailer CG, m.
    pub hitch_to_trailer_cg: f64,
    /// Tractor CG to front axle, m.
    pub cg_to_front_axle: f64,
    /// Tractor CG to rear tandem center, m.
    pub cg_to_rear_tandem: f64,
    /// Tractor tandem half-spacing, m.
    pub tandem_half_spacing: f64,
    /// Trailer CG to tridem center, m.
    pub trailer_cg_to_tridem: f64,
    /// Trailer tridem half-spacing, m.
    pub tridem_half_spacing: f64,
    /// Cornering stiffnesses, N/rad: steered axle, tractor tandem front/
    /// rear, trailer tridem front/middle/rear.
    pub c_steer: f64,
    pub c_tandem_front: f64,
    pub c_tandem_rear: f64,
    pub c_tridem_front: f64,
    pub c_tridem_middle: f64,
    pub c_tridem_rear: f64,
    /// Total vehicle mass, kg.
    pub m_total: f64,
    pub rho_air: f64,
    pub frontal_area: f64,
    pub drag_coeff: f64,
    /// Drive-line efficiency from engine torque to tractive force.
    pub efficiency: f64,
    /// Rolling friction mu(v) = mu0 + mu1 * v.
    pub mu0: f64,
    pub mu1: f64,
    pub wheel_radius: f64,
    pub steering_ratio: f64,
    /// Overall rig length for traffic occupancy, m.
    pub rig_length: f64,
    /// Steering limits.
    pub max_steer_angle: f64,
    pub max_steer_rate: f64,
    /// Hitch articulation beyond this raises a jackknife fault, rad.
    pub jackknife_bound: f64,
    /// Engine power cap for the fuel model, kW.
    pub engine_power_max_kw: f64,
    /// Idle fuel flow when no positive power is demanded, g/s.
    pub idle_fuel_rate: f64,
    /// Engine drag torque coefficient at zero pedal, Nm per rpm.
    pub engine_brake_coeff: f64,
}

impl TruckParams {
    /// Empty-load preset, 19 t total.
    pub fn empty_load() -> Self {
        Self {
            m_trailer: 10_000.0,
            inertia_trailer: 130_000.0,
            m_total: 19_000.0,
            ..Self::full_load()
        }
    }

    /// Full-load preset, 55 t total.
    pub fn full_load() -> Self {
        Self {
            wheelbase: 3.8,
            tongue_length: 0.3,
            hitch_length: 7.0,
            m_tractor: 9_000.0,
            m_trailer: 46_000.0,
            inertia_tractor: 32_000.0,
            inertia_trailer: 600_000.0,
            cg_to_hitch: 2.0,
            hitch_to_trailer_cg: 4.0,
            cg_to_front_axle: 1.5,
            cg_to_rear_tandem: 2.3,
            tandem_half_spacing: 0.675,
            trailer_cg_to_tridem: 3.0,
            tridem_half_spacing: 1.31,
            c_steer: 300e3,
            c_tandem_front: 500e3,
            c_tandem_rear: 500e3,
            c_tridem_front: 400e3,
            c_tridem_middle: 400e3,
            c_tridem_rear: 400e3,
            m_total: 55_000.0,
            rho_air: 1.2,
            frontal_area: 8.0,
            drag_coeff: 0.6,
            efficiency: 0.92,
            mu0: 0.007,
            mu1: 0.0,
            wheel_radius: 0.51,
            steering_ratio: 20.0,
            rig_length: 17.0,
            max_steer_angle: 0.6,
            max_steer_rate: 0.5,
            jackknife_bound: 1.2,
            engine_power_max_kw: 350.0,
            idle_fuel_rate: 0.3,
            engine_brake_coeff: 0.0,
        }
    }

    /// Rolling friction coefficient at speed `v`.
    pub fn rolling_friction(&self, v: f64) -> f64 {
        self.mu0 + self.mu1 * v
    }
}

/// Pose-level state of the rig (kinematic model).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicState {
    pub x: f64,
    pub y: f64,
    /// Tractor heading, rad.
    pub heading: f64,
    /// Front-wheel steer angle, rad.
    pub steer: f64,
    /// Hitch angle between tractor and trailer headings, rad.
    pub hitch: f64,
    /// Longitudinal speed, m/s.
    pub v: f64,
}

impl KinematicState {
    pub fn at_rest() -> Self {
        Self { x: 0.0, y: 0.0, heading: 0.0, steer: 0.0, hitch: 0.0, v: 0.0 }
    }
}

/// Lateral yaw-sideslip state: tractor lateral velocity, tractor and
/// trailer yaw rates, and hitch articulation (tractor heading minus
/// trailer heading).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LateralState {
    pub v_yc: f64,
    pub omega_c: f64,
    pub omega_t: f64,
    pub gamma: f64,
}

impl LateralState {
    pub fn to_vector(self) -> nalgebra::Vector4<f64> {
        nalgebra::Vector4::new(self.v_yc, self.omega_c, self.omega_t, self.gamma)
    }

    pub fn from_vector(v: nalgebra::Vector4<f64>) -> Self {
        Self { v_yc: v[0], omega_c: v[1], omega_t: v[2], gamma: v[3] }
    }
}

/// Drive-line and brake actuator state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowertrainState {
    /// 0 = neutral, 1..=10 forward.
    pub gear: u8,
    pub engine_speed: f64,
    pub engine_torque: f64,
    pub brake_pressure: f64,
    pub pedal: f64,
    /// Brake control mode: 0 inactive, nonzero active.
    pub brake_mode: u8,
    /// Commanded deceleration (non-positive), m/s².
    pub commanded_decel: f64,
    /// Deceleration currently realized by the brake actuator, m/s².
    pub realized_decel: f64,
    /// Remaining torque-hole time of an in-progress shift, s.
    pub shift_timer: f64,
    /// Remaining lockout before the next shift is allowed, s.
    pub shift_lockout: f64,
    /// Set when the engine had to be clamped at its speed limits.
    pub rpm_fault: bool,
    /// Pending delayed brake commands as (time_effective, decel).
    pub brake_queue: std::collections::VecDeque<(f64, f64)>,
    /// Internal clock for the brake delay line, s.
    pub clock: f64,
}

impl PowertrainState {
    pub fn new() -> Self {
        Self {
            gear: 0,
            engine_speed: powertrain::IDLE_RPM,
            engine_torque: 0.0,
            brake_pressure: 0.0,
            pedal: 0.0,
            brake_mode: 0,
            commanded_decel: 0.0,
            realized_decel: 0.0,
            shift_timer: 0.0,
            shift_lockout: 0.0,
            rpm_fault: false,
            brake_queue: std::collections::VecDeque::new(),
            clock: 0.0,
        }
    }
}

impl Default for PowertrainState {
    fn default() -> Self {
        Self::new()
    }
}
