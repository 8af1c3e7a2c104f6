//! The assembled ego truck: steering actuator, drive-line, brakes, the
//! kinematic pose (authoritative) and the lateral yaw-sideslip
//! diagnostics stepped side by side.

use super::fuel::{fuel_rate, FuelMap};
use super::kinematics::{integrate_rk4, KinematicInput};
use super::lateral::{assemble_lateral_matrices, lateral_step, LateralMatrices};
use super::powertrain::{
    brake_dynamics, drive_force, engine_torque, gear_schedule, longitudinal_step, Driveline,
};
use super::{KinematicState, LateralState, PowertrainState, TruckError, TruckParams};

/// Steering actuator first-order time constant, s.
const STEER_TAU: f64 = 0.2;
/// Below this speed the lateral model is held at zero (singular at rest).
const LATERAL_MIN_SPEED: f64 = 0.5;
/// Gain-schedule refresh threshold on speed, m/s.
const LATERAL_RESCHEDULE_DV: f64 = 0.5;

/// Input record of the simulated truck (pedal, brake mode and external
/// deceleration, steering wheel angle).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TruckInput {
    /// Accelerator pedal position in [0, 1].
    pub pedal_pos: f64,
    /// Commanded deceleration, m/s² (non-positive when active).
    pub xbr_external_accel: f64,
    /// Brake control mode: 0 inactive, nonzero active.
    pub xbr_ctrl_mode: u8,
    /// Steering wheel angle, rad (road-wheel angle times the ratio).
    pub steer_wheel_angle: f64,
}

/// Output channels of one truck step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruckOutput {
    pub v: f64,
    pub a: f64,
    pub gear: u8,
    pub engine_speed: f64,
    pub engine_torque: f64,
    pub brake_pressure: f64,
    /// Tractor / trailer yaw rates from the lateral diagnostics, rad/s.
    pub yaw_rate_tractor: f64,
    pub yaw_rate_trailer: f64,
    /// Hitch angle of the authoritative kinematic pose, rad.
    pub hitch_angle: f64,
    /// Delivered mechanical engine power, kW.
    pub engine_power_kw: f64,
    /// Instantaneous fuel flow, g/s.
    pub fuel_rate_gps: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    /// Station along the route, m.
    pub s: f64,
    /// Road-wheel steer angle, rad.
    pub steer: f64,
    pub rpm_fault: bool,
}

#[derive(Debug, Clone)]
pub struct Truck {
    pub params: TruckParams,
    pub kin: KinematicState,
    pub power: PowertrainState,
    pub lateral: LateralState,
    /// Station along the route (grade lookups integrate this).
    pub s_along: f64,
    driveline: Driveline,
    fuel_map: FuelMap,
    lateral_mats: Option<(f64, LateralMatrices)>,
    /// Total fuel burned since construction, g.
    pub fuel_used_g: f64,
}

impl Truck {
    pub fn new(params: TruckParams) -> Self {
        Self {
            params,
            kin: KinematicState::at_rest(),
            power: PowertrainState::new(),
            lateral: LateralState::default(),
            s_along: 0.0,
            driveline: Driveline::bundled(),
            fuel_map: FuelMap::bundled(),
            lateral_mats: None,
            fuel_used_g: 0.0,
        }
    }

    /// Place the truck on the route at station `s`, lateral offset `y`,
    /// moving at `v`.
    pub fn place(&mut self, s: f64, y: f64, v: f64) {
        self.s_along = s;
        self.kin = KinematicState { x: s, y, v, ..KinematicState::at_rest() };
        // drop into a cruising gear consistent with the speed
        let mut gear = 0u8;
        for g in (1..=self.driveline.gear_count()).rev() {
            let (rpm, _) = self.driveline.engine_speed(v, g, self.params.wheel_radius);
            if rpm >= super::powertrain::DOWNSHIFT_RPM || g == 1 {
                gear = g;
                break;
            }
        }
        if v <= 0.1 {
            gear = 0;
        }
        self.power = PowertrainState::new();
        self.power.gear = gear;
        self.lateral = LateralState::default();
        self.lateral_mats = None;
        self.fuel_used_g = 0.0;
    }

    pub fn driveline(&self) -> &Driveline {
        &self.driveline
    }

    pub fn fuel_map(&self) -> &FuelMap {
        &self.fuel_map
    }

    fn lateral_matrices(&mut self, v: f64) -> Option<&LateralMatrices> {
        if v < LATERAL_MIN_SPEED {
            return None;
        }
        let needs_refresh = match &self.lateral_mats {
            Some((v0, _)) => (v - v0).abs() > LATERAL_RESCHEDULE_DV,
            None => true,
        };
        if needs_refresh {
            let mats = assemble_lateral_matrices(&self.params, v).ok()?;
            self.lateral_mats = Some((v, mats));
        }
        self.lateral_mats.as_ref().map(|(_, m)| m)
    }

    /// Advance the truck by `dt` under the given input, with the road
    /// grade supplied as a function of station.
    pub fn step(
        &mut self,
        input: &TruckInput,
        grade_at: &dyn Fn(f64) -> f64,
        dt: f64,
    ) -> Result<TruckOutput, TruckError> {
        let p = self.params.clone();
        let v0 = self.kin.v;

        // steering actuator toward the commanded road-wheel angle
        let steer_cmd =
            (input.steer_wheel_angle / p.steering_ratio).clamp(-p.max_steer_angle, p.max_steer_angle);
        let steer_rate =
            ((steer_cmd - self.kin.steer) / STEER_TAU).clamp(-p.max_steer_rate, p.max_steer_rate);

        // drive-line
        self.power.pedal = input.pedal_pos.clamp(0.0, 1.0);
        let (rpm, rpm_fault) = self.driveline.engine_speed(v0, self.power.gear, p.wheel_radius);
        self.power.engine_speed = rpm;
        self.power.rpm_fault = rpm_fault;
        gear_schedule(&mut self.power, &self.driveline, dt);
        let torque = if self.power.shift_timer > 0.0 {
            0.0
        } else {
            engine_torque(self.power.pedal, rpm, &self.driveline, &p)
        };
        self.power.engine_torque = torque;

        // brakes
        brake_dynamics((input.xbr_ctrl_mode, input.xbr_external_accel.min(0.0)), &mut self.power, dt)?;
        let f_drive = drive_force(torque.max(0.0), self.power.gear, &self.driveline, &p)
            + drive_force(torque.min(0.0), self.power.gear, &self.driveline, &p);
        let f_brake = p.m_total * self.power.realized_decel.abs();

        // longitudinal balance
        let (s_next, v_next) = longitudinal_step(self.s_along, v0, f_drive, f_brake, grade_at, &p, dt);
        let accel = (v_next - v0) / dt;

        // authoritative pose
        let kin_input = KinematicInput { steer_rate, accel };
        let mut kin = integrate_rk4(&self.kin, &kin_input, &p, dt)?;
        kin.v = v_next;
        self.kin = kin;
        self.s_along = s_next;

        // lateral diagnostics at the scheduled speed
        let steer_now = self.kin.steer;
        let lateral_now = self.lateral;
        self.lateral = match self.lateral_matrices(v_next) {
            Some(mats) => lateral_step(&lateral_now, steer_now, mats, dt),
            None => LateralState::default(),
        };

        // fuel from the delivered operating point
        let omega = rpm * 2.0 * std::f64::consts::PI / 60.0;
        let engine_power_kw = (torque.max(0.0) * omega / 1000.0).min(p.engine_power_max_kw);
        let fuel = fuel_rate(engine_power_kw, rpm, &self.fuel_map, &p);
        self.fuel_used_g += fuel * dt;

        Ok(TruckOutput {
            v: v_next,
            a: accel,
            gear: self.power.gear,
            engine_speed: rpm,
            engine_torque: torque,
            brake_pressure: self.power.brake_pressure,
            yaw_rate_tractor: self.lateral.omega_c,
            yaw_rate_trailer: self.lateral.omega_t,
            hitch_angle: self.kin.hitch,
            engine_power_kw,
            fuel_rate_gps: fuel,
            x: self.kin.x,
            y: self.kin.y,
            heading: self.kin.heading,
            s: self.s_along,
            steer: self.kin.steer,
            rpm_fault,
        })
    }
}
