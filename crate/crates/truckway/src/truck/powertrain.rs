//! Drive-line and brake surrogates: bundled max-torque curve, 10-speed
//! AMT schedule with shift torque holes, and a delay-plus-lag air brake.

use super::{PowertrainState, TruckError, TruckParams, GRAVITY};

pub const IDLE_RPM: f64 = 600.0;
pub const REDLINE_RPM: f64 = 2100.0;
/// Upshift / downshift thresholds with hysteresis.
pub const UPSHIFT_RPM: f64 = 1600.0;
pub const DOWNSHIFT_RPM: f64 = 1100.0;
/// Drive torque is zero for this long while a shift completes, s.
pub const SHIFT_TORQUE_HOLE: f64 = 0.8;
/// Minimum time between shift events, s.
pub const SHIFT_LOCKOUT: f64 = 1.0;
/// Brake actuator pure delay and first-order time constant, s.
pub const BRAKE_DELAY: f64 = 0.2;
pub const BRAKE_TAU: f64 = 0.4;
/// Reported pressure per unit realized deceleration, kPa/(m/s²).
pub const BRAKE_PRESSURE_PER_DECEL: f64 = 100.0;

const TORQUE_CURVE_CSV: &str = include_str!("../../data/torque_curve.csv");
const GEAR_RATIOS_CSV: &str = include_str!("../../data/gear_ratios.csv");

/// Engine and gearbox tables loaded from the bundled data files.
#[derive(Debug, Clone)]
pub struct Driveline {
    /// (rpm, max torque) knots, ascending rpm.
    torque_curve: Vec<(f64, f64)>,
    /// Overall drive ratio per forward gear (index 0 = gear 1).
    ratios: Vec<f64>,
}

impl Driveline {
    pub fn bundled() -> Self {
        Self::from_csv(TORQUE_CURVE_CSV, GEAR_RATIOS_CSV).expect("bundled data files are well formed")
    }

    pub fn from_csv(torque_csv: &str, ratios_csv: &str) -> Result<Self, TruckError> {
        let mut torque_curve = Vec::new();
        for line in torque_csv.lines().skip(1).filter(|l| !l.trim().is_empty()) {
            let mut it = line.split(',');
            let rpm: f64 = parse_field(it.next(), "rpm")?;
            let tq: f64 = parse_field(it.next(), "max_torque_nm")?;
            torque_curve.push((rpm, tq));
        }
        let mut ratios = Vec::new();
        for line in ratios_csv.lines().skip(1).filter(|l| !l.trim().is_empty()) {
            let mut it = line.split(',');
            let _gear: f64 = parse_field(it.next(), "gear")?;
            ratios.push(parse_field(it.next(), "overall_ratio")?);
        }
        if torque_curve.len() < 2 || ratios.is_empty() {
            return Err(TruckError::Data("drive-line tables too short".into()));
        }
        Ok(Self { torque_curve, ratios })
    }

    pub fn gear_count(&self) -> u8 {
        self.ratios.len() as u8
    }

    /// Overall ratio of a forward gear; neutral has no drive path.
    pub fn ratio(&self, gear: u8) -> f64 {
        if gear == 0 {
            0.0
        } else {
            self.ratios[(gear as usize - 1).min(self.ratios.len() - 1)]
        }
    }

    /// Peak engine torque at `rpm`, linearly interpolated, clamped to the
    /// curve's rpm range.
    pub fn max_torque(&self, rpm: f64) -> f64 {
        let pts = &self.torque_curve;
        if rpm <= pts[0].0 {
            return pts[0].1;
        }
        if rpm >= pts[pts.len() - 1].0 {
            return pts[pts.len() - 1].1;
        }
        let i = pts.partition_point(|(r, _)| *r <= rpm) - 1;
        let (r0, t0) = pts[i];
        let (r1, t1) = pts[i + 1];
        t0 + (t1 - t0) * (rpm - r0) / (r1 - r0)
    }

    /// Engine speed implied by road speed in a gear, floored at idle.
    /// Returns `(rpm, clamped)` where `clamped` flags a redline clip.
    pub fn engine_speed(&self, v: f64, gear: u8, wheel_radius: f64) -> (f64, bool) {
        if gear == 0 {
            return (IDLE_RPM, false);
        }
        let rpm = v / wheel_radius * self.ratio(gear) * 60.0 / (2.0 * std::f64::consts::PI);
        if rpm > REDLINE_RPM {
            (REDLINE_RPM, true)
        } else {
            (rpm.max(IDLE_RPM), false)
        }
    }
}

fn parse_field(field: Option<&str>, name: &str) -> Result<f64, TruckError> {
    field
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| TruckError::Data(format!("bad csv field '{name}'")))
}

/// Engine torque delivered for a pedal position at an engine speed:
/// `pedal * T_max(rpm)` minus the configured zero-pedal drag. The rpm is
/// clamped into the valid band; callers read the fault flag off the
/// powertrain state.
pub fn engine_torque(pedal: f64, rpm: f64, dl: &Driveline, p: &TruckParams) -> f64 {
    let pedal = pedal.clamp(0.0, 1.0);
    let rpm = rpm.clamp(IDLE_RPM, REDLINE_RPM);
    let drive = pedal * dl.max_torque(rpm);
    let drag = if pedal == 0.0 { p.engine_brake_coeff * rpm } else { 0.0 };
    drive - drag
}

/// AMT schedule: upshift above `UPSHIFT_RPM`, downshift below
/// `DOWNSHIFT_RPM`, one gear per event, with a lockout between events and
/// a torque hole while the shift completes. Returns the updated gear.
pub fn gear_schedule(state: &mut PowertrainState, dl: &Driveline, dt: f64) -> u8 {
    state.shift_timer = (state.shift_timer - dt).max(0.0);
    state.shift_lockout = (state.shift_lockout - dt).max(0.0);
    if state.shift_lockout > 0.0 {
        return state.gear;
    }
    let rpm = state.engine_speed;
    if state.gear == 0 {
        if state.pedal > 0.0 {
            state.gear = 1;
            state.shift_lockout = SHIFT_LOCKOUT;
        }
        return state.gear;
    }
    if rpm > UPSHIFT_RPM && state.gear < dl.gear_count() {
        state.gear += 1;
        state.shift_timer = SHIFT_TORQUE_HOLE;
        state.shift_lockout = SHIFT_LOCKOUT;
    } else if rpm < DOWNSHIFT_RPM && state.gear > 1 {
        state.gear -= 1;
        state.shift_timer = SHIFT_TORQUE_HOLE;
        state.shift_lockout = SHIFT_LOCKOUT;
    }
    state.gear
}

/// Advance the brake actuator: commands pass through a pure delay, then
/// the realized deceleration follows a first-order lag. Positive decel
/// commands are rejected.
pub fn brake_dynamics(
    cmd: (u8, f64),
    state: &mut PowertrainState,
    dt: f64,
) -> Result<(), TruckError> {
    let (mode, decel) = cmd;
    if decel > 0.0 {
        return Err(TruckError::InvalidInput(format!("positive decel command {decel}")));
    }
    state.brake_mode = mode;
    state.commanded_decel = if mode == 0 { 0.0 } else { decel };
    state.clock += dt;
    state.brake_queue.push_back((state.clock + BRAKE_DELAY, state.commanded_decel));
    // newest command whose delay has elapsed
    let mut effective = None;
    while let Some(&(t, v)) = state.brake_queue.front() {
        if t <= state.clock {
            effective = Some(v);
            state.brake_queue.pop_front();
        } else {
            break;
        }
    }
    if let Some(target) = effective {
        state.realized_decel += (target - state.realized_decel) * (1.0 - (-dt / BRAKE_TAU).exp());
    } else if state.brake_queue.len() > 1 {
        // still inside the initial dead time: hold
    }
    state.brake_pressure = BRAKE_PRESSURE_PER_DECEL * state.realized_decel.abs();
    Ok(())
}

/// Net longitudinal force balance and an RK4 step of `(s, v)`:
///   v' = (F_drive - F_brake - M g sin(theta) - mu(v) M g cos(theta)
///         - 0.5 rho A Cd v^2) / M
/// with drive force frozen over the step and grade sampled along it.
#[allow(clippy::too_many_arguments)]
pub fn longitudinal_step(
    s: f64,
    v: f64,
    drive_force: f64,
    brake_force: f64,
    grade_at: &dyn Fn(f64) -> f64,
    p: &TruckParams,
    dt: f64,
) -> (f64, f64) {
    let accel = |s_q: f64, v_q: f64| -> f64 {
        let theta = grade_at(s_q);
        let grade_force = p.m_total * GRAVITY * theta.sin();
        let rolling = p.rolling_friction(v_q.max(0.0)) * p.m_total * GRAVITY * theta.cos();
        if v_q <= 0.0 {
            // static regime: rolling resistance and brakes hold the rig
            let net = drive_force - grade_force;
            let holding = rolling + brake_force;
            if net.abs() <= holding {
                return 0.0;
            }
            return (net - holding * net.signum()) / p.m_total;
        }
        let drag = 0.5 * p.rho_air * p.frontal_area * p.drag_coeff * v_q * v_q;
        (drive_force - brake_force - grade_force - rolling - drag) / p.m_total
    };
    let k1v = accel(s, v);
    let k1s = v;
    let k2v = accel(s + 0.5 * dt * k1s, v + 0.5 * dt * k1v);
    let k2s = v + 0.5 * dt * k1v;
    let k3v = accel(s + 0.5 * dt * k2s, v + 0.5 * dt * k2v);
    let k3s = v + 0.5 * dt * k2v;
    let k4v = accel(s + dt * k3s, v + dt * k3v);
    let k4s = v + dt * k3v;
    let mut v_next = v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    let s_next = s + dt / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s);
    if v_next < 0.0 {
        v_next = 0.0;
    }
    (s_next, v_next)
}

/// Terminal speed at a fixed drive force on flat ground: the root of the
/// force balance, by bisection. Test oracle for the longitudinal model.
pub fn terminal_speed(drive_force: f64, p: &TruckParams) -> f64 {
    let net = |v: f64| {
        drive_force
            - p.rolling_friction(v) * p.m_total * GRAVITY
            - 0.5 * p.rho_air * p.frontal_area * p.drag_coeff * v * v
    };
    let (mut lo, mut hi) = (0.0, 80.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if net(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Convenience: drive force at the wheels for an engine torque in a gear.
pub fn drive_force(engine_torque: f64, gear: u8, dl: &Driveline, p: &TruckParams) -> f64 {
    p.efficiency * engine_torque * dl.ratio(gear) / p.wheel_radius
}
