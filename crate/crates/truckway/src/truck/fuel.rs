//! Engine power demand and the fuel-rate lookup over the bundled BSFC
//! surface.

use super::{TruckParams, GRAVITY};

const BSFC_CSV: &str = include_str!("../../data/bsfc_map.csv");

/// Brake-specific fuel consumption surface, bilinear over a regular
/// (rpm, torque) grid loaded from the bundled data file. The surface is
/// a convex bowl with its minimum in the interior.
#[derive(Debug, Clone)]
pub struct FuelMap {
    rpms: Vec<f64>,
    torques: Vec<f64>,
    /// bsfc[rpm_idx][torque_idx], g/kWh
    bsfc: Vec<Vec<f64>>,
}

impl FuelMap {
    pub fn bundled() -> Self {
        let mut rpms: Vec<f64> = Vec::new();
        let mut torques: Vec<f64> = Vec::new();
        let mut cells: Vec<(f64, f64, f64)> = Vec::new();
        for line in BSFC_CSV.lines().skip(1).filter(|l| !l.trim().is_empty()) {
            let mut it = line.split(',');
            let rpm: f64 = it.next().unwrap().parse().expect("bundled bsfc rpm");
            let tq: f64 = it.next().unwrap().parse().expect("bundled bsfc torque");
            let b: f64 = it.next().unwrap().parse().expect("bundled bsfc value");
            if rpms.last() != Some(&rpm) && !rpms.contains(&rpm) {
                rpms.push(rpm);
            }
            if !torques.contains(&tq) {
                torques.push(tq);
            }
            cells.push((rpm, tq, b));
        }
        let mut bsfc = vec![vec![0.0; torques.len()]; rpms.len()];
        for (rpm, tq, b) in cells {
            let i = rpms.iter().position(|r| *r == rpm).expect("grid rpm");
            let j = torques.iter().position(|t| *t == tq).expect("grid torque");
            bsfc[i][j] = b;
        }
        Self { rpms, torques, bsfc }
    }

    /// Flat surface, for unit-arithmetic tests.
    pub fn uniform(value: f64) -> Self {
        Self {
            rpms: vec![600.0, 2100.0],
            torques: vec![0.0, 2500.0],
            bsfc: vec![vec![value; 2]; 2],
        }
    }

    /// Bilinear BSFC lookup, clamped to the grid edges.
    pub fn bsfc(&self, rpm: f64, torque: f64) -> f64 {
        let (i, u) = locate(&self.rpms, rpm);
        let (j, v) = locate(&self.torques, torque);
        let b00 = self.bsfc[i][j];
        let b01 = self.bsfc[i][j + 1];
        let b10 = self.bsfc[i + 1][j];
        let b11 = self.bsfc[i + 1][j + 1];
        b00 * (1.0 - u) * (1.0 - v) + b10 * u * (1.0 - v) + b01 * (1.0 - u) * v + b11 * u * v
    }
}

fn locate(grid: &[f64], x: f64) -> (usize, f64) {
    let n = grid.len();
    if x <= grid[0] {
        return (0, 0.0);
    }
    if x >= grid[n - 1] {
        return (n - 2, 1.0);
    }
    let i = grid.partition_point(|g| *g <= x) - 1;
    (i, (x - grid[i]) / (grid[i + 1] - grid[i]))
}

/// Engine power demand (kW) from the longitudinal state:
///   p_e = v * ((sin(theta) + mu(v)) g M + 0.5 rho A Cd v^2 + a M) / eta
/// clamped to `[0, p_e_max]`; negative demand means coasting.
pub fn engine_power(v: f64, accel: f64, grade: f64, p: &TruckParams) -> f64 {
    debug_assert!(v >= 0.0);
    let force = (grade.sin() + p.rolling_friction(v)) * GRAVITY * p.m_total
        + 0.5 * p.rho_air * p.frontal_area * p.drag_coeff * v * v
        + accel * p.m_total;
    let watts = v * force / p.efficiency;
    (watts / 1000.0).clamp(0.0, p.engine_power_max_kw)
}

/// Mass fuel flow (g/s) for an engine power at an engine speed:
/// BSFC(rpm, torque) * p_e / 3600, floored at the idle fuel rate. The
/// torque coordinate of the lookup is the torque implied by the power at
/// that speed.
pub fn fuel_rate(p_e_kw: f64, rpm: f64, map: &FuelMap, p: &TruckParams) -> f64 {
    debug_assert!(p_e_kw >= 0.0);
    if p_e_kw <= 0.0 {
        return p.idle_fuel_rate;
    }
    let omega = rpm.max(1.0) * 2.0 * std::f64::consts::PI / 60.0;
    let torque = p_e_kw * 1000.0 / omega;
    let flow = map.bsfc(rpm, torque) * p_e_kw / 3600.0;
    flow.max(p.idle_fuel_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_speed_zero_power() {
        let p = TruckParams::full_load();
        assert_eq!(engine_power(0.0, 0.0, 0.0, &p), 0.0);
    }

    #[test]
    fn hand_evaluated_cruise_power() {
        // flat, 20 m/s, mu=0.007, A=8, Cd=0.6, rho=1.2, M=55000, eta=0.92:
        //   force = 0.007*9.81*55000 + 0.5*1.2*8*0.6*400 = 3776.85 + 1152 = 4928.85 N
        //   p_e   = 20*4928.85/0.92 = 107148.913... W
        let p = TruckParams::full_load();
        let kw = engine_power(20.0, 0.0, 0.0, &p);
        assert_relative_eq!(kw, 107.14891304347827, max_relative = 1e-12);
    }

    #[test]
    fn steep_downhill_coasts_to_zero() {
        let p = TruckParams::full_load();
        assert_eq!(engine_power(20.0, 0.0, -0.06, &p), 0.0);
    }

    #[test]
    fn fuel_unit_arithmetic() {
        // 100 kW at a flat 200 g/kWh surface -> 5.555... g/s
        let p = TruckParams::full_load();
        let map = FuelMap::uniform(200.0);
        assert_relative_eq!(fuel_rate(100.0, 1300.0, &map, &p), 200.0 * 100.0 / 3600.0, max_relative = 1e-12);
    }

    #[test]
    fn idle_floor_at_zero_power() {
        let p = TruckParams::full_load();
        let map = FuelMap::bundled();
        assert_eq!(fuel_rate(0.0, 800.0, &map, &p), p.idle_fuel_rate);
    }

    #[test]
    fn surface_minimum_is_interior() {
        let map = FuelMap::bundled();
        let mut best = (0.0, 0.0, f64::INFINITY);
        for i in 0..map.rpms.len() {
            for j in 0..map.torques.len() {
                if map.bsfc[i][j] < best.2 {
                    best = (map.rpms[i], map.torques[j], map.bsfc[i][j]);
                }
            }
        }
        let (rpm, tq, val) = best;
        assert!(rpm > map.rpms[0] && rpm < *map.rpms.last().unwrap());
        assert!(tq > map.torques[0] && tq < *map.torques.last().unwrap());
        assert!((185.0..200.0).contains(&val), "bowl minimum {val}");
    }

    #[test]
    fn fuel_monotone_in_power_at_fixed_rpm() {
        let p = TruckParams::full_load();
        let map = FuelMap::bundled();
        for rpm in [700.0, 1000.0, 1300.0, 1700.0, 2000.0] {
            let mut prev = 0.0;
            let mut kw = 1.0;
            while kw <= 340.0 {
                let f = fuel_rate(kw, rpm, &map, &p);
                assert!(f >= prev, "fuel rate dropped at rpm={rpm} kw={kw}");
                prev = f;
                kw += 1.0;
            }
        }
    }
}
