//! The solved speed profile: distance-indexed reference speeds over the
//! Hermite node vector, with an allocation-free logarithmic query.

use super::PccError;

/// Node vector `[s_1, v_1, ..., s_n, v_n]` on a uniform time grid,
/// immutable after solving.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedProfile {
    /// (position, speed) per node.
    nodes: Vec<(f64, f64)>,
    /// Element duration, s.
    dt: f64,
    v_max: f64,
}

impl SpeedProfile {
    pub fn from_nodes(x: &[f64], dt: f64, v_max: f64) -> Result<Self, PccError> {
        if x.len() < 6 || x.len() % 2 != 0 {
            return Err(PccError::Invalid(format!("node vector length {}", x.len())));
        }
        let nodes: Vec<(f64, f64)> = x.chunks_exact(2).map(|c| (c[0], c[1])).collect();
        for (i, w) in nodes.windows(2).enumerate() {
            if w[1].0 <= w[0].0 {
                return Err(PccError::Invalid(format!("positions not increasing at node {}", i + 1)));
            }
        }
        for (i, (_, v)) in nodes.iter().enumerate() {
            if !(*v >= -1e-9 && *v <= v_max + 1e-9) {
                return Err(PccError::Invalid(format!("speed {v} out of [0, {v_max}] at node {i}")));
            }
        }
        Ok(Self { nodes, dt, v_max })
    }

    /// Constant-speed profile covering `[s0, s0 + v_ref * horizon]`.
    pub fn constant(v_ref: f64, horizon: f64, s0: f64, n: usize) -> Self {
        let dt = horizon / (n - 1) as f64;
        let nodes = (0..n).map(|i| (s0 + v_ref * dt * i as f64, v_ref)).collect();
        Self { nodes, dt, v_max: v_ref }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn position_at_node(&self, i: usize) -> f64 {
        self.nodes[i].0
    }

    pub fn speed_at_node(&self, i: usize) -> f64 {
        self.nodes[i].1
    }

    pub fn start_position(&self) -> f64 {
        self.nodes[0].0
    }

    pub fn end_position(&self) -> f64 {
        self.nodes[self.nodes.len() - 1].0
    }

    /// Reference speed at position `s`. Within an element the profile is
    /// the cubic Hermite reconstruction in time, inverted for `s` by a
    /// guarded Newton iteration; out-of-range queries clamp to the nearest
    /// endpoint speed with a warning. O(log n), allocation free.
    pub fn query_reference_speed(&self, s: f64) -> f64 {
        let first = self.nodes[0];
        let last = self.nodes[self.nodes.len() - 1];
        if s < first.0 {
            log::warn!("speed query at s={s} before profile start {}; clamping", first.0);
            return first.1;
        }
        if s > last.0 {
            log::warn!("speed query at s={s} beyond profile end {}; clamping", last.0);
            return last.1;
        }
        // element index by binary search on node positions
        let idx = self.nodes.partition_point(|(p, _)| *p <= s);
        if idx == 0 {
            return first.1;
        }
        if idx >= self.nodes.len() {
            return last.1;
        }
        let (s_a, v_a) = self.nodes[idx - 1];
        let (s_b, v_b) = self.nodes[idx];
        if s == s_a {
            return v_a.clamp(0.0, self.v_max);
        }
        let h = self.dt;
        let pos = |t: f64| {
            let t2 = t * t;
            let t3 = t2 * t;
            (1.0 - 3.0 * t2 + 2.0 * t3) * s_a
                + h * (t - 2.0 * t2 + t3) * v_a
                + (3.0 * t2 - 2.0 * t3) * s_b
                + h * (-t2 + t3) * v_b
        };
        let vel = |t: f64| {
            let t2 = t * t;
            ((-6.0 * t + 6.0 * t2) / h) * s_a
                + (1.0 - 4.0 * t + 3.0 * t2) * v_a
                + ((6.0 * t - 6.0 * t2) / h) * s_b
                + (-2.0 * t + 3.0 * t2) * v_b
        };
        // Newton with bisection safeguard on pos(t) = s, t in [0, 1]
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut t = (s - s_a) / (s_b - s_a);
        for _ in 0..60 {
            let f = pos(t) - s;
            if f.abs() < 1e-10 {
                break;
            }
            if f > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let dp = vel(t) * h;
            let newton = if dp.abs() > 1e-12 { t - f / dp } else { f64::NAN };
            t = if newton.is_finite() && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        vel(t).clamp(0.0, self.v_max)
    }

    /// Serialize as CSV rows `t,s,v`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,s,v\n");
        for (i, (s, v)) in self.nodes.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", i as f64 * self.dt, s, v));
        }
        out
    }

    /// Parse the CSV emitted by [`Self::to_csv`]. The speed cap is taken
    /// as the largest speed in the file.
    pub fn from_csv(text: &str) -> Result<Self, PccError> {
        let mut nodes = Vec::new();
        let mut dt = 0.0;
        for (i, line) in text.lines().enumerate() {
            if i == 0 {
                if line.trim() != "t,s,v" {
                    return Err(PccError::Format(format!("unexpected header '{line}'")));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split(',');
            let t: f64 = parse(it.next(), i)?;
            let s: f64 = parse(it.next(), i)?;
            let v: f64 = parse(it.next(), i)?;
            if i == 2 {
                dt = t;
            }
            nodes.push((s, v));
        }
        if nodes.len() < 2 {
            return Err(PccError::Format("profile needs at least two rows".into()));
        }
        let v_max = nodes.iter().map(|(_, v)| *v).fold(0.0f64, f64::max);
        Ok(Self { nodes, dt, v_max })
    }
}

fn parse(field: Option<&str>, line: usize) -> Result<f64, PccError> {
    field
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| PccError::Format(format!("bad number on line {line}")))
}
