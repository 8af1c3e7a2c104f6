//! Road-network representation: lanes, slope profiles, centerline
//! discretization, plus readers for an OpenDRIVE subset and a native
//! JSON map format.

mod format;
mod opendrive;

pub use format::{read_native_map, write_native_map};
pub use opendrive::parse_opendrive_subset;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default lane width in meters (standard highway lane).
pub const DEFAULT_LANE_WIDTH: f64 = 3.75;

#[derive(Debug, Error)]
pub enum MapError {
    #[error("XML parse error at line {line}, column {col}: {msg}")]
    Xml { line: u32, col: u32, msg: String },
    #[error("no drivable lanes found in document")]
    NoDrivableLanes,
    #[error("invalid map: {0}")]
    Invalid(String),
    #[error("station {s} outside road extent [0, {length}]")]
    OutOfRange { s: f64, length: f64 },
    #[error("unknown lane id {0}")]
    UnknownLane(i32),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("native map format error: {0}")]
    Format(String),
}

/// A single lane, described by its lateral placement relative to the
/// road reference line. Positive offsets are to the left of the
/// reference line when looking along increasing station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lane {
    pub id: i32,
    pub width: f64,
    pub center_offset: f64,
}

/// One knot of the elevation profile. The cubic
/// `a + b*ds + c*ds^2 + d*ds^3` (with `ds = s - knot.s`) describes the
/// elevation from this knot up to the next one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElevationKnot {
    pub s: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

/// Piecewise-cubic longitudinal elevation profile. Piecewise-linear
/// profiles are the special case `c = d = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeProfile {
    knots: Vec<ElevationKnot>,
}

impl SlopeProfile {
    /// Flat profile: zero elevation everywhere.
    pub fn flat() -> Self {
        Self {
            knots: vec![ElevationKnot { s: 0.0, a: 0.0, b: 0.0, c: 0.0, d: 0.0 }],
        }
    }

    /// Profile from explicit cubic segments. Knots must start at 0 and be
    /// strictly increasing in `s`.
    pub fn from_knots(knots: Vec<ElevationKnot>) -> Result<Self, MapError> {
        if knots.is_empty() {
            return Err(MapError::Invalid("elevation profile needs at least one knot".into()));
        }
        if knots[0].s != 0.0 {
            return Err(MapError::Invalid("first elevation knot must be at s = 0".into()));
        }
        for w in knots.windows(2) {
            if w[1].s <= w[0].s {
                return Err(MapError::Invalid(format!(
                    "elevation knots not strictly increasing at s = {}",
                    w[1].s
                )));
            }
        }
        Ok(Self { knots })
    }

    /// Piecewise-linear profile through `(s, elevation)` points.
    pub fn from_linear_knots(points: &[(f64, f64)]) -> Result<Self, MapError> {
        if points.len() < 2 {
            return Err(MapError::Invalid("linear profile needs at least two points".into()));
        }
        let mut knots = Vec::with_capacity(points.len());
        for i in 0..points.len() - 1 {
            let (s0, e0) = points[i];
            let (s1, e1) = points[i + 1];
            if s1 <= s0 {
                return Err(MapError::Invalid("profile points not increasing".into()));
            }
            knots.push(ElevationKnot { s: s0, a: e0, b: (e1 - e0) / (s1 - s0), c: 0.0, d: 0.0 });
        }
        Self::from_knots(knots)
    }

    /// Constant-grade ramp: elevation = slope * s.
    pub fn linear_ramp(slope: f64) -> Self {
        Self {
            knots: vec![ElevationKnot { s: 0.0, a: 0.0, b: slope, c: 0.0, d: 0.0 }],
        }
    }

    /// Sinusoidal hill chain `amplitude * sin(2*pi*s/wavelength)`, built as
    /// cubic Hermite segments with knots every 1/16 wavelength so that
    /// extrema fall exactly on knots with zero gradient.
    pub fn sinusoidal(amplitude: f64, wavelength: f64, length: f64) -> Self {
        let step = wavelength / 16.0;
        let n = (length / step).ceil() as usize;
        let omega = 2.0 * std::f64::consts::PI / wavelength;
        let mut knots = Vec::with_capacity(n);
        for i in 0..n {
            let s0 = i as f64 * step;
            let h = step;
            let e0 = amplitude * (omega * s0).sin();
            let e1 = amplitude * (omega * (s0 + h)).sin();
            let g0 = amplitude * omega * (omega * s0).cos();
            let g1 = amplitude * omega * (omega * (s0 + h)).cos();
            // cubic Hermite -> power basis on [0, h]
            let a = e0;
            let b = g0;
            let c = (3.0 * (e1 - e0) / h - 2.0 * g0 - g1) / h;
            let d = (2.0 * (e0 - e1) / h + g0 + g1) / (h * h);
            knots.push(ElevationKnot { s: s0, a, b, c, d });
        }
        Self { knots }
    }

    fn segment_at(&self, s: f64) -> &ElevationKnot {
        // value at a knot comes from the segment to its right
        let idx = self.knots.partition_point(|k| k.s <= s);
        &self.knots[idx.saturating_sub(1)]
    }

    /// Elevation in meters at station `s`.
    pub fn elevation(&self, s: f64) -> f64 {
        let k = self.segment_at(s);
        let ds = s - k.s;
        k.a + ds * (k.b + ds * (k.c + ds * k.d))
    }

    /// d(elevation)/ds at station `s`.
    pub fn elevation_slope(&self, s: f64) -> f64 {
        let k = self.segment_at(s);
        let ds = s - k.s;
        k.b + ds * (2.0 * k.c + ds * 3.0 * k.d)
    }

    /// d²(elevation)/ds² at station `s`.
    pub fn elevation_curvature(&self, s: f64) -> f64 {
        let k = self.segment_at(s);
        let ds = s - k.s;
        2.0 * k.c + 6.0 * k.d * ds
    }

    /// Grade angle θ(s) = atan(d elevation/ds).
    pub fn grade(&self, s: f64) -> f64 {
        self.elevation_slope(s).atan()
    }

    /// dθ/ds, used by gradient-based planners.
    pub fn grade_derivative(&self, s: f64) -> f64 {
        let e1 = self.elevation_slope(s);
        self.elevation_curvature(s) / (1.0 + e1 * e1)
    }

    pub fn knots(&self) -> &[ElevationKnot] {
        &self.knots
    }
}

/// Planar reference-line geometry segment (OpenDRIVE subset).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GeometryKind {
    Line,
    Arc { curvature: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometrySegment {
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub hdg: f64,
    pub length: f64,
    pub kind: GeometryKind,
}

impl GeometrySegment {
    /// Reference-line pose at `ds` meters into this segment.
    fn pose(&self, ds: f64) -> (f64, f64, f64) {
        match self.kind {
            GeometryKind::Line => (
                self.x + ds * self.hdg.cos(),
                self.y + ds * self.hdg.sin(),
                self.hdg,
            ),
            GeometryKind::Arc { curvature } => {
                let h = self.hdg + curvature * ds;
                (
                    self.x + ((h.sin() - self.hdg.sin()) / curvature),
                    self.y - ((h.cos() - self.hdg.cos()) / curvature),
                    h,
                )
            }
        }
    }
}

/// A pose sample on a lane centerline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub s: f64,
}

/// Immutable road network: parallel lanes over a shared longitudinal
/// extent `[0, length]`, a planar reference line, and an elevation
/// profile. Lanes are ordered left to right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadNetwork {
    lanes: Vec<Lane>,
    length: f64,
    elevation: SlopeProfile,
    geometry: Vec<GeometrySegment>,
}

impl RoadNetwork {
    pub fn new(
        lanes: Vec<Lane>,
        length: f64,
        elevation: SlopeProfile,
        geometry: Vec<GeometrySegment>,
    ) -> Result<Self, MapError> {
        if lanes.is_empty() {
            return Err(MapError::NoDrivableLanes);
        }
        if !(length > 0.0) {
            return Err(MapError::Invalid(format!("non-positive road length {length}")));
        }
        for lane in &lanes {
            if !(lane.width > 0.0) {
                return Err(MapError::Invalid(format!("lane {} has non-positive width", lane.id)));
            }
        }
        for w in lanes.windows(2) {
            if w[1].center_offset >= w[0].center_offset {
                return Err(MapError::Invalid(
                    "lanes must be ordered left to right (decreasing center offset)".into(),
                ));
            }
        }
        let geometry = if geometry.is_empty() {
            vec![GeometrySegment { s: 0.0, x: 0.0, y: 0.0, hdg: 0.0, length, kind: GeometryKind::Line }]
        } else {
            geometry
        };
        Ok(Self { lanes, length, elevation, geometry })
    }

    /// Parallel straight lanes of default width sharing the given slope.
    pub fn straight_highway(
        lane_count: usize,
        length: f64,
        slope: SlopeProfile,
    ) -> Result<Self, MapError> {
        if lane_count == 0 {
            return Err(MapError::Invalid("lane_count must be at least 1".into()));
        }
        if !(length > 0.0) {
            return Err(MapError::Invalid(format!("non-positive road length {length}")));
        }
        let w = DEFAULT_LANE_WIDTH;
        let lanes = (0..lane_count)
            .map(|k| Lane {
                id: k as i32,
                width: w,
                center_offset: ((lane_count - 1) as f64 / 2.0 - k as f64) * w,
            })
            .collect();
        Self::new(lanes, length, slope, Vec::new())
    }

    pub fn lanes(&self) -> &[Lane] {
        &self.lanes
    }

    pub fn lane_count(&self) -> usize {
        self.lanes.len()
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn elevation(&self) -> &SlopeProfile {
        &self.elevation
    }

    pub fn geometry(&self) -> &[GeometrySegment] {
        &self.geometry
    }

    /// Index of the lane with the given id.
    pub fn lane_index(&self, id: i32) -> Result<usize, MapError> {
        self.lanes
            .iter()
            .position(|l| l.id == id)
            .ok_or(MapError::UnknownLane(id))
    }

    /// Lateral offset of the lane centerline from the reference line.
    pub fn lane_center(&self, index: usize) -> f64 {
        self.lanes[index].center_offset
    }

    /// Index of the lane whose center is nearest to lateral offset `y`.
    pub fn nearest_lane(&self, y: f64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, lane) in self.lanes.iter().enumerate() {
            let d = (lane.center_offset - y).abs();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Grade angle at station `s`.
    pub fn slope_at(&self, s: f64) -> Result<f64, MapError> {
        if !(0.0..=self.length).contains(&s) {
            return Err(MapError::OutOfRange { s, length: self.length });
        }
        Ok(self.elevation.grade(s))
    }

    /// Reference-line pose at station `s`, offset laterally by `offset`
    /// (positive left).
    pub fn pose_at(&self, s: f64, offset: f64) -> (f64, f64, f64) {
        let idx = self.geometry.partition_point(|g| g.s <= s);
        let seg = &self.geometry[idx.saturating_sub(1)];
        let (x, y, h) = seg.pose(s - seg.s);
        (x - offset * h.sin(), y + offset * h.cos(), h)
    }

    /// Centerline waypoints for a lane, spaced `ds` apart from `s0` with
    /// the final point exactly at `s1`.
    pub fn discretize_centerline(
        &self,
        lane_id: i32,
        s0: f64,
        s1: f64,
        ds: f64,
    ) -> Result<Vec<Waypoint>, MapError> {
        let idx = self.lane_index(lane_id)?;
        if !(s0 < s1) || !(ds > 0.0) {
            return Err(MapError::Invalid(format!("bad discretization range [{s0}, {s1}] ds={ds}")));
        }
        if s0 < 0.0 || s1 > self.length {
            return Err(MapError::OutOfRange { s: s1, length: self.length });
        }
        let offset = self.lanes[idx].center_offset;
        let span = s1 - s0;
        let whole = (span / ds).floor() as usize;
        let mut stations: Vec<f64> = (0..=whole).map(|i| s0 + i as f64 * ds).collect();
        if s1 - stations[stations.len() - 1] > 1e-12 {
            stations.push(s1);
        } else {
            *stations.last_mut().expect("nonempty") = s1;
        }
        Ok(stations
            .into_iter()
            .map(|s| {
                let (x, y, heading) = self.pose_at(s, offset);
                Waypoint { x, y, heading, s }
            })
            .collect())
    }
}

/// Build a straight multi-lane highway (the test-site stand-in helper).
pub fn build_straight_highway(
    lane_count: usize,
    length: f64,
    slope: SlopeProfile,
) -> Result<RoadNetwork, MapError> {
    RoadNetwork::straight_highway(lane_count, length, slope)
}

/// Grade angle lookup on a network.
pub fn slope_at(net: &RoadNetwork, s: f64) -> Result<f64, MapError> {
    net.slope_at(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn straight_highway_basic() {
        let net = build_straight_highway(2, 15_000.0, SlopeProfile::flat()).unwrap();
        assert_eq!(net.lane_count(), 2);
        assert_eq!(net.length(), 15_000.0);
        assert_eq!(net.lane_center(0), DEFAULT_LANE_WIDTH / 2.0);
        assert_eq!(net.lane_center(1), -DEFAULT_LANE_WIDTH / 2.0);

        let single = build_straight_highway(1, 100.0, SlopeProfile::flat()).unwrap();
        assert_eq!(single.lane_count(), 1);
        assert_eq!(single.lane_center(0), 0.0);
    }

    #[test]
    fn straight_highway_rejects_bad_dims() {
        assert!(build_straight_highway(0, 100.0, SlopeProfile::flat()).is_err());
        assert!(build_straight_highway(2, 0.0, SlopeProfile::flat()).is_err());
        assert!(build_straight_highway(2, -5.0, SlopeProfile::flat()).is_err());
    }

    #[test]
    fn flat_profile_grade_zero() {
        let net = build_straight_highway(2, 1000.0, SlopeProfile::flat()).unwrap();
        for s in [0.0, 1.0, 500.0, 1000.0] {
            assert_eq!(slope_at(&net, s).unwrap(), 0.0);
        }
        assert!(slope_at(&net, -1.0).is_err());
        assert!(slope_at(&net, 1000.1).is_err());
    }

    #[test]
    fn linear_ramp_grade() {
        // closed form: atan(0.02)
        let net = build_straight_highway(1, 1000.0, SlopeProfile::linear_ramp(0.02)).unwrap();
        let expected = 0.02f64.atan();
        assert_relative_eq!(expected, 0.019997, epsilon = 1e-6);
        for s in [0.0, 250.0, 999.0] {
            assert_relative_eq!(slope_at(&net, s).unwrap(), expected, epsilon = 1e-15);
        }
    }

    #[test]
    fn knot_tie_break_uses_right_segment() {
        let profile =
            SlopeProfile::from_linear_knots(&[(0.0, 0.0), (100.0, 1.0), (200.0, 1.0)]).unwrap();
        // left segment slope 0.01, right segment slope 0
        assert_relative_eq!(profile.grade(99.999), 0.01f64.atan(), epsilon = 1e-9);
        assert_eq!(profile.grade(100.0), 0.0);
    }

    #[test]
    fn sinusoid_crest_grade_zero() {
        let net = build_straight_highway(3, 1000.0, SlopeProfile::sinusoidal(30.0, 1000.0, 1000.0))
            .unwrap();
        // crest at s = wavelength/4 = 250; a knot sits there (step = 62.5) and
        // carries the analytic derivative cos(pi/2), zero up to float residue
        assert!(slope_at(&net, 250.0).unwrap().abs() < 1e-15);
        // hermite interpolation tracks the sinusoid closely between knots
        let omega = 2.0 * std::f64::consts::PI / 1000.0;
        for s in [100.0, 333.0, 777.0] {
            let want = (30.0 * omega * (omega * s).cos()).atan();
            assert_relative_eq!(slope_at(&net, s).unwrap(), want, epsilon = 1e-3);
        }
    }

    #[test]
    fn discretize_counts_and_spacing() {
        let net = build_straight_highway(2, 100.0, SlopeProfile::flat()).unwrap();
        let wps = net.discretize_centerline(0, 0.0, 10.0, 1.0).unwrap();
        assert_eq!(wps.len(), 11);
        for w in &wps {
            assert_eq!(w.heading, 0.0);
            assert_eq!(w.y, DEFAULT_LANE_WIDTH / 2.0);
        }
        for pair in wps.windows(2) {
            assert!((pair[1].s - pair[0].s - 1.0).abs() < 1e-9);
            assert!(pair[1].s > pair[0].s);
        }
        // remainder adds one final waypoint exactly at s1
        let wps = net.discretize_centerline(0, 0.0, 10.5, 1.0).unwrap();
        assert_eq!(wps.len(), 12);
        assert_eq!(wps.last().unwrap().s, 10.5);

        assert!(net.discretize_centerline(7, 0.0, 10.0, 1.0).is_err());
    }

    #[test]
    fn discretize_matches_arc_length() {
        // arc: waypoint chord lengths integrate to the station span
        let geom = vec![GeometrySegment {
            s: 0.0,
            x: 0.0,
            y: 0.0,
            hdg: 0.0,
            length: 500.0,
            kind: GeometryKind::Arc { curvature: 1.0 / 400.0 },
        }];
        let lanes = vec![Lane { id: 0, width: 3.75, center_offset: 0.0 }];
        let net = RoadNetwork::new(lanes, 500.0, SlopeProfile::flat(), geom).unwrap();
        let wps = net.discretize_centerline(0, 0.0, 400.0, 0.5).unwrap();
        assert_eq!(wps.len(), 801);
        let chord: f64 = wps
            .windows(2)
            .map(|p| ((p[1].x - p[0].x).powi(2) + (p[1].y - p[0].y).powi(2)).sqrt())
            .sum();
        // chord sum underestimates arc length by O(ds^2 * curvature^2)
        assert_relative_eq!(chord, 400.0, epsilon = 1e-3);
    }

    #[test]
    fn lane_offset_applies_laterally() {
        let net = build_straight_highway(1, 100.0, SlopeProfile::flat()).unwrap();
        let lanes = vec![Lane { id: 4, width: 3.75, center_offset: 3.75 }];
        let offset_net = RoadNetwork::new(lanes, 100.0, SlopeProfile::flat(), Vec::new()).unwrap();
        let base = net.discretize_centerline(0, 0.0, 50.0, 5.0).unwrap();
        let moved = offset_net.discretize_centerline(4, 0.0, 50.0, 5.0).unwrap();
        for (a, b) in base.iter().zip(&moved) {
            assert_eq!(b.y - a.y, 3.75);
            assert_eq!(a.x, b.x);
        }
    }
}
