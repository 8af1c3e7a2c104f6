//! Reader for an OpenDRIVE (.xodr) subset: `line`/`arc` geometries, the
//! `elevationProfile`, and driving lanes of the first lane section.
//! Anything else in the document is skipped and reported in the warning
//! list rather than failing the parse.

use super::{ElevationKnot, GeometryKind, GeometrySegment, Lane, MapError, RoadNetwork, SlopeProfile};

/// Parse an OpenDRIVE document. Returns the network plus a list of
/// warnings for ignored or suspicious content.
pub fn parse_opendrive_subset(xml_text: &str) -> Result<(RoadNetwork, Vec<String>), MapError> {
    let doc = roxmltree::Document::parse(xml_text).map_err(|e| {
        let pos = e.pos();
        MapError::Xml { line: pos.row, col: pos.col, msg: e.to_string() }
    })?;
    let mut warnings = Vec::new();
    let root = doc.root_element();
    if root.tag_name().name() != "OpenDRIVE" {
        warnings.push(format!("root element is <{}>, expected <OpenDRIVE>", root.tag_name().name()));
    }

    for junction in root.children().filter(|n| n.has_tag_name("junction")) {
        warnings.push(format!(
            "ignoring <junction> id={}",
            junction.attribute("id").unwrap_or("?")
        ));
    }
    for other in root.children().filter(|n| {
        n.is_element() && !matches!(n.tag_name().name(), "road" | "junction" | "header")
    }) {
        warnings.push(format!("ignoring unsupported element <{}>", other.tag_name().name()));
    }

    let mut roads = root.children().filter(|n| n.has_tag_name("road"));
    let road = roads.next().ok_or_else(|| MapError::Invalid("document has no <road>".into()))?;
    for extra in roads {
        warnings.push(format!(
            "ignoring additional <road> id={}",
            extra.attribute("id").unwrap_or("?")
        ));
    }

    let length = attr_f64(&road, "length")?;

    // plan view geometry
    let mut geometry = Vec::new();
    if let Some(plan) = road.children().find(|n| n.has_tag_name("planView")) {
        for geo in plan.children().filter(|n| n.has_tag_name("geometry")) {
            let s = attr_f64(&geo, "s")?;
            let x = attr_f64(&geo, "x")?;
            let y = attr_f64(&geo, "y")?;
            let hdg = attr_f64(&geo, "hdg")?;
            let seg_len = attr_f64(&geo, "length")?;
            let shape = geo.children().find(|n| n.is_element());
            let kind = match shape.map(|n| n.tag_name().name()) {
                Some("line") | None => GeometryKind::Line,
                Some("arc") => {
                    let arc = shape.expect("checked above");
                    GeometryKind::Arc { curvature: attr_f64(&arc, "curvature")? }
                }
                Some(other) => {
                    warnings.push(format!(
                        "unsupported geometry <{other}> at s={s}; treating as straight line"
                    ));
                    GeometryKind::Line
                }
            };
            geometry.push(GeometrySegment { s, x, y, hdg, length: seg_len, kind });
        }
    }
    geometry.sort_by(|a, b| a.s.total_cmp(&b.s));

    // elevation
    let mut knots = Vec::new();
    if let Some(ep) = road.children().find(|n| n.has_tag_name("elevationProfile")) {
        for el in ep.children().filter(|n| n.has_tag_name("elevation")) {
            knots.push(ElevationKnot {
                s: attr_f64(&el, "s")?,
                a: attr_f64(&el, "a")?,
                b: attr_f64(&el, "b")?,
                c: attr_f64(&el, "c")?,
                d: attr_f64(&el, "d")?,
            });
        }
        knots.sort_by(|a, b| a.s.total_cmp(&b.s));
    }
    let elevation = if knots.is_empty() {
        SlopeProfile::flat()
    } else {
        if knots[0].s > 0.0 {
            knots.insert(0, ElevationKnot { s: 0.0, a: knots[0].a, b: 0.0, c: 0.0, d: 0.0 });
            warnings.push("elevation profile does not start at s=0; padded flat".into());
        }
        SlopeProfile::from_knots(knots)?
    };

    // lanes: first lane section only
    let lanes_node = road
        .children()
        .find(|n| n.has_tag_name("lanes"))
        .ok_or_else(|| MapError::Invalid("road has no <lanes>".into()))?;
    let mut sections = lanes_node.children().filter(|n| n.has_tag_name("laneSection"));
    let section = sections
        .next()
        .ok_or_else(|| MapError::Invalid("road has no <laneSection>".into()))?;
    if sections.next().is_some() {
        warnings.push("multiple lane sections; using the first".into());
    }

    // OpenDRIVE ids: positive left of reference, negative right, 0 center.
    let mut raw: Vec<(i32, f64)> = Vec::new(); // (id, width)
    for side in section.children().filter(|n| n.is_element()) {
        match side.tag_name().name() {
            "left" | "right" | "center" => {
                for lane in side.children().filter(|n| n.has_tag_name("lane")) {
                    let id: i32 = lane
                        .attribute("id")
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| MapError::Invalid("lane without integer id".into()))?;
                    let ty = lane.attribute("type").unwrap_or("none");
                    if id == 0 {
                        continue;
                    }
                    if ty != "driving" {
                        warnings.push(format!("ignoring lane {id} of type {ty}"));
                        continue;
                    }
                    let width = lane
                        .children()
                        .find(|n| n.has_tag_name("width"))
                        .map(|w| attr_f64(&w, "a"))
                        .transpose()?
                        .unwrap_or(super::DEFAULT_LANE_WIDTH);
                    raw.push((id, width));
                }
            }
            other => warnings.push(format!("ignoring <{other}> inside laneSection")),
        }
    }
    if raw.is_empty() {
        return Err(MapError::NoDrivableLanes);
    }

    // Order: leftmost first (largest positive id down to most negative).
    raw.sort_by(|a, b| b.0.cmp(&a.0));
    // Cumulative offsets out from the reference line on each side.
    let mut lanes = Vec::with_capacity(raw.len());
    let mut left_edge = 0.0; // running outer edge on the left side
    for &(id, width) in raw.iter().filter(|(id, _)| *id > 0).rev() {
        // innermost (+1) first when accumulating
        let center = left_edge + width / 2.0;
        left_edge += width;
        lanes.push(Lane { id, width, center_offset: center });
    }
    let mut right_edge = 0.0;
    for &(id, width) in raw.iter().filter(|(id, _)| *id < 0) {
        // raw is sorted descending, so right lanes come innermost (-1) first
        let center = right_edge - width / 2.0;
        right_edge -= width;
        lanes.push(Lane { id, width, center_offset: center });
    }
    lanes.sort_by(|a, b| b.center_offset.total_cmp(&a.center_offset));

    let net = RoadNetwork::new(lanes, length, elevation, geometry)?;

    // sanity bound on grade: flag, never fail
    let mut max_grade: f64 = 0.0;
    let samples = 200;
    for i in 0..=samples {
        let s = length * i as f64 / samples as f64;
        max_grade = max_grade.max(net.elevation().grade(s).abs());
    }
    if max_grade >= 0.15 {
        warnings.push(format!(
            "max |grade| {max_grade:.3} rad exceeds 0.15 sanity bound; review the elevation profile"
        ));
    }

    Ok((net, warnings))
}

fn attr_f64(node: &roxmltree::Node, name: &str) -> Result<f64, MapError> {
    node.attribute(name)
        .and_then(|v| v.parse::<f64>().ok())
        .ok_or_else(|| {
            MapError::Invalid(format!(
                "<{}> missing or non-numeric attribute '{name}'",
                node.tag_name().name()
            ))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn two_lane_doc(extra: &str, elevation: &str) -> String {
        format!(
            r#"<?xml version="1.0"?>
<OpenDRIVE>
  <header revMajor="1" revMinor="6"/>
  <road id="1" length="1000.0">
    <planView>
      <geometry s="0" x="0" y="0" hdg="0" length="1000.0"><line/></geometry>
    </planView>
    {elevation}
    <lanes>
      <laneSection s="0">
        <left>
          <lane id="1" type="driving"><width a="3.75"/></lane>
        </left>
        <center><lane id="0" type="none"/></center>
        <right>
          <lane id="-1" type="driving"><width a="3.75"/></lane>
        </right>
      </laneSection>
    </lanes>
  </road>
  {extra}
</OpenDRIVE>"#
        )
    }

    #[test]
    fn minimal_two_lane_road() {
        let (net, warnings) = parse_opendrive_subset(&two_lane_doc("", "")).unwrap();
        assert_eq!(net.lane_count(), 2);
        assert_eq!(net.length(), 1000.0);
        assert_eq!(net.slope_at(500.0).unwrap(), 0.0);
        assert!(warnings.is_empty(), "{warnings:?}");
        assert_eq!(net.lane_center(0), 3.75 / 2.0);
        assert_eq!(net.lane_center(1), -3.75 / 2.0);
    }

    #[test]
    fn elevation_record_grade() {
        let elev = r#"<elevationProfile><elevation s="0" a="0" b="0.02" c="0" d="0"/></elevationProfile>"#;
        let (net, _) = parse_opendrive_subset(&two_lane_doc("", elev)).unwrap();
        for s in [0.0, 333.0, 1000.0] {
            assert_relative_eq!(net.slope_at(s).unwrap(), 0.02f64.atan(), epsilon = 1e-15);
        }
    }

    #[test]
    fn junctions_are_tolerated_with_warning() {
        let with = parse_opendrive_subset(&two_lane_doc(r#"<junction id="7"/>"#, "")).unwrap();
        let without = parse_opendrive_subset(&two_lane_doc("", "")).unwrap();
        assert_eq!(with.0, without.0);
        assert!(!with.1.is_empty());
        assert!(with.1[0].contains("junction"));
    }

    #[test]
    fn malformed_xml_reports_position() {
        let err = parse_opendrive_subset("<OpenDRIVE><road id=</OpenDRIVE>").unwrap_err();
        match err {
            MapError::Xml { line, .. } => assert_eq!(line, 1),
            other => panic!("expected xml error, got {other}"),
        }
    }

    #[test]
    fn zero_drivable_lanes_is_semantic_error() {
        let doc = two_lane_doc("", "").replace("driving", "shoulder");
        match parse_opendrive_subset(&doc).unwrap_err() {
            MapError::NoDrivableLanes => {}
            other => panic!("expected NoDrivableLanes, got {other}"),
        }
    }

    #[test]
    fn steep_grade_is_warned_not_failed() {
        let elev = r#"<elevationProfile><elevation s="0" a="0" b="0.3" c="0" d="0"/></elevationProfile>"#;
        let (_, warnings) = parse_opendrive_subset(&two_lane_doc("", elev)).unwrap();
        assert!(warnings.iter().any(|w| w.contains("sanity bound")));
    }
}
