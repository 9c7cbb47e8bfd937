use std::collections::HashSet;
use std::f64::consts::PI;

use super::{AgentCategory, Scenario, ScenarioError};
use crate::geometry::{polygon_is_simple, polygon_signed_area, Vec2};

/// Minimum separation between consecutive boundary vertices.
const MIN_VERTEX_SEPARATION_M: f64 = 1e-3;

/// One failed invariant, located by a path into the document.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl From<Violation> for ScenarioError {
    fn from(v: Violation) -> Self {
        ScenarioError::invariant(v.path, v.message)
    }
}

fn check_polygon(path: &str, ring: &[Vec2], out: &mut Vec<Violation>) {
    if ring.len() < 3 {
        out.push(Violation::new(path, "polygon needs at least 3 vertices"));
        return;
    }
    if ring.iter().any(|p| !p.is_finite()) {
        out.push(Violation::new(path, "non-finite vertex"));
        return;
    }
    if !polygon_is_simple(ring) {
        out.push(Violation::new(path, "polygon is not simple"));
    } else if polygon_signed_area(ring).abs() <= 0.0 {
        out.push(Violation::new(path, "polygon has zero area"));
    }
}

/// Runs the full invariant checklist and returns every violation found.
pub fn check_invariants(s: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();

    if s.meta.scenario_id.is_empty() {
        out.push(Violation::new("meta.scenario_id", "must be non-empty"));
    }
    if !(s.meta.frame_rate_hz.is_finite() && s.meta.frame_rate_hz > 0.0) {
        out.push(Violation::new(
            "meta.frame_rate_hz",
            format!("must be > 0, got {}", s.meta.frame_rate_hz),
        ));
    }
    if s.frame_count == 0 {
        out.push(Violation::new("frame_count", "must be > 0"));
    }

    let egos = s
        .agents
        .iter()
        .filter(|a| a.category == AgentCategory::Ego)
        .count();
    if egos != 1 {
        out.push(Violation::new(
            "agents",
            format!("exactly one ego agent required, found {egos}"),
        ));
    }

    let mut agent_ids = HashSet::new();
    for (i, a) in s.agents.iter().enumerate() {
        let p = format!("agents[{i}] ({})", a.agent_id);
        if a.agent_id.is_empty() {
            out.push(Violation::new(&p, "agent_id must be non-empty"));
        } else if !agent_ids.insert(a.agent_id.as_str()) {
            out.push(Violation::new(&p, "duplicate agent_id"));
        }
        let point_ok = a.category == AgentCategory::Pedestrian;
        for (field, value) in [("length", a.length), ("width", a.width)] {
            let ok = value.is_finite() && (value > 0.0 || (point_ok && value == 0.0));
            if !ok {
                let bound = if point_ok { ">= 0" } else { "> 0" };
                out.push(Violation::new(
                    format!("{p}.{field}"),
                    format!("{field} must be {bound}, got {value}"),
                ));
            }
        }
        if a.states.len() != s.frame_count {
            out.push(Violation::new(
                format!("{p}.states"),
                format!("expected {} frames, got {}", s.frame_count, a.states.len()),
            ));
        }
        if a.valid.len() != a.states.len() {
            out.push(Violation::new(
                format!("{p}.valid"),
                format!(
                    "mask length {} differs from states length {}",
                    a.valid.len(),
                    a.states.len()
                ),
            ));
        }
        for (f, st) in a.states.iter().enumerate() {
            if !a.is_valid(f) {
                continue;
            }
            if !st.position.is_finite() {
                out.push(Violation::new(
                    format!("{p}.states[{f}]"),
                    "position not finite",
                ));
            }
            if !(-PI..PI).contains(&st.heading) {
                out.push(Violation::new(
                    format!("{p}.states[{f}]"),
                    format!("heading {} outside [-pi, pi)", st.heading),
                ));
            }
            if let Some(v) = st.speed {
                if !(v.is_finite() && v >= 0.0) {
                    out.push(Violation::new(
                        format!("{p}.states[{f}]"),
                        format!("speed must be finite and >= 0, got {v}"),
                    ));
                }
            }
        }
    }

    let mut boundary_ids = HashSet::new();
    for (i, b) in s.map.boundaries.iter().enumerate() {
        let p = format!("map.boundaries[{i}] ({})", b.boundary_id);
        if !boundary_ids.insert(b.boundary_id.as_str()) {
            out.push(Violation::new(&p, "duplicate boundary_id"));
        }
        if b.polyline.len() < 2 {
            out.push(Violation::new(&p, "polyline needs at least 2 points"));
        }
        if b.polyline.iter().any(|q| !q.is_finite()) {
            out.push(Violation::new(&p, "non-finite vertex"));
        }
        for (k, w) in b.polyline.windows(2).enumerate() {
            if w[0].distance(w[1]) <= MIN_VERTEX_SEPARATION_M {
                out.push(Violation::new(
                    format!("{p}.polyline[{}]", k + 1),
                    "consecutive points closer than 1 mm",
                ));
            }
        }
    }

    let lane_ids: HashSet<&str> = s.map.lanes.iter().map(|l| l.lane_id.as_str()).collect();
    let mut seen_lanes = HashSet::new();
    for (i, l) in s.map.lanes.iter().enumerate() {
        let p = format!("map.lanes[{i}] ({})", l.lane_id);
        if !seen_lanes.insert(l.lane_id.as_str()) {
            out.push(Violation::new(&p, "duplicate lane_id"));
        }
        if l.centerline.len() < 2 {
            out.push(Violation::new(
                format!("{p}.centerline"),
                "centerline needs at least 2 points",
            ));
        }
        if l.centerline.iter().any(|q| !q.is_finite()) {
            out.push(Violation::new(format!("{p}.centerline"), "non-finite vertex"));
        }
        for (field, r) in [
            ("left_boundary", &l.left_boundary),
            ("right_boundary", &l.right_boundary),
        ] {
            if let Some(id) = r {
                if !boundary_ids.contains(id.as_str()) {
                    out.push(Violation::new(
                        format!("{p}.{field}"),
                        format!("lane {} references undefined boundary {id}", l.lane_id),
                    ));
                }
            }
        }
        for (field, refs) in [
            ("predecessors", &l.predecessors),
            ("successors", &l.successors),
            ("neighbors", &l.neighbors),
        ] {
            for id in refs {
                if !lane_ids.contains(id.as_str()) {
                    out.push(Violation::new(
                        format!("{p}.{field}"),
                        format!("lane {} references undefined lane {id}", l.lane_id),
                    ));
                }
            }
        }
    }

    let mut crosswalk_ids = HashSet::new();
    for (i, c) in s.map.crosswalks.iter().enumerate() {
        let p = format!("map.crosswalks[{i}] ({})", c.crosswalk_id);
        if !crosswalk_ids.insert(c.crosswalk_id.as_str()) {
            out.push(Violation::new(&p, "duplicate crosswalk_id"));
        }
        check_polygon(&p, &c.polygon, &mut out);
    }
    for (i, r) in s.map.restricted_areas.iter().enumerate() {
        check_polygon(
            &format!("map.restricted_areas[{i}] ({})", r.area_id),
            &r.polygon,
            &mut out,
        );
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::*;

    fn minimal() -> Scenario {
        Scenario {
            meta: ScenarioMeta {
                scenario_id: "s".into(),
                dataset_name: "d".into(),
                city: "c".into(),
                frame_rate_hz: 10.0,
                time_of_day: None,
            },
            map: MapData::default(),
            agents: vec![AgentTrack {
                agent_id: "ego".into(),
                category: AgentCategory::Ego,
                length: 4.0,
                width: 2.0,
                states: vec![AgentState::INVALID; 3],
                valid: vec![true; 3],
            }],
            frame_count: 3,
        }
    }

    #[test]
    fn minimal_is_clean() {
        assert!(check_invariants(&minimal()).is_empty());
    }

    #[test]
    fn negative_width_names_agent_and_field() {
        let mut s = minimal();
        s.agents[0].width = -1.0;
        let v = check_invariants(&s);
        assert_eq!(v.len(), 1);
        assert!(v[0].path.contains("ego") && v[0].path.ends_with(".width"));
    }

    #[test]
    fn pedestrian_point_model_allowed() {
        let mut s = minimal();
        let mut p = s.agents[0].clone();
        p.agent_id = "ped".into();
        p.category = AgentCategory::Pedestrian;
        p.length = 0.0;
        p.width = 0.0;
        s.agents.push(p.clone());
        assert!(check_invariants(&s).is_empty());
        p.agent_id = "car".into();
        p.category = AgentCategory::Vehicle;
        s.agents.push(p);
        assert_eq!(check_invariants(&s).len(), 2);
    }

    #[test]
    fn two_egos_rejected() {
        let mut s = minimal();
        let mut e = s.agents[0].clone();
        e.agent_id = "ego2".into();
        s.agents.push(e);
        assert!(check_invariants(&s)
            .iter()
            .any(|v| v.message.contains("exactly one ego")));
    }

    #[test]
    fn dangling_lane_reference() {
        let mut s = minimal();
        s.map.lanes.push(Lane {
            lane_id: "l0".into(),
            lane_type: LaneType::Normal,
            centerline: vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)],
            left_boundary: Some("nope".into()),
            right_boundary: None,
            predecessors: vec![],
            successors: vec!["l9".into()],
            neighbors: vec![],
        });
        let v = check_invariants(&s);
        assert_eq!(v.len(), 2);
        assert!(v.iter().all(|x| x.message.contains("l0")));
    }

    #[test]
    fn near_coincident_boundary_points() {
        let mut s = minimal();
        s.map.boundaries.push(BoundaryLine {
            boundary_id: "b".into(),
            style: BoundaryStyle::Solid,
            polyline: vec![Vec2::new(0.0, 0.0), Vec2::new(0.0005, 0.0)],
        });
        assert_eq!(check_invariants(&s).len(), 1);
    }
}
