//! Canonical JSON scenario format, version 1.
//!
//! Parsing goes through `serde_json::Value` so every schema problem can be
//! reported with a path to the offending element. Writing is hand-rolled:
//! key order and float formatting (six decimals) are fixed, which makes
//! `save(load(f))` byte-identical for canonically formatted files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::{Map, Value};

use super::validate::check_invariants;
use super::{
    AgentCategory, AgentState, AgentTrack, BoundaryLine, BoundaryStyle, Crosswalk, Lane,
    LaneType, MapData, RestrictedArea, Scenario, ScenarioError, ScenarioMeta,
};
use crate::geometry::{normalize_angle, Vec2};

pub const FORMAT_VERSION: u64 = 1;

/// Displacement below which a heading cannot be estimated from motion.
const STATIONARY_EPS_M: f64 = 0.01;

type Res<T> = Result<T, ScenarioError>;

fn schema<T>(path: &str, msg: impl Into<String>) -> Res<T> {
    Err(ScenarioError::schema(path, msg))
}

fn as_obj<'a>(v: &'a Value, path: &str) -> Res<&'a Map<String, Value>> {
    v.as_object()
        .map_or_else(|| schema(path, "expected object"), Ok)
}

fn field<'a>(m: &'a Map<String, Value>, key: &str, path: &str) -> Res<&'a Value> {
    m.get(key)
        .map_or_else(|| schema(path, format!("missing field `{key}`")), Ok)
}

fn as_f64(v: &Value, path: &str) -> Res<f64> {
    v.as_f64().map_or_else(|| schema(path, "expected number"), Ok)
}

fn as_str<'a>(v: &'a Value, path: &str) -> Res<&'a str> {
    v.as_str().map_or_else(|| schema(path, "expected string"), Ok)
}

fn as_arr<'a>(v: &'a Value, path: &str) -> Res<&'a Vec<Value>> {
    v.as_array().map_or_else(|| schema(path, "expected array"), Ok)
}

fn get_f64(m: &Map<String, Value>, key: &str, path: &str) -> Res<f64> {
    as_f64(field(m, key, path)?, &format!("{path}.{key}"))
}

fn get_string(m: &Map<String, Value>, key: &str, path: &str) -> Res<String> {
    Ok(as_str(field(m, key, path)?, &format!("{path}.{key}"))?.to_owned())
}

fn opt_string(m: &Map<String, Value>, key: &str, path: &str) -> Res<Option<String>> {
    match m.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => Ok(Some(as_str(v, &format!("{path}.{key}"))?.to_owned())),
    }
}

fn string_list(m: &Map<String, Value>, key: &str, path: &str) -> Res<Vec<String>> {
    let p = format!("{path}.{key}");
    match m.get(key) {
        None => Ok(Vec::new()),
        Some(v) => as_arr(v, &p)?
            .iter()
            .enumerate()
            .map(|(i, x)| Ok(as_str(x, &format!("{p}[{i}]"))?.to_owned()))
            .collect(),
    }
}

fn point(v: &Value, path: &str) -> Res<Vec2> {
    let a = as_arr(v, path)?;
    if a.len() != 2 {
        return schema(path, "expected [x, y]");
    }
    Ok(Vec2::new(
        as_f64(&a[0], &format!("{path}[0]"))?,
        as_f64(&a[1], &format!("{path}[1]"))?,
    ))
}

fn points(m: &Map<String, Value>, key: &str, path: &str) -> Res<Vec<Vec2>> {
    let p = format!("{path}.{key}");
    as_arr(field(m, key, path)?, &p)?
        .iter()
        .enumerate()
        .map(|(i, x)| point(x, &format!("{p}[{i}]")))
        .collect()
}

/// Drops a repeated closing vertex so rings are stored open.
fn open_ring(mut ring: Vec<Vec2>) -> Vec<Vec2> {
    if ring.len() > 1 && ring.first() == ring.last() {
        ring.pop();
    }
    ring
}

fn parse_meta(v: &Value) -> Res<ScenarioMeta> {
    let p = "meta";
    let m = as_obj(v, p)?;
    Ok(ScenarioMeta {
        scenario_id: get_string(m, "scenario_id", p)?,
        dataset_name: get_string(m, "dataset_name", p)?,
        city: get_string(m, "city", p)?,
        frame_rate_hz: get_f64(m, "frame_rate_hz", p)?,
        time_of_day: opt_string(m, "time_of_day", p)?,
    })
}

fn parse_map(v: &Value) -> Res<MapData> {
    let m = as_obj(v, "map")?;
    let mut map = MapData::default();

    let lanes = as_arr(field(m, "lanes", "map")?, "map.lanes")?;
    for (i, lv) in lanes.iter().enumerate() {
        let p = format!("map.lanes[{i}]");
        let lm = as_obj(lv, &p)?;
        let lane_type = match get_string(lm, "lane_type", &p)?.as_str() {
            "normal" => LaneType::Normal,
            "bus" => LaneType::Bus,
            "bicycle" => LaneType::Bicycle,
            other => return schema(&format!("{p}.lane_type"), format!("unknown lane type `{other}`")),
        };
        map.lanes.push(Lane {
            lane_id: get_string(lm, "lane_id", &p)?,
            lane_type,
            centerline: points(lm, "centerline", &p)?,
            left_boundary: opt_string(lm, "left_boundary", &p)?,
            right_boundary: opt_string(lm, "right_boundary", &p)?,
            predecessors: string_list(lm, "predecessors", &p)?,
            successors: string_list(lm, "successors", &p)?,
            neighbors: string_list(lm, "neighbors", &p)?,
        });
    }

    let boundaries = as_arr(field(m, "boundaries", "map")?, "map.boundaries")?;
    for (i, bv) in boundaries.iter().enumerate() {
        let p = format!("map.boundaries[{i}]");
        let bm = as_obj(bv, &p)?;
        let style = match get_string(bm, "style", &p)?.as_str() {
            "solid" => BoundaryStyle::Solid,
            "dashed" => BoundaryStyle::Dashed,
            "other" => BoundaryStyle::Other,
            other => return schema(&format!("{p}.style"), format!("unknown style `{other}`")),
        };
        map.boundaries.push(BoundaryLine {
            boundary_id: get_string(bm, "boundary_id", &p)?,
            style,
            polyline: points(bm, "polyline", &p)?,
        });
    }

    let crosswalks = as_arr(field(m, "crosswalks", "map")?, "map.crosswalks")?;
    for (i, cv) in crosswalks.iter().enumerate() {
        let p = format!("map.crosswalks[{i}]");
        let cm = as_obj(cv, &p)?;
        map.crosswalks.push(Crosswalk {
            crosswalk_id: get_string(cm, "crosswalk_id", &p)?,
            polygon: open_ring(points(cm, "polygon", &p)?),
        });
    }

    if let Some(rv) = m.get("restricted_areas") {
        for (i, av) in as_arr(rv, "map.restricted_areas")?.iter().enumerate() {
            let p = format!("map.restricted_areas[{i}]");
            let am = as_obj(av, &p)?;
            map.restricted_areas.push(RestrictedArea {
                area_id: get_string(am, "area_id", &p)?,
                polygon: open_ring(points(am, "polygon", &p)?),
            });
        }
    }
    Ok(map)
}

pub(crate) struct RawState {
    pub position: Vec2,
    pub heading: Option<f64>,
    pub speed: Option<f64>,
}

fn parse_state(v: &Value, path: &str) -> Res<RawState> {
    let a = as_arr(v, path)?;
    if a.len() != 4 {
        return schema(path, "expected [x, y, heading, speed|null]");
    }
    let opt = |i: usize| -> Res<Option<f64>> {
        match &a[i] {
            Value::Null => Ok(None),
            x => Ok(Some(as_f64(x, &format!("{path}[{i}]"))?)),
        }
    };
    Ok(RawState {
        position: Vec2::new(
            as_f64(&a[0], &format!("{path}[0]"))?,
            as_f64(&a[1], &format!("{path}[1]"))?,
        ),
        heading: opt(2)?,
        speed: opt(3)?,
    })
}

/// Fills missing headings from the direction of motion over the nearest
/// valid frame pair; stationary frames inherit the previous heading.
pub(crate) fn resolve_headings(raw: &[RawState], valid: &[bool]) -> Vec<f64> {
    let n = raw.len();
    let mut out = vec![0.0; n];
    let mut last = 0.0;
    for t in 0..n {
        if let Some(h) = raw[t].heading {
            out[t] = normalize_angle(h);
            if valid[t] {
                last = out[t];
            }
            continue;
        }
        if !valid[t] {
            continue;
        }
        let pair = if t + 1 < n && valid[t + 1] {
            Some((t, t + 1))
        } else if t > 0 && valid[t - 1] {
            Some((t - 1, t))
        } else {
            None
        };
        let moving = pair.and_then(|(a, b)| {
            let d = raw[b].position - raw[a].position;
            (d.norm() >= STATIONARY_EPS_M).then(|| d.heading())
        });
        if let Some(h) = moving {
            last = normalize_angle(h);
        }
        out[t] = last;
    }
    out
}

fn parse_agent(v: &Value, i: usize) -> Res<AgentTrack> {
    let p = format!("agents[{i}]");
    let m = as_obj(v, &p)?;
    let agent_id = get_string(m, "agent_id", &p)?;
    let category = AgentCategory::parse(&get_string(m, "category", &p)?);
    let length = get_f64(m, "length", &p)?;
    let width = get_f64(m, "width", &p)?;

    let sp = format!("{p}.states");
    let raw: Vec<RawState> = as_arr(field(m, "states", &p)?, &sp)?
        .iter()
        .enumerate()
        .map(|(f, s)| parse_state(s, &format!("{sp}[{f}]")))
        .collect::<Res<_>>()?;

    let vp = format!("{p}.valid");
    let valid: Vec<bool> = as_arr(field(m, "valid", &p)?, &vp)?
        .iter()
        .enumerate()
        .map(|(f, x)| match x.as_u64() {
            Some(0) => Ok(false),
            Some(1) => Ok(true),
            _ => schema(&format!("{vp}[{f}]"), "expected 0 or 1"),
        })
        .collect::<Res<_>>()?;
    if valid.len() != raw.len() {
        return Err(ScenarioError::invariant(
            vp,
            format!(
                "mask length {} differs from states length {}",
                valid.len(),
                raw.len()
            ),
        ));
    }

    let headings = resolve_headings(&raw, &valid);
    let states = raw
        .iter()
        .zip(headings)
        .map(|(r, heading)| AgentState {
            position: r.position,
            heading,
            speed: r.speed,
        })
        .collect();
    Ok(AgentTrack {
        agent_id,
        category,
        length,
        width,
        states,
        valid,
    })
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let root: Value = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
        path: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    let m = as_obj(&root, "$")?;
    let version = field(m, "format_version", "$")?;
    if version.as_u64() != Some(FORMAT_VERSION) {
        return schema(
            "format_version",
            format!("unsupported format version {version}, expected {FORMAT_VERSION}"),
        );
    }
    let meta = parse_meta(field(m, "meta", "$")?)?;
    let frame_count = field(m, "frame_count", "$")?
        .as_u64()
        .map_or_else(|| schema("frame_count", "expected non-negative integer"), Ok)?
        as usize;
    let map = parse_map(field(m, "map", "$")?)?;
    let agents = as_arr(field(m, "agents", "$")?, "agents")?
        .iter()
        .enumerate()
        .map(|(i, a)| parse_agent(a, i))
        .collect::<Res<Vec<_>>>()?;

    let scenario = Scenario {
        meta,
        map,
        agents,
        frame_count,
    };
    if let Some(v) = check_invariants(&scenario).into_iter().next() {
        return Err(v.into());
    }
    Ok(scenario)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        file: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&text)
}

pub fn save_scenario(s: &Scenario, path: impl AsRef<Path>) -> Result<(), ScenarioError> {
    let path = path.as_ref();
    fs::write(path, to_canonical_json(s)).map_err(|source| ScenarioError::Io {
        file: path.to_path_buf(),
        source,
    })
}

fn num(out: &mut String, x: f64) {
    let start = out.len();
    write!(out, "{x:.6}").unwrap();
    if &out[start..] == "-0.000000" {
        out.replace_range(start..start + 1, "");
    }
}

fn string(out: &mut String, s: &str) {
    out.push_str(&serde_json::to_string(s).expect("strings serialize"));
}

fn opt_str(out: &mut String, s: &Option<String>) {
    match s {
        Some(s) => string(out, s),
        None => out.push_str("null"),
    }
}

fn point_list(out: &mut String, pts: &[Vec2]) {
    out.push('[');
    for (i, p) in pts.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push('[');
        num(out, p.x);
        out.push_str(", ");
        num(out, p.y);
        out.push(']');
    }
    out.push(']');
}

fn str_list(out: &mut String, items: &[String]) {
    out.push('[');
    for (i, s) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        string(out, s);
    }
    out.push(']');
}

/// Writes `items` as an indented JSON array, one element per line.
fn block<T>(out: &mut String, indent: &str, items: &[T], mut each: impl FnMut(&mut String, &T)) {
    if items.is_empty() {
        out.push_str("[]");
        return;
    }
    out.push_str("[\n");
    for (i, it) in items.iter().enumerate() {
        out.push_str(indent);
        out.push_str("  ");
        each(out, it);
        if i + 1 < items.len() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str(indent);
    out.push(']');
}

/// Serializes a scenario in the canonical layout.
pub fn to_canonical_json(s: &Scenario) -> String {
    let mut o = String::with_capacity(64 * 1024);
    o.push_str("{\n");
    writeln!(o, "  \"format_version\": {FORMAT_VERSION},").unwrap();
    o.push_str("  \"meta\": {\n    \"scenario_id\": ");
    string(&mut o, &s.meta.scenario_id);
    o.push_str(",\n    \"dataset_name\": ");
    string(&mut o, &s.meta.dataset_name);
    o.push_str(",\n    \"city\": ");
    string(&mut o, &s.meta.city);
    o.push_str(",\n    \"frame_rate_hz\": ");
    num(&mut o, s.meta.frame_rate_hz);
    o.push_str(",\n    \"time_of_day\": ");
    opt_str(&mut o, &s.meta.time_of_day);
    o.push_str("\n  },\n");
    writeln!(o, "  \"frame_count\": {},", s.frame_count).unwrap();

    o.push_str("  \"map\": {\n    \"lanes\": ");
    block(&mut o, "    ", &s.map.lanes, |o, l| {
        o.push_str("{\"lane_id\": ");
        string(o, &l.lane_id);
        o.push_str(", \"lane_type\": ");
        string(o, l.lane_type.as_str());
        o.push_str(", \"centerline\": ");
        point_list(o, &l.centerline);
        o.push_str(", \"left_boundary\": ");
        opt_str(o, &l.left_boundary);
        o.push_str(", \"right_boundary\": ");
        opt_str(o, &l.right_boundary);
        o.push_str(", \"predecessors\": ");
        str_list(o, &l.predecessors);
        o.push_str(", \"successors\": ");
        str_list(o, &l.successors);
        o.push_str(", \"neighbors\": ");
        str_list(o, &l.neighbors);
        o.push('}');
    });
    o.push_str(",\n    \"boundaries\": ");
    block(&mut o, "    ", &s.map.boundaries, |o, b| {
        o.push_str("{\"boundary_id\": ");
        string(o, &b.boundary_id);
        o.push_str(", \"style\": ");
        string(o, b.style.as_str());
        o.push_str(", \"polyline\": ");
        point_list(o, &b.polyline);
        o.push('}');
    });
    o.push_str(",\n    \"crosswalks\": ");
    block(&mut o, "    ", &s.map.crosswalks, |o, c| {
        o.push_str("{\"crosswalk_id\": ");
        string(o, &c.crosswalk_id);
        o.push_str(", \"polygon\": ");
        point_list(o, &c.polygon);
        o.push('}');
    });
    o.push_str(",\n    \"restricted_areas\": ");
    block(&mut o, "    ", &s.map.restricted_areas, |o, r| {
        o.push_str("{\"area_id\": ");
        string(o, &r.area_id);
        o.push_str(", \"polygon\": ");
        point_list(o, &r.polygon);
        o.push('}');
    });
    o.push_str("\n  },\n  \"agents\": ");

    block(&mut o, "  ", &s.agents, |o, a| {
        o.push_str("{\n      \"agent_id\": ");
        string(o, &a.agent_id);
        o.push_str(",\n      \"category\": ");
        string(o, a.category.as_str());
        o.push_str(",\n      \"length\": ");
        num(o, a.length);
        o.push_str(",\n      \"width\": ");
        num(o, a.width);
        o.push_str(",\n      \"states\": ");
        block(o, "      ", &a.states, |o, st| {
            o.push('[');
            num(o, st.position.x);
            o.push_str(", ");
            num(o, st.position.y);
            o.push_str(", ");
            num(o, st.heading);
            o.push_str(", ");
            match st.speed {
                Some(v) => num(o, v),
                None => o.push_str("null"),
            }
            o.push(']');
        });
        o.push_str(",\n      \"valid\": [");
        for (i, &v) in a.valid.iter().enumerate() {
            if i > 0 {
                o.push_str(", ");
            }
            o.push(if v { '1' } else { '0' });
        }
        o.push_str("]\n    }");
    });
    o.push_str("\n}\n");
    o
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn doc(states: &str, valid: &str, extra_map: &str) -> String {
        format!(
            r#"{{"format_version": 1,
              "meta": {{"scenario_id": "t", "dataset_name": "unit", "city": "x", "frame_rate_hz": 10.0}},
              "frame_count": 3,
              "map": {{"lanes": [{extra_map}], "boundaries": [], "crosswalks": []}},
              "agents": [{{"agent_id": "ego", "category": "ego", "length": 4.0, "width": 2.0,
                          "states": {states}, "valid": {valid}}}]}}"#
        )
    }

    const STATES: &str = "[[0,0,0,null],[1,0,0,null],[2,0,0,null]]";

    #[test]
    fn minimal_document() {
        let s = parse_scenario(&doc(STATES, "[1,1,1]", "")).unwrap();
        assert_eq!(s.frame_count, 3);
        assert_eq!(s.agents.len(), 1);
        assert!(s.map.is_empty());
    }

    #[test]
    fn heading_is_normalized() {
        let states = format!("[[0,0,{},null],[1,0,0,null],[2,0,0,null]]", 1.5 * PI);
        let s = parse_scenario(&doc(&states, "[1,1,1]", "")).unwrap();
        assert!((s.agents[0].states[0].heading + PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn missing_heading_estimated_from_motion() {
        let states = "[[0,0,null,null],[0,1,null,null],[0,1.001,null,null]]";
        let s = parse_scenario(&doc(states, "[1,1,1]", "")).unwrap();
        let h: Vec<f64> = s.agents[0].states.iter().map(|x| x.heading).collect();
        assert!((h[0] - PI / 2.0).abs() < 1e-12);
        // last step moves 1 mm: backward pair is used for the final frame
        assert!((h[1] - PI / 2.0).abs() < 1e-12);
        assert!((h[2] - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn stationary_track_defaults_to_zero_heading() {
        let states = "[[5,5,null,null],[5,5,null,null],[5,5,null,null]]";
        let s = parse_scenario(&doc(states, "[1,1,1]", "")).unwrap();
        assert!(s.agents[0].states.iter().all(|x| x.heading == 0.0));
    }

    #[test]
    fn undefined_boundary_reference_names_lane() {
        let lane = r#"{"lane_id": "lane_7", "lane_type": "normal", "centerline": [[0,0],[1,0]],
                       "left_boundary": "ghost", "right_boundary": null}"#;
        match parse_scenario(&doc(STATES, "[1,1,1]", lane)) {
            Err(ScenarioError::Invariant { path, message }) => {
                assert!(path.contains("lane_7"), "{path}");
                assert!(message.contains("ghost"));
            }
            other => panic!("expected invariant error, got {other:?}"),
        }
    }

    #[test]
    fn syntax_and_schema_errors_carry_paths() {
        assert!(matches!(
            parse_scenario("{not json"),
            Err(ScenarioError::Parse { .. })
        ));
        match parse_scenario(&doc("[[0,0,0,null],[1,0],[2,0,0,null]]", "[1,1,1]", "")) {
            Err(ScenarioError::Schema { path, .. }) => assert_eq!(path, "agents[0].states[1]"),
            other => panic!("{other:?}"),
        }
        match parse_scenario(&doc(STATES, "[1,2,1]", "")) {
            Err(ScenarioError::Schema { path, .. }) => assert_eq!(path, "agents[0].valid[1]"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_category_maps_to_other() {
        let text = doc(STATES, "[1,1,1]", "").replace(
            "\"agents\": [",
            "\"agents\": [{\"agent_id\": \"z\", \"category\": \"scooter\", \"length\": 1.0, \"width\": 0.5, \"states\": [[0,0,0,null],[0,0,0,null],[0,0,0,null]], \"valid\": [0,0,0]},",
        );
        let s = parse_scenario(&text).unwrap();
        assert_eq!(s.agent("z").unwrap().category, AgentCategory::Other);
    }

    #[test]
    fn canonical_round_trip_is_byte_identical() {
        let s = parse_scenario(&doc(STATES, "[1,1,0]", "")).unwrap();
        let text = to_canonical_json(&s);
        let again = to_canonical_json(&parse_scenario(&text).unwrap());
        assert_eq!(text, again);
        assert!(text.contains("\"frame_rate_hz\": 10.000000"));
    }

    #[test]
    fn negative_zero_is_written_unsigned() {
        let mut o = String::new();
        num(&mut o, -1e-9);
        assert_eq!(o, "0.000000");
    }
}
