//! Resampling onto a uniform grid and cropping the map around the agents.

use std::collections::HashSet;

use super::{AgentState, AgentTrack, MapData, Scenario, ScenarioError};
use crate::geometry::{angle_diff, normalize_angle, polygon_distance, polyline_distance, Vec2};

pub const DEFAULT_CROP_RADIUS_M: f64 = 150.0;

/// Slack when snapping target times onto source frames.
const TIME_SNAP: f64 = 1e-9;

fn interpolate(a: &AgentState, b: &AgentState, frac: f64) -> AgentState {
    let position = a.position + (b.position - a.position) * frac;
    let heading = normalize_angle(a.heading + frac * angle_diff(a.heading, b.heading));
    let speed = match (a.speed, b.speed) {
        (Some(x), Some(y)) => Some(x + (y - x) * frac),
        _ => None,
    };
    AgentState {
        position,
        heading,
        speed,
    }
}

fn resample_track(track: &AgentTrack, src_hz: f64, target_hz: f64, frames: usize) -> AgentTrack {
    let n = track.states.len();
    let mut states = Vec::with_capacity(frames);
    let mut valid = Vec::with_capacity(frames);
    for k in 0..frames {
        let u = k as f64 / target_hz * src_hz;
        let base = (u + TIME_SNAP).floor();
        let frac = u - base;
        let i = base as usize;
        let sample = if frac.abs() <= TIME_SNAP {
            (i < n && track.is_valid(i)).then(|| track.states[i])
        } else if i + 1 < n && track.is_valid(i) && track.is_valid(i + 1) {
            Some(interpolate(&track.states[i], &track.states[i + 1], frac))
        } else {
            None
        };
        valid.push(sample.is_some());
        states.push(sample.unwrap_or(AgentState::INVALID));
    }
    AgentTrack {
        agent_id: track.agent_id.clone(),
        category: track.category,
        length: track.length,
        width: track.width,
        states,
        valid,
    }
}

/// Resamples every track onto a uniform grid of `round(window_s * target_hz)`
/// frames starting at the scenario's first frame.
///
/// Positions are linearly interpolated, headings along the shortest arc.
/// Target times outside an agent's observed span, or inside a gap of invalid
/// frames, come out invalid: nothing is extrapolated.
pub fn resample_scenario(
    s: &Scenario,
    target_hz: f64,
    window_s: f64,
) -> Result<Scenario, ScenarioError> {
    if !s.agents.iter().any(|a| a.valid_frame_count() >= 2) {
        return Err(ScenarioError::EmptyScenario);
    }
    let frames = (window_s * target_hz).round() as usize;
    let src_hz = s.meta.frame_rate_hz;
    let agents = s
        .agents
        .iter()
        .map(|a| resample_track(a, src_hz, target_hz, frames))
        .collect();
    let mut meta = s.meta.clone();
    meta.frame_rate_hz = target_hz;
    Ok(Scenario {
        meta,
        map: s.map.clone(),
        agents,
        frame_count: frames,
    })
}

fn valid_positions(s: &Scenario) -> Vec<Vec2> {
    s.agents
        .iter()
        .flat_map(|a| {
            a.states
                .iter()
                .zip(&a.valid)
                .filter(|(_, &v)| v)
                .map(|(st, _)| st.position)
        })
        .collect()
}

fn any_within(positions: &[Vec2], radius: f64, dist: impl Fn(Vec2) -> f64) -> bool {
    positions.iter().any(|&p| dist(p) <= radius)
}

/// Keeps map elements whose geometry comes within `radius_m` (inclusive) of
/// any valid agent position. Boundaries referenced by a kept lane are kept
/// with it; references to dropped lanes are pruned.
pub fn crop_map(s: &Scenario, radius_m: f64) -> Scenario {
    let positions = valid_positions(s);
    let map = &s.map;

    let mut lanes: Vec<_> = map
        .lanes
        .iter()
        .filter(|l| any_within(&positions, radius_m, |p| polyline_distance(&l.centerline, p)))
        .cloned()
        .collect();
    let kept_lanes: HashSet<String> = lanes.iter().map(|l| l.lane_id.clone()).collect();
    for l in &mut lanes {
        for refs in [&mut l.predecessors, &mut l.successors, &mut l.neighbors] {
            refs.retain(|id| kept_lanes.contains(id));
        }
    }

    let referenced: HashSet<&str> = lanes
        .iter()
        .flat_map(|l| [l.left_boundary.as_deref(), l.right_boundary.as_deref()])
        .flatten()
        .collect();
    let boundaries = map
        .boundaries
        .iter()
        .filter(|b| {
            referenced.contains(b.boundary_id.as_str())
                || any_within(&positions, radius_m, |p| polyline_distance(&b.polyline, p))
        })
        .cloned()
        .collect();
    let crosswalks = map
        .crosswalks
        .iter()
        .filter(|c| any_within(&positions, radius_m, |p| polygon_distance(&c.polygon, p)))
        .cloned()
        .collect();
    let restricted_areas = map
        .restricted_areas
        .iter()
        .filter(|r| any_within(&positions, radius_m, |p| polygon_distance(&r.polygon, p)))
        .cloned()
        .collect();

    Scenario {
        meta: s.meta.clone(),
        map: MapData {
            lanes,
            boundaries,
            crosswalks,
            restricted_areas,
        },
        agents: s.agents.clone(),
        frame_count: s.frame_count,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::*;
    use std::f64::consts::PI;

    fn scenario(hz: f64, agents: Vec<AgentTrack>, frames: usize) -> Scenario {
        Scenario {
            meta: ScenarioMeta {
                scenario_id: "r".into(),
                dataset_name: "d".into(),
                city: "c".into(),
                frame_rate_hz: hz,
                time_of_day: None,
            },
            map: MapData::default(),
            agents,
            frame_count: frames,
        }
    }

    fn track(id: &str, states: Vec<AgentState>, valid: Vec<bool>) -> AgentTrack {
        AgentTrack {
            agent_id: id.into(),
            category: AgentCategory::Ego,
            length: 4.0,
            width: 2.0,
            states,
            valid,
        }
    }

    fn st(x: f64, y: f64, h: f64) -> AgentState {
        AgentState {
            position: Vec2::new(x, y),
            heading: h,
            speed: None,
        }
    }

    #[test]
    fn decimation_keeps_every_other_sample() {
        let states: Vec<_> = (0..220)
            .map(|i| {
                let t = i as f64 / 20.0;
                st(3.0 * t + 0.2 * t * t, -t, 0.1)
            })
            .collect();
        let s = scenario(20.0, vec![track("ego", states.clone(), vec![true; 220])], 220);
        let r = resample_scenario(&s, 10.0, 11.0).unwrap();
        assert_eq!(r.frame_count, 110);
        assert_eq!(r.meta.frame_rate_hz, 10.0);
        for k in 0..110 {
            assert!(r.agents[0].states[k].position.distance(states[2 * k].position) <= 1e-9);
        }
    }

    #[test]
    fn no_extrapolation_past_observed_span() {
        let states: Vec<_> = (0..110).map(|i| st(i as f64, 0.0, 0.0)).collect();
        let valid: Vec<bool> = (0..110).map(|i| i < 50).collect();
        let s = scenario(10.0, vec![track("ego", states, valid)], 110);
        let r = resample_scenario(&s, 10.0, 11.0).unwrap();
        assert!(r.agents[0].valid[..50].iter().all(|&v| v));
        assert!(r.agents[0].valid[50..].iter().all(|&v| !v));
    }

    #[test]
    fn heading_interpolates_across_the_seam() {
        // 5 Hz source, 10 Hz target: odd target frames fall midway between samples
        let states = vec![st(0.0, 0.0, -3.1), st(1.0, 0.0, 3.1)];
        let s = scenario(5.0, vec![track("ego", states, vec![true, true])], 2);
        let r = resample_scenario(&s, 10.0, 0.3).unwrap();
        assert_eq!(r.frame_count, 3);
        let mid = r.agents[0].states[1].heading;
        // oracle: average of unit vectors
        let avg = Vec2::from_heading(-3.1) + Vec2::from_heading(3.1);
        let oracle = avg.heading();
        assert!((PI - mid.abs()).abs() < 0.05);
        assert!((PI - oracle.abs()).abs() < 0.05);
        assert!(angle_diff(mid, oracle).abs() < 1e-9);
        // t = 0.2 s lands exactly on the last source sample
        assert!(r.agents[0].valid[2]);
        assert_eq!(r.agents[0].states[2].heading, 3.1);
    }

    #[test]
    fn empty_scenario_rejected() {
        let s = scenario(10.0, vec![track("ego", vec![st(0.0, 0.0, 0.0)], vec![true])], 1);
        assert!(matches!(
            resample_scenario(&s, 10.0, 11.0),
            Err(ScenarioError::EmptyScenario)
        ));
    }

    #[test]
    fn resample_is_idempotent_on_canonical_grid() {
        let states: Vec<_> = (0..150)
            .map(|i| st((i as f64 * 0.37).sin() * 20.0, i as f64 * 0.5, 0.3))
            .collect();
        let s = scenario(13.0, vec![track("ego", states, vec![true; 150])], 150);
        let once = resample_scenario(&s, 10.0, 11.0).unwrap();
        let twice = resample_scenario(&once, 10.0, 11.0).unwrap();
        assert_eq!(once, twice);
    }

    fn lane(id: &str, y: f64, neighbors: &[&str]) -> Lane {
        Lane {
            lane_id: id.into(),
            lane_type: LaneType::Normal,
            centerline: vec![Vec2::new(-10.0, y), Vec2::new(10.0, y)],
            left_boundary: None,
            right_boundary: None,
            predecessors: vec![],
            successors: vec![],
            neighbors: neighbors.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn crop_drops_far_lane_and_prunes_refs() {
        let mut s = scenario(
            10.0,
            vec![track("ego", vec![st(0.0, 0.0, 0.0); 3], vec![true; 3])],
            3,
        );
        s.map.lanes = vec![lane("near", 3.0, &["far"]), lane("far", 500.0, &["near"])];
        let c = crop_map(&s, 150.0);
        assert_eq!(c.map.lanes.len(), 1);
        assert!(c.map.lanes[0].neighbors.is_empty());
        assert!(check_invariants(&c).is_empty());
    }

    #[test]
    fn crop_boundary_is_inclusive() {
        let mut s = scenario(
            10.0,
            vec![track("ego", vec![st(0.0, 0.0, 0.0); 3], vec![true; 3])],
            3,
        );
        // nearest point of the centerline is 149.99 m away
        s.map.lanes = vec![lane("edge", 149.99, &[])];
        assert_eq!(crop_map(&s, 149.99).map.lanes.len(), 1);
        assert_eq!(crop_map(&s, 149.98).map.lanes.len(), 0);
    }

    #[test]
    fn crop_keeps_referenced_boundaries() {
        let mut s = scenario(
            10.0,
            vec![track("ego", vec![st(0.0, 0.0, 0.0); 3], vec![true; 3])],
            3,
        );
        let mut l = lane("l", 100.0, &[]);
        l.left_boundary = Some("b_far".into());
        s.map.lanes = vec![l];
        s.map.boundaries = vec![BoundaryLine {
            boundary_id: "b_far".into(),
            style: BoundaryStyle::Solid,
            polyline: vec![Vec2::new(-10.0, 200.0), Vec2::new(10.0, 200.0)],
        }];
        let c = crop_map(&s, 150.0);
        assert_eq!(c.map.boundaries.len(), 1);
        assert!(check_invariants(&c).is_empty());
    }
}
