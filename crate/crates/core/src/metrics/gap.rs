use super::ttc::build_reference_path;
use super::{MetricId, MetricSample};
use crate::geometry::PathParam;
use crate::scenario::AgentTrack;

pub const DEFAULT_CORRIDOR_HALFWIDTH_M: f64 = 1.5;

/// Along-path distance from the ego's front to the nearest agent occupying
/// its future corridor.
pub fn compute_gap(
    ego: &AgentTrack,
    others: &[&AgentTrack],
    frame: usize,
    corridor_halfwidth: f64,
) -> MetricSample {
    let path = if ego.is_valid(frame) {
        build_reference_path(ego, frame).ok()
    } else {
        None
    };
    gap_with_path(ego, path.as_ref(), others, frame, corridor_halfwidth)
}

pub(crate) fn gap_with_path(
    ego: &AgentTrack,
    path: Option<&PathParam>,
    others: &[&AgentTrack],
    frame: usize,
    corridor_halfwidth: f64,
) -> MetricSample {
    let undefined = MetricSample::undefined(MetricId::Gap, &ego.agent_id, None, frame);
    let Some(path) = path.filter(|_| ego.is_valid(frame)) else {
        return undefined;
    };
    let front_s = path.project(ego.footprint(frame).front_center()).s;

    let mut best: Option<(f64, &str)> = None;
    for other in others {
        if other.agent_id == ego.agent_id || !other.is_valid(frame) {
            continue;
        }
        let fp = other.footprint(frame);
        let corners = fp.corners();
        let probe: &[_] = if fp.is_point() { &corners[..1] } else { &corners };
        // Euclidean distance rather than the raw lateral offset keeps points
        // beyond the path end from counting as on-path
        let nearest = probe
            .iter()
            .map(|&c| path.project(c))
            .filter(|pr| pr.distance <= corridor_halfwidth && pr.s > front_s)
            .map(|pr| pr.s)
            .fold(f64::INFINITY, f64::min);
        if nearest.is_finite() {
            let gap = nearest - front_s;
            if best.is_none_or(|(g, _)| gap < g) {
                best = Some((gap, &other.agent_id));
            }
        }
    }
    match best {
        Some((g, id)) => MetricSample::new(MetricId::Gap, &ego.agent_id, Some(id), frame, g),
        None => undefined,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec2;
    use crate::scenario::{AgentCategory, AgentState};

    fn agent(id: &str, cat: AgentCategory, x: f64, y: f64, vx: f64) -> AgentTrack {
        AgentTrack {
            agent_id: id.into(),
            category: cat,
            length: 4.0,
            width: 2.0,
            states: (0..110)
                .map(|i| AgentState {
                    position: Vec2::new(x + vx * i as f64 * 0.1, y),
                    heading: 0.0,
                    speed: None,
                })
                .collect(),
            valid: vec![true; 110],
        }
    }

    #[test]
    fn lead_vehicle_gap() {
        let ego = agent("ego", AgentCategory::Ego, 0.0, 0.0, 10.0);
        let lead = agent("lead", AgentCategory::Vehicle, 30.0, 0.0, 0.0);
        let g = compute_gap(&ego, &[&lead], 0, 1.5);
        assert!((g.value - 26.0).abs() < 1e-9);
        assert_eq!(g.other.as_deref(), Some("lead"));
    }

    #[test]
    fn lateral_agent_off_corridor() {
        let ego = agent("ego", AgentCategory::Ego, 0.0, 0.0, 10.0);
        let far = agent("far", AgentCategory::Vehicle, 30.0, 50.0, 0.0);
        assert!(!compute_gap(&ego, &[&far], 0, 1.5).defined);
    }

    #[test]
    fn nearest_on_path_agent_wins() {
        let ego = agent("ego", AgentCategory::Ego, 0.0, 0.0, 10.0);
        let a = agent("a", AgentCategory::Vehicle, 30.0, 0.0, 0.0);
        let b = agent("b", AgentCategory::Vehicle, 16.0, 0.0, 0.0);
        let g = compute_gap(&ego, &[&a, &b], 0, 1.5);
        assert!((g.value - 12.0).abs() < 1e-9);
        assert_eq!(g.other.as_deref(), Some("b"));
    }

    #[test]
    fn stationary_ego_has_no_gap() {
        let ego = agent("ego", AgentCategory::Ego, 0.0, 0.0, 0.0);
        let a = agent("a", AgentCategory::Vehicle, 10.0, 0.0, 0.0);
        assert!(!compute_gap(&ego, &[&a], 0, 1.5).defined);
    }
}
