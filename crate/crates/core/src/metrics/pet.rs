use serde::{Deserialize, Serialize};

use super::{MetricError, MetricId, MetricSample};
use crate::geometry::{polygon_intersects_box, polygon_is_simple, polygon_signed_area, Vec2};
use crate::scenario::AgentTrack;

/// Below this |sin| of the crossing angle two paths count as parallel and no
/// conflict area is derived.
const MIN_CROSSING_SIN: f64 = 0.1;
/// Corridor width assumed for point agents when deriving a conflict area.
const MIN_CORRIDOR_WIDTH_M: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConflictAreaSource {
    Supplied,
    Derived,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConflictArea {
    pub first: String,
    pub second: String,
    pub polygon: Vec<Vec2>,
    pub source: ConflictAreaSource,
}

fn recorded_path(t: &AgentTrack) -> Vec<Vec2> {
    (0..t.states.len())
        .filter(|&f| t.is_valid(f))
        .map(|f| t.position(f))
        .collect()
}

/// Intersection point of two segments, if they properly cross or touch.
fn segment_crossing(p0: Vec2, p1: Vec2, q0: Vec2, q1: Vec2) -> Option<Vec2> {
    let r = p1 - p0;
    let s = q1 - q0;
    let denom = r.cross(s);
    if denom == 0.0 {
        return None;
    }
    let t = (q0 - p0).cross(s) / denom;
    let u = (q0 - p0).cross(r) / denom;
    ((0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u)).then(|| p0 + r * t)
}

/// Best-effort conflict area: the parallelogram where the two agents' swept
/// corridors cross at the first intersection of their recorded paths.
pub fn derive_conflict_area(a: &AgentTrack, b: &AgentTrack) -> Option<ConflictArea> {
    let pa = recorded_path(a);
    let pb = recorded_path(b);
    for wa in pa.windows(2) {
        if wa[0] == wa[1] {
            continue;
        }
        for wb in pb.windows(2) {
            if wb[0] == wb[1] {
                continue;
            }
            let Some(c) = segment_crossing(wa[0], wa[1], wb[0], wb[1]) else {
                continue;
            };
            let u = (wa[1] - wa[0]) * (1.0 / (wa[1] - wa[0]).norm());
            let v = (wb[1] - wb[0]) * (1.0 / (wb[1] - wb[0]).norm());
            let sin = u.cross(v).abs();
            if sin < MIN_CROSSING_SIN {
                continue;
            }
            let half_a = a.width.max(MIN_CORRIDOR_WIDTH_M) / 2.0 / sin;
            let half_b = b.width.max(MIN_CORRIDOR_WIDTH_M) / 2.0 / sin;
            let du = u * half_b;
            let dv = v * half_a;
            return Some(ConflictArea {
                first: a.agent_id.clone(),
                second: b.agent_id.clone(),
                polygon: vec![c + du + dv, c - du + dv, c - du - dv, c + du - dv],
                source: ConflictAreaSource::Derived,
            });
        }
    }
    None
}

fn check_area(poly: &[Vec2]) -> Result<(), MetricError> {
    if poly.len() < 3 || poly.iter().any(|p| !p.is_finite()) {
        return Err(MetricError::InvalidConflictArea(
            "needs at least 3 finite vertices".into(),
        ));
    }
    if !polygon_is_simple(poly) {
        return Err(MetricError::InvalidConflictArea("polygon is not simple".into()));
    }
    if polygon_signed_area(poly) == 0.0 {
        return Err(MetricError::InvalidConflictArea("polygon has zero area".into()));
    }
    Ok(())
}

/// Post-encroachment time from `a` leaving the conflict area to `b` entering
/// it, taken over the closest such exit/entry pair. Undefined if the agents
/// ever occupy the area at the same frame.
pub fn compute_pet(
    a: &AgentTrack,
    b: &AgentTrack,
    conflict_area: &[Vec2],
    dt: f64,
) -> Result<MetricSample, MetricError> {
    check_area(conflict_area)?;
    let frames = a.states.len().min(b.states.len());
    let occupies = |t: &AgentTrack, f: usize| {
        t.is_valid(f) && polygon_intersects_box(conflict_area, &t.footprint(f))
    };
    let undefined = MetricSample::undefined(MetricId::Pet, &a.agent_id, Some(&b.agent_id), 0);

    let mut last_a: Option<usize> = None;
    let mut last_was_a = false;
    let mut best: Option<(usize, usize)> = None;
    for f in 0..frames {
        let (oa, ob) = (occupies(a, f), occupies(b, f));
        if oa && ob {
            return Ok(undefined);
        }
        if oa {
            last_a = Some(f);
            last_was_a = true;
        } else if ob {
            if let (true, Some(xa)) = (last_was_a, last_a) {
                if best.is_none_or(|(bx, be)| f - xa < be - bx) {
                    best = Some((xa, f));
                }
            }
            last_was_a = false;
        }
    }
    Ok(match best {
        Some((xa, eb)) => MetricSample::new(
            MetricId::Pet,
            &a.agent_id,
            Some(&b.agent_id),
            eb,
            (eb - xa) as f64 * dt,
        ),
        None => undefined,
    })
}
