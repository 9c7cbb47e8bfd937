use super::{MetricId, MetricSample};
use crate::geometry::PathParam;
use crate::scenario::{AgentTrack, BoundaryStyle, Lane, MapData};

fn matched_lane<'m>(map: &'m MapData, vehicle: &AgentTrack, frame: usize) -> Option<(&'m Lane, PathParam)> {
    let center = vehicle.position(frame);
    let mut best: Option<(f64, &Lane, PathParam)> = None;
    for lane in &map.lanes {
        let Ok(path) = PathParam::new(lane.centerline.clone()) else {
            continue;
        };
        let d = path.project(center).distance;
        if best.as_ref().is_none_or(|(bd, _, _)| d < *bd) {
            best = Some((d, lane, path));
        }
    }
    best.map(|(_, l, p)| (l, p))
}

/// Penetration depth of the vehicle past a solid boundary of its lane.
///
/// The lane is the one whose centerline lies closest to the vehicle. Depth is
/// the largest distance any corner sits on the far side of the boundary,
/// clamped at zero; the maximum over the lane's solid boundaries is reported.
pub fn compute_slc(vehicle: &AgentTrack, map: &MapData, frame: usize) -> MetricSample {
    let undefined = MetricSample::undefined(MetricId::Slc, &vehicle.agent_id, None, frame);
    if !vehicle.is_valid(frame) {
        return undefined;
    }
    let Some((lane, centerline)) = matched_lane(map, vehicle, frame) else {
        return undefined;
    };
    let on_center = centerline
        .point_at_arclength(centerline.project(vehicle.position(frame)).s)
        .map(|(p, _)| p)
        .unwrap_or(lane.centerline[0]);
    let corners = vehicle.footprint(frame).corners();

    let mut best: Option<(f64, &str)> = None;
    for id in [&lane.left_boundary, &lane.right_boundary].into_iter().flatten() {
        let Some(b) = map.boundary(id) else { continue };
        if b.style != BoundaryStyle::Solid {
            continue;
        }
        let Ok(line) = PathParam::new(b.polyline.clone()) else {
            continue;
        };
        // lane side of the line
        let side = line.project(on_center).lateral.signum();
        if side == 0.0 {
            continue;
        }
        let depth = corners
            .iter()
            .map(|&c| -side * line.project(c).lateral)
            .fold(0.0, f64::max);
        if best.is_none_or(|(d, _)| depth > d) {
            best = Some((depth, &b.boundary_id));
        }
    }
    match best {
        Some((d, id)) => MetricSample::new(MetricId::Slc, &vehicle.agent_id, Some(id), frame, d),
        None => undefined,
    }
}
