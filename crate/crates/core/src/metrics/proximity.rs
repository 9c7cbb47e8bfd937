use super::{AgentKinematics, MetricError, MetricId, MetricSample};
use crate::geometry::{box_distance, box_witness, polygon_distance, polygon_intersects_box, Vec2};
use crate::scenario::{AgentCategory, AgentTrack, Crosswalk};

pub const DEFAULT_PROXIMITY_RADIUS_M: f64 = 5.0;

/// Lateral and longitudinal clearance between a vehicle and a cyclist or
/// pedestrian, decomposed in the vehicle's heading frame.
pub fn compute_dtx(
    vehicle: &AgentTrack,
    target: &AgentTrack,
    frame: usize,
) -> Result<(MetricSample, MetricSample), MetricError> {
    dtx_with_radius(vehicle, target, frame, DEFAULT_PROXIMITY_RADIUS_M)
}

pub(crate) fn dtx_with_radius(
    vehicle: &AgentTrack,
    target: &AgentTrack,
    frame: usize,
    radius: f64,
) -> Result<(MetricSample, MetricSample), MetricError> {
    let (lat_id, lon_id) = match target.category {
        AgentCategory::Bicycle => (MetricId::Ladtb, MetricId::Lodtb),
        AgentCategory::Pedestrian => (MetricId::Ladtp, MetricId::Lodtp),
        other => {
            return Err(MetricError::Category {
                agent_id: target.agent_id.clone(),
                category: other.as_str(),
            })
        }
    };
    let v = vehicle.agent_id.as_str();
    let t = Some(target.agent_id.as_str());
    let undefined = || {
        (
            MetricSample::undefined(lat_id, v, t, frame),
            MetricSample::undefined(lon_id, v, t, frame),
        )
    };
    if !vehicle.is_valid(frame) || !target.is_valid(frame) {
        return Ok(undefined());
    }
    let w = box_witness(&vehicle.footprint(frame), &target.footprint(frame));
    if w.distance > radius {
        return Ok(undefined());
    }
    let d = w.on_b - w.on_a;
    let fwd = Vec2::from_heading(vehicle.states[frame].heading);
    Ok((
        MetricSample::new(lat_id, v, t, frame, fwd.cross(d).abs()),
        MetricSample::new(lon_id, v, t, frame, fwd.dot(d).abs()),
    ))
}

/// Vehicle-to-pedestrian distance while the vehicle occupies a crosswalk.
///
/// One sample per (crosswalk, pedestrian) for every pedestrian inside or near
/// a crosswalk the vehicle touches. An empty result means undefined.
pub fn compute_dtpnz(
    vehicle: &AgentTrack,
    pedestrians: &[&AgentTrack],
    crosswalks: &[Crosswalk],
    frame: usize,
) -> Vec<MetricSample> {
    dtpnz_with_radius(vehicle, pedestrians, crosswalks, frame, DEFAULT_PROXIMITY_RADIUS_M)
}

pub(crate) fn dtpnz_with_radius(
    vehicle: &AgentTrack,
    pedestrians: &[&AgentTrack],
    crosswalks: &[Crosswalk],
    frame: usize,
    radius: f64,
) -> Vec<MetricSample> {
    let mut out = Vec::new();
    if !vehicle.is_valid(frame) {
        return out;
    }
    let vb = vehicle.footprint(frame);
    for cw in crosswalks {
        if !polygon_intersects_box(&cw.polygon, &vb) {
            continue;
        }
        for p in pedestrians {
            if !p.is_valid(frame) || polygon_distance(&cw.polygon, p.position(frame)) > radius {
                continue;
            }
            out.push(MetricSample::new(
                MetricId::Dtpnz,
                &vehicle.agent_id,
                Some(&p.agent_id),
                frame,
                box_distance(&vb, &p.footprint(frame)),
            ));
        }
    }
    out
}

/// Vehicle speed while it occupies a crosswalk; `other` names the first
/// crosswalk touched.
pub fn compute_voz(
    vehicle: &AgentTrack,
    vel: &[MetricSample],
    crosswalks: &[Crosswalk],
    frame: usize,
) -> MetricSample {
    let undefined = MetricSample::undefined(MetricId::Voz, &vehicle.agent_id, None, frame);
    if !vehicle.is_valid(frame) {
        return undefined;
    }
    let Some(speed) = vel.get(frame).and_then(MetricSample::value) else {
        return undefined;
    };
    let vb = vehicle.footprint(frame);
    match crosswalks
        .iter()
        .find(|cw| polygon_intersects_box(&cw.polygon, &vb))
    {
        Some(cw) => MetricSample::new(
            MetricId::Voz,
            &vehicle.agent_id,
            Some(&cw.crosswalk_id),
            frame,
            speed,
        ),
        None => undefined,
    }
}

pub(crate) fn voz_from_vel(
    vehicle: &AgentTrack,
    kin: &AgentKinematics,
    crosswalks: &[Crosswalk],
    frame: usize,
) -> MetricSample {
    compute_voz(vehicle, &kin.vel, crosswalks, frame)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::compute_vel;
    use crate::scenario::AgentState;

    fn single(id: &str, cat: AgentCategory, x: f64, y: f64, size: (f64, f64)) -> AgentTrack {
        AgentTrack {
            agent_id: id.into(),
            category: cat,
            length: size.0,
            width: size.1,
            states: vec![AgentState {
                position: Vec2::new(x, y),
                heading: 0.0,
                speed: None,
            }],
            valid: vec![true],
        }
    }

    fn crosswalk(x0: f64, x1: f64) -> Crosswalk {
        Crosswalk {
            crosswalk_id: "cw".into(),
            polygon: vec![
                Vec2::new(x0, -5.0),
                Vec2::new(x1, -5.0),
                Vec2::new(x1, 5.0),
                Vec2::new(x0, 5.0),
            ],
        }
    }

    #[test]
    fn cyclist_beside_vehicle() {
        let car = single("car", AgentCategory::Vehicle, 0.0, 0.0, (4.0, 2.0));
        let bike = single("bike", AgentCategory::Bicycle, 0.0, 2.2, (0.0, 0.0));
        let (lat, lon) = compute_dtx(&car, &bike, 0).unwrap();
        assert_eq!(lat.metric, MetricId::Ladtb);
        assert!((lat.value - 1.2).abs() < 1e-9);
        assert!(lon.value.abs() < 1e-9);
    }

    #[test]
    fn pedestrian_ahead_and_out_of_range() {
        let car = single("car", AgentCategory::Vehicle, 0.0, 0.0, (4.0, 2.0));
        let ahead = single("p", AgentCategory::Pedestrian, 5.0, 0.0, (0.0, 0.0));
        let (lat, lon) = compute_dtx(&car, &ahead, 0).unwrap();
        assert_eq!(lon.metric, MetricId::Lodtp);
        assert!((lon.value - 3.0).abs() < 1e-9 && lat.value.abs() < 1e-9);
        let far = single("p", AgentCategory::Pedestrian, 0.0, 7.0, (0.0, 0.0));
        let (lat, _) = compute_dtx(&car, &far, 0).unwrap();
        assert!(!lat.defined);
    }

    #[test]
    fn vehicle_target_is_a_category_error() {
        let car = single("car", AgentCategory::Vehicle, 0.0, 0.0, (4.0, 2.0));
        assert!(matches!(
            compute_dtx(&car, &car, 0),
            Err(MetricError::Category { .. })
        ));
    }

    #[test]
    fn dtpnz_requires_crosswalk_contact() {
        let ped = single("p", AgentCategory::Pedestrian, 4.0, 0.0, (0.0, 0.0));
        let on = single("car", AgentCategory::Vehicle, 0.0, 0.0, (4.0, 2.0));
        let s = compute_dtpnz(&on, &[&ped], &[crosswalk(1.0, 6.0)], 0);
        assert_eq!(s.len(), 1);
        assert!((s[0].value - 2.0).abs() < 1e-9);
        let off = single("car", AgentCategory::Vehicle, -10.0, 0.0, (4.0, 2.0));
        assert!(compute_dtpnz(&off, &[&ped], &[crosswalk(1.0, 6.0)], 0).is_empty());
    }

    #[test]
    fn dtpnz_edge_straddle() {
        // front bumper at x = 2.0 overlaps the crosswalk starting at 1.99
        let car = single("car", AgentCategory::Vehicle, 0.0, 0.0, (4.0, 2.0));
        let ped = single("p", AgentCategory::Pedestrian, 3.4, 0.0, (0.0, 0.0));
        let s = compute_dtpnz(&car, &[&ped], &[crosswalk(1.99, 6.0)], 0);
        assert!((s[0].value - 1.4).abs() < 1e-9);
        assert!(s[0].value < 1.5);
    }

    #[test]
    fn voz_reports_speed_on_crosswalk() {
        let mut car = single("car", AgentCategory::Vehicle, 0.0, 0.0, (4.0, 2.0));
        car.states.push(AgentState {
            position: Vec2::new(0.4, 0.0),
            ..car.states[0]
        });
        car.valid.push(true);
        let vel = compute_vel(&car, 0.1);
        let s = compute_voz(&car, &vel, &[crosswalk(-1.0, 1.0)], 0);
        assert!((s.value - 4.0).abs() < 1e-9);
        assert_eq!(s.other.as_deref(), Some("cw"));
        assert!(!compute_voz(&car, &vel, &[crosswalk(10.0, 12.0)], 0).defined);

        let parked = single("car", AgentCategory::Vehicle, 0.0, 0.0, (4.0, 2.0));
        let mut parked2 = parked.clone();
        parked2.states.push(parked.states[0]);
        parked2.valid.push(true);
        let vel = compute_vel(&parked2, 0.1);
        assert_eq!(compute_voz(&parked2, &vel, &[crosswalk(-1.0, 1.0)], 0).value(), Some(0.0));
    }
}
