use super::{MetricId, MetricSample};
use crate::scenario::AgentTrack;

/// Forward-difference speed. The last frame of every valid run repeats its
/// predecessor; single-frame runs stay undefined.
pub fn compute_vel(track: &AgentTrack, dt: f64) -> Vec<MetricSample> {
    let id = track.agent_id.as_str();
    let mut out: Vec<MetricSample> = (0..track.states.len())
        .map(|f| MetricSample::undefined(MetricId::Vel, id, None, f))
        .collect();
    for run in track.valid_runs() {
        if run.len() < 2 {
            continue;
        }
        for f in run.start..run.end - 1 {
            let d = track.position(f + 1).distance(track.position(f));
            out[f] = MetricSample::new(MetricId::Vel, id, None, f, d / dt);
        }
        let last = run.end - 1;
        out[last] = MetricSample::new(MetricId::Vel, id, None, last, out[last - 1].value);
    }
    out
}

fn defined_runs(series: &[MetricSample]) -> Vec<std::ops::Range<usize>> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, s) in series.iter().enumerate() {
        match (s.defined, start) {
            (true, None) => start = Some(i),
            (false, Some(b)) => {
                runs.push(b..i);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(b) = start {
        runs.push(b..series.len());
    }
    runs
}

/// Forward-difference acceleration over a VEL series.
///
/// The final VEL sample of each run is a copy, so differencing into it would
/// report a spurious zero. The last two frames of a run instead repeat the
/// last genuine difference.
pub fn compute_acc(vel: &[MetricSample], dt: f64) -> Vec<MetricSample> {
    let subject = vel.first().map(|s| s.subject.as_str()).unwrap_or("");
    let mut out: Vec<MetricSample> = (0..vel.len())
        .map(|f| MetricSample::undefined(MetricId::Acc, subject, None, f))
        .collect();
    for run in defined_runs(vel) {
        let n = run.len();
        if n < 2 {
            continue;
        }
        let diff = |f: usize| (vel[f + 1].value - vel[f].value) / dt;
        let genuine_end = if n == 2 { run.start + 1 } else { run.end - 2 };
        for f in run.start..genuine_end {
            out[f] = MetricSample::new(MetricId::Acc, subject, None, f, diff(f));
        }
        let carry = out[genuine_end - 1].value;
        for f in genuine_end..run.end {
            out[f] = MetricSample::new(MetricId::Acc, subject, None, f, carry);
        }
    }
    out
}

/// VEL and ACC series of one agent, plus the speed/acceleration inputs used
/// by motion prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentKinematics {
    pub vel: Vec<MetricSample>,
    pub acc: Vec<MetricSample>,
    measured_speed: Vec<Option<f64>>,
}

impl AgentKinematics {
    pub fn new(track: &AgentTrack, dt: f64) -> Self {
        let vel = compute_vel(track, dt);
        let acc = compute_acc(&vel, dt);
        Self {
            vel,
            acc,
            measured_speed: track.states.iter().map(|s| s.speed).collect(),
        }
    }

    /// Recorded speed when present, otherwise VEL; 0 if neither exists.
    pub fn speed(&self, frame: usize) -> f64 {
        self.measured_speed
            .get(frame)
            .copied()
            .flatten()
            .or_else(|| self.vel.get(frame).and_then(MetricSample::value))
            .unwrap_or(0.0)
    }

    /// ACC at `frame`, or 0 where undefined.
    pub fn accel(&self, frame: usize) -> f64 {
        self.acc
            .get(frame)
            .and_then(MetricSample::value)
            .unwrap_or(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec2;
    use crate::scenario::{AgentCategory, AgentState};

    fn track(xs: &[f64], valid: Vec<bool>) -> AgentTrack {
        AgentTrack {
            agent_id: "a".into(),
            category: AgentCategory::Vehicle,
            length: 4.0,
            width: 2.0,
            states: xs
                .iter()
                .map(|&x| AgentState {
                    position: Vec2::new(x, 0.0),
                    heading: 0.0,
                    speed: None,
                })
                .collect(),
            valid,
        }
    }

    fn vel_series(values: &[Option<f64>]) -> Vec<MetricSample> {
        values
            .iter()
            .enumerate()
            .map(|(f, v)| match v {
                Some(x) => MetricSample::new(MetricId::Vel, "a", None, f, *x),
                None => MetricSample::undefined(MetricId::Vel, "a", None, f),
            })
            .collect()
    }

    #[test]
    fn unit_step_is_ten_metres_per_second() {
        let v = compute_vel(&track(&[0.0, 1.0], vec![true; 2]), 0.1);
        assert!((v[0].value - 10.0).abs() < 1e-12);
        assert_eq!(v[1].value, v[0].value);
    }

    #[test]
    fn stationary_agent_has_zero_speed() {
        let v = compute_vel(&track(&[3.0; 5], vec![true; 5]), 0.1);
        assert!(v.iter().all(|s| s.defined && s.value == 0.0));
    }

    #[test]
    fn quadratic_track_midpoint_speed() {
        let xs: Vec<f64> = (0..20).map(|i| (i as f64 * 0.1).powi(2)).collect();
        let v = compute_vel(&track(&xs, vec![true; 20]), 0.1);
        assert!((v[10].value - 2.1).abs() < 1e-9);
    }

    #[test]
    fn gaps_split_runs() {
        let v = compute_vel(
            &track(&[0.0, 1.0, 9.0, 3.0, 4.0, 7.0], vec![true, true, false, true, false, true]),
            1.0,
        );
        let d: Vec<bool> = v.iter().map(|s| s.defined).collect();
        assert_eq!(d, vec![true, true, false, false, false, false]);
    }

    #[test]
    fn acc_examples() {
        let a = compute_acc(&vel_series(&[Some(5.0), Some(5.7), Some(5.7)]), 0.1);
        assert!((a[0].value - 7.0).abs() < 1e-9);
        let a = compute_acc(&vel_series(&[Some(8.0), Some(7.3), Some(7.3)]), 0.1);
        assert!((a[0].value + 7.0).abs() < 1e-9);
        let a = compute_acc(&vel_series(&[Some(10.0); 6]), 0.1);
        assert!(a.iter().all(|s| s.defined && s.value == 0.0));
    }

    #[test]
    fn acc_tail_repeats_last_genuine_difference() {
        let a = compute_acc(
            &vel_series(&[Some(1.0), Some(2.0), Some(4.0), Some(4.0), None, Some(3.0)]),
            1.0,
        );
        let vals: Vec<Option<f64>> = a.iter().map(MetricSample::value).collect();
        assert_eq!(
            vals,
            vec![Some(1.0), Some(2.0), Some(2.0), Some(2.0), None, None]
        );
    }

    #[test]
    fn speed_prefers_measured_value() {
        let mut t = track(&[0.0, 1.0, 2.0], vec![true; 3]);
        t.states[1].speed = Some(3.5);
        let k = AgentKinematics::new(&t, 0.1);
        assert_eq!(k.speed(1), 3.5);
        assert!((k.speed(0) - 10.0).abs() < 1e-12);
        assert_eq!(k.accel(0), 0.0);
    }
}
