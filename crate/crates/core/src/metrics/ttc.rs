use serde::{Deserialize, Serialize};

use super::{AgentKinematics, MetricError, MetricId, MetricSample};
use crate::geometry::{boxes_intersect, OrientedBox, PathParam, Vec2};
use crate::scenario::AgentTrack;

/// Recorded points closer than this to the previous kept point are dropped.
const PATH_DEDUP_M: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TtcConfig {
    /// Candidate prediction horizons in seconds, strictly increasing.
    pub grid: Vec<f64>,
    /// Contact is also checked between horizons at this spacing, so a fast
    /// pass-through between two horizons still reports the later one. `None`
    /// checks the horizons only.
    #[serde(default)]
    pub substep: Option<f64>,
}

pub const DEFAULT_TTC_SUBSTEP_S: f64 = 0.01;

impl Default for TtcConfig {
    fn default() -> Self {
        Self::with_horizon(0.5, 40.0).expect("default grid is valid")
    }
}

impl TtcConfig {
    pub fn with_horizon(step: f64, max: f64) -> Result<Self, String> {
        if !(step > 0.0 && max >= step && step.is_finite() && max.is_finite()) {
            return Err(format!("invalid TTC grid step {step} / max {max}"));
        }
        let n = (max / step + 1e-9).floor() as usize;
        Ok(Self {
            grid: (1..=n).map(|k| k as f64 * step).collect(),
            substep: Some(DEFAULT_TTC_SUBSTEP_S),
        })
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.grid.is_empty() {
            return Err("TTC grid is empty".into());
        }
        if self.grid[0] <= 0.0 || self.grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err("TTC grid must be positive and strictly increasing".into());
        }
        if let Some(h) = self.substep {
            if !(h > 0.0 && h.is_finite()) {
                return Err(format!("invalid TTC substep {h}"));
            }
        }
        Ok(())
    }
}

/// Polyline of the recorded positions from `from_frame` to the last valid
/// frame, skipping invalid frames and near-duplicate points.
pub fn build_reference_path(track: &AgentTrack, from_frame: usize) -> Result<PathParam, MetricError> {
    if !track.is_valid(from_frame) {
        return Err(MetricError::DegeneratePath);
    }
    let mut pts: Vec<Vec2> = Vec::new();
    for f in from_frame..track.states.len() {
        if !track.is_valid(f) {
            continue;
        }
        let p = track.position(f);
        match pts.last() {
            Some(&q) if q.distance(p) < PATH_DEDUP_M => {}
            _ => pts.push(p),
        }
    }
    PathParam::new(pts).map_err(|_| MetricError::DegeneratePath)
}

/// Distance covered after `t` seconds under constant acceleration, with the
/// speed held at zero once braking brings the agent to rest.
pub fn displacement(v: f64, a: f64, t: f64) -> f64 {
    let v = v.max(0.0);
    if a < 0.0 && t * -a >= v {
        return v * v / (2.0 * -a);
    }
    v * t + 0.5 * a * t * t
}

/// Predicted motion of one agent from an evaluation frame onward.
#[derive(Debug, Clone)]
pub struct Motion<'a> {
    track: &'a AgentTrack,
    origin: Vec2,
    heading: f64,
    path: Option<PathParam>,
    speed: f64,
    accel: f64,
}

impl<'a> Motion<'a> {
    /// `track` must be valid at `frame`.
    pub fn new(track: &'a AgentTrack, kin: &AgentKinematics, frame: usize) -> Self {
        let st = &track.states[frame];
        Self {
            track,
            origin: st.position,
            heading: st.heading,
            path: build_reference_path(track, frame).ok(),
            speed: kin.speed(frame),
            accel: kin.accel(frame),
        }
    }

    pub fn path(&self) -> Option<&PathParam> {
        self.path.as_ref()
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn accel(&self) -> f64 {
        self.accel
    }

    /// Arc length travelled after `t` seconds, clamped to the recorded path.
    pub fn travelled(&self, t: f64) -> f64 {
        match &self.path {
            Some(p) => displacement(self.speed, self.accel, t).clamp(0.0, p.total_length()),
            None => 0.0,
        }
    }

    pub fn footprint(&self, t: f64) -> OrientedBox {
        match &self.path {
            Some(p) => {
                let (pos, heading) = p
                    .point_at_arclength(self.travelled(t))
                    .expect("travelled distance is clamped to the path");
                self.track.footprint_at(pos, heading)
            }
            None => self.track.footprint_at(self.origin, self.heading),
        }
    }

    fn reach(&self) -> f64 {
        0.5 * self.track.length.hypot(self.track.width)
    }
}

fn touching(a: &Motion<'_>, b: &Motion<'_>, t: f64) -> bool {
    boxes_intersect(&a.footprint(t), &b.footprint(t))
}

pub(crate) fn ttc_between(a: &Motion<'_>, b: &Motion<'_>, cfg: &TtcConfig) -> Option<f64> {
    let Some(h) = cfg.substep else {
        return cfg.grid.iter().copied().find(|&t| touching(a, b, t));
    };
    let mut prev = 0.0;
    for &t in &cfg.grid {
        let (sa, sb) = (a.travelled(prev), b.travelled(prev));
        let span = a.travelled(t) - sa + b.travelled(t) - sb + a.reach() + b.reach();
        let gap = a.footprint(prev).center.distance(b.footprint(prev).center);
        if gap <= span {
            let n = ((t - prev) / h).ceil().max(1.0) as usize;
            let at = |k: usize| if k == n { t } else { prev + (t - prev) * k as f64 / n as f64 };
            if (1..=n).any(|k| touching(a, b, at(k))) {
                return Some(t);
            }
        }
        prev = t;
    }
    None
}

/// First grid horizon at which the predicted footprints overlap.
pub fn compute_ttc(
    ego: &AgentTrack,
    other: &AgentTrack,
    frame: usize,
    dt: f64,
    cfg: &TtcConfig,
) -> MetricSample {
    let undefined = MetricSample::undefined(MetricId::Ttc, &ego.agent_id, Some(&other.agent_id), frame);
    if !ego.is_valid(frame) || !other.is_valid(frame) {
        return undefined;
    }
    let ke = AgentKinematics::new(ego, dt);
    let ko = AgentKinematics::new(other, dt);
    let me = Motion::new(ego, &ke, frame);
    let mo = Motion::new(other, &ko, frame);
    match ttc_between(&me, &mo, cfg) {
        Some(t) => MetricSample::new(MetricId::Ttc, &ego.agent_id, Some(&other.agent_id), frame, t),
        None => undefined,
    }
}
