//! Synthetic scenarios with analytically known metric values.
//!
//! Every generated scenario is canonical (11 s at 10 Hz) and comes with a list
//! of [`ExpectedValue`]s the metric engine must reproduce. Case parameters are
//! quantized to centimetres so recorded positions survive the six-decimal
//! canonical format exactly.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec2;
use crate::metrics::{displacement, MetricId, MetricSample};
use crate::scenario::{
    parse_scenario, save_scenario, to_canonical_json, AgentCategory, AgentState, AgentTrack,
    BoundaryLine, BoundaryStyle, Crosswalk, Lane, LaneType, MapData, Scenario, ScenarioError,
    ScenarioMeta, CANONICAL_FRAME_COUNT, CANONICAL_RATE_HZ,
};

const DT: f64 = 1.0 / CANONICAL_RATE_HZ;
const FRAMES: usize = CANONICAL_FRAME_COUNT;
const EGO_LENGTH: f64 = 4.0;
const EGO_WIDTH: f64 = 2.0;
const MAIN_HALF_WIDTH: f64 = 1.75;
/// Slack used to stay clear of tangencies when deriving expectations.
const MARGIN: f64 = 1e-3;
const DIST_TOL: f64 = 0.002;
const KIN_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid parameter `{field}`: {message}")]
    Parameter { field: String, message: String },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn param_err(field: &str, message: impl Into<String>) -> SynthError {
    SynthError::Parameter {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseKind {
    CarFollowing,
    CrossingPaths,
    CyclistOvertake,
    CrosswalkApproach,
    SolidLineDrift,
    StationaryField,
}

impl CaseKind {
    pub const ALL: [CaseKind; 6] = [
        CaseKind::CarFollowing,
        CaseKind::CrossingPaths,
        CaseKind::CyclistOvertake,
        CaseKind::CrosswalkApproach,
        CaseKind::SolidLineDrift,
        CaseKind::StationaryField,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseKind::CarFollowing => "car_following",
            CaseKind::CrossingPaths => "crossing_paths",
            CaseKind::CyclistOvertake => "cyclist_overtake",
            CaseKind::CrosswalkApproach => "crosswalk_approach",
            CaseKind::SolidLineDrift => "solid_line_drift",
            CaseKind::StationaryField => "stationary_field",
        }
    }
}

impl FromStr for CaseKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CaseKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = CaseKind::ALL.iter().map(|k| k.as_str()).collect();
                format!("unknown case kind `{s}` (expected one of {})", names.join(", "))
            })
    }
}

/// Kind-specific parameters. Distances in metres, speeds in m/s,
/// accelerations in m/s².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CaseParams {
    /// Ego behind a lead vehicle in the same lane; `gap` is front-to-rear.
    CarFollowing {
        gap: f64,
        v_ego: f64,
        a_ego: f64,
        v_lead: f64,
        a_lead: f64,
    },
    /// Ego heading +x and a second vehicle heading +y cross at the origin.
    CrossingPaths {
        d_ego: f64,
        v_ego: f64,
        d_other: f64,
        v_other: f64,
    },
    /// Ego passes a cyclist riding beside its lane with edge-to-edge
    /// lateral `clearance`; the cyclist starts `lead` metres ahead.
    CyclistOvertake {
        clearance: f64,
        v_ego: f64,
        v_bike: f64,
        lead: f64,
    },
    /// Ego drives through a crosswalk `distance` ahead while a pedestrian
    /// stands on it `ped_lateral` metres beside the ego's side.
    CrosswalkApproach {
        v: f64,
        ped_lateral: f64,
        distance: f64,
    },
    /// Ego drives with its centre `offset` left of the lane centre; the left
    /// lane boundary is solid at `line_y`.
    SolidLineDrift {
        offset: f64,
        width: f64,
        line_y: f64,
        v: f64,
    },
    /// Parked ego among `parked` parked vehicles.
    StationaryField { parked: usize },
}

impl CaseParams {
    pub fn kind(&self) -> CaseKind {
        match self {
            CaseParams::CarFollowing { .. } => CaseKind::CarFollowing,
            CaseParams::CrossingPaths { .. } => CaseKind::CrossingPaths,
            CaseParams::CyclistOvertake { .. } => CaseKind::CyclistOvertake,
            CaseParams::CrosswalkApproach { .. } => CaseKind::CrosswalkApproach,
            CaseParams::SolidLineDrift { .. } => CaseKind::SolidLineDrift,
            CaseParams::StationaryField { .. } => CaseKind::StationaryField,
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        let speed = |f: &str, v: f64| check_range(f, v, 0.0, 40.0);
        let dist = |f: &str, v: f64| check_range(f, v, 0.0, 100.0);
        let accel = |f: &str, v: f64| check_range(f, v, -10.0, 10.0);
        match *self {
            CaseParams::CarFollowing {
                gap,
                v_ego,
                a_ego,
                v_lead,
                a_lead,
            } => {
                dist("gap", gap)?;
                speed("v_ego", v_ego)?;
                speed("v_lead", v_lead)?;
                accel("a_ego", a_ego)?;
                accel("a_lead", a_lead)
            }
            CaseParams::CrossingPaths {
                d_ego,
                v_ego,
                d_other,
                v_other,
            } => {
                dist("d_ego", d_ego)?;
                dist("d_other", d_other)?;
                speed("v_ego", v_ego)?;
                speed("v_other", v_other)
            }
            CaseParams::CyclistOvertake {
                clearance,
                v_ego,
                v_bike,
                lead,
            } => {
                check_range("clearance", clearance, 0.05, 5.0)?;
                speed("v_ego", v_ego)?;
                speed("v_bike", v_bike)?;
                dist("lead", lead)
            }
            CaseParams::CrosswalkApproach {
                v,
                ped_lateral,
                distance,
            } => {
                speed("v", v)?;
                check_range("ped_lateral", ped_lateral, 0.05, 4.0)?;
                dist("distance", distance)
            }
            CaseParams::SolidLineDrift {
                offset,
                width,
                line_y,
                v,
            } => {
                check_range("offset", offset, -3.0, 3.0)?;
                check_range("width", width, 0.5, 3.0)?;
                check_range("line_y", line_y, 0.5, 3.0)?;
                speed("v", v)
            }
            CaseParams::StationaryField { parked } => {
                if parked > 40 {
                    return Err(param_err("parked", "at most 40 parked vehicles"));
                }
                Ok(())
            }
        }
    }
}

fn check_range(field: &str, v: f64, lo: f64, hi: f64) -> Result<(), SynthError> {
    if v.is_finite() && (lo..=hi).contains(&v) {
        Ok(())
    } else {
        Err(param_err(field, format!("{v} outside [{lo}, {hi}]")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthCase {
    pub scenario_id: String,
    pub params: CaseParams,
    /// Non-interacting vehicles on distant parallel lanes.
    pub background: usize,
    /// Standard deviation of Gaussian position noise; 0 disables noise.
    pub noise_sigma: f64,
    pub seed: u64,
}

/// A metric value the engine must reproduce on every frame of
/// `frame_range` (inclusive). `value: None` means no defined sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedValue {
    pub scenario_id: String,
    pub metric: MetricId,
    pub subject: String,
    pub other: Option<String>,
    pub frame_range: [usize; 2],
    pub value: Option<f64>,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub scenario: Scenario,
    pub expected: Vec<ExpectedValue>,
}

fn q(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn time(f: usize) -> f64 {
    f as f64 * DT
}

fn track(
    id: &str,
    category: AgentCategory,
    length: f64,
    width: f64,
    pose: impl Fn(f64) -> (Vec2, f64, f64),
) -> AgentTrack {
    let states = (0..FRAMES)
        .map(|f| {
            let (position, heading, speed) = pose(time(f));
            AgentState {
                position,
                heading,
                speed: Some(speed),
            }
        })
        .collect();
    AgentTrack {
        agent_id: id.into(),
        category,
        length,
        width,
        states,
        valid: vec![true; FRAMES],
    }
}

/// Constant-acceleration motion along +x (or +y with `vertical`).
fn straight(
    id: &str,
    category: AgentCategory,
    size: (f64, f64),
    start: Vec2,
    v: f64,
    a: f64,
    vertical: bool,
) -> AgentTrack {
    let (dir, heading) = if vertical {
        (Vec2::new(0.0, 1.0), std::f64::consts::FRAC_PI_2)
    } else {
        (Vec2::new(1.0, 0.0), 0.0)
    };
    track(id, category, size.0, size.1, move |t| {
        (start + dir * displacement(v, a, t), heading, (v + a * t).max(0.0))
    })
}

fn lane(id: &str, y: f64, left: Option<&str>, right: Option<&str>) -> Lane {
    Lane {
        lane_id: id.into(),
        lane_type: LaneType::Normal,
        centerline: vec![Vec2::new(-100.0, y), Vec2::new(700.0, y)],
        left_boundary: left.map(Into::into),
        right_boundary: right.map(Into::into),
        predecessors: vec![],
        successors: vec![],
        neighbors: vec![],
    }
}

fn boundary(id: &str, y: f64, style: BoundaryStyle) -> BoundaryLine {
    BoundaryLine {
        boundary_id: id.into(),
        style,
        polyline: vec![Vec2::new(-100.0, y), Vec2::new(700.0, y)],
    }
}

fn main_road(left_style: BoundaryStyle, line_y: f64) -> MapData {
    MapData {
        lanes: vec![lane("main", 0.0, Some("main_left"), Some("main_right"))],
        boundaries: vec![
            boundary("main_left", line_y, left_style),
            boundary("main_right", -line_y, BoundaryStyle::Dashed),
        ],
        crosswalks: vec![],
        restricted_areas: vec![],
    }
}

const BG_LANE_Y: f64 = 40.0;
const BG_LANE_SPACING: f64 = 4.0;
const BG_LANES: usize = 4;

fn add_background(map: &mut MapData, agents: &mut Vec<AgentTrack>, n: usize, rng: &mut ChaCha8Rng, moving: bool) {
    for k in 0..BG_LANES.min(n.max(1)) {
        map.lanes.push(lane(
            &format!("bg_lane_{k}"),
            BG_LANE_Y + BG_LANE_SPACING * k as f64,
            None,
            None,
        ));
    }
    for i in 0..n {
        let y = BG_LANE_Y + BG_LANE_SPACING * (i % BG_LANES) as f64;
        // staggered so vehicles sharing a lane stay apart
        let x = 100.0 + 25.0 * (i / BG_LANES) as f64 + q(rng.random_range(0.0..5.0));
        let v = if moving { q(rng.random_range(4.0..10.0)) } else { 0.0 };
        let x = if moving { x } else { x - 130.0 };
        agents.push(straight(
            &format!("bg_{i}"),
            AgentCategory::Vehicle,
            (4.5, 1.9),
            Vec2::new(x, y),
            v,
            0.0,
            false,
        ));
    }
}

/// Arc length of the recorded path after dropping points within 1 cm of the
/// previous kept point, as the engine does.
fn recorded_length(xs: &[f64]) -> f64 {
    let mut kept = xs[0];
    let mut total = 0.0;
    for &x in &xs[1..] {
        if (x - kept).abs() >= 0.01 {
            total += (x - kept).abs();
            kept = x;
        }
    }
    total
}

/// First grid horizon at which two same-lane vehicles touch, from a 0.01 s
/// sweep of the 1-D gap. `None` when a near-tangency makes the answer
/// sensitive to rounding.
fn following_ttc(
    gap0: f64,
    (ve, ae, de): (f64, f64, f64),
    (vl, al, dl): (f64, f64, f64),
    reach: f64,
) -> Option<Option<f64>> {
    for k in 1..=4000u32 {
        let t = k as f64 / 100.0;
        let se = displacement(ve, ae, t).clamp(0.0, de);
        let sl = displacement(vl, al, t).clamp(0.0, dl);
        // centre distance minus the touching distance
        let d = gap0 + reach + sl - se;
        if (d - reach).abs() < 1e-4 || (d + reach).abs() < 1e-4 {
            return None;
        }
        if d.abs() <= reach {
            return Some(Some((k as f64 / 50.0).ceil() * 0.5));
        }
    }
    Some(None)
}

fn frames_where(pred: impl Fn(usize) -> bool) -> Option<[usize; 2]> {
    let hits: Vec<usize> = (0..FRAMES).filter(|&f| pred(f)).collect();
    let (&a, &b) = (hits.first()?, hits.last()?);
    // callers only ask for contiguous ranges
    debug_assert_eq!(b - a + 1, hits.len());
    Some([a, b])
}

struct Ctx<'a> {
    id: &'a str,
    out: Vec<ExpectedValue>,
}

impl Ctx<'_> {
    fn expect(
        &mut self,
        metric: MetricId,
        subject: &str,
        other: Option<&str>,
        range: [usize; 2],
        value: Option<f64>,
        tolerance: f64,
    ) {
        self.out.push(ExpectedValue {
            scenario_id: self.id.to_owned(),
            metric,
            subject: subject.to_owned(),
            other: other.map(Into::into),
            frame_range: range,
            value,
            tolerance,
        });
    }
}

/// Expected forward-difference speed at frame 0 of constant-acceleration
/// motion.
fn vel0(v: f64, a: f64) -> f64 {
    displacement(v, a, DT) / DT
}

fn build(case: &SynthCase) -> Result<(Scenario, Vec<ExpectedValue>), SynthError> {
    case.params.validate()?;
    if !(case.noise_sigma.is_finite() && case.noise_sigma >= 0.0) {
        return Err(param_err("noise_sigma", "must be finite and >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(case.seed);
    let mut agents = Vec::new();
    let mut ctx = Ctx {
        id: &case.scenario_id,
        out: Vec::new(),
    };
    let ego_size = (EGO_LENGTH, EGO_WIDTH);
    let mut map;
    let mut moving_background = true;

    match case.params {
        CaseParams::CarFollowing {
            gap,
            v_ego,
            a_ego,
            v_lead,
            a_lead,
        } => {
            map = main_road(BoundaryStyle::Dashed, MAIN_HALF_WIDTH);
            let lead_x = EGO_LENGTH / 2.0 + gap + EGO_LENGTH / 2.0;
            agents.push(straight("ego", AgentCategory::Ego, ego_size, Vec2::ZERO, v_ego, a_ego, false));
            agents.push(straight(
                "lead",
                AgentCategory::Vehicle,
                ego_size,
                Vec2::new(lead_x, 0.0),
                v_lead,
                a_lead,
                false,
            ));
            let xs = |v: f64, a: f64| -> Vec<f64> { (0..FRAMES).map(|f| displacement(v, a, time(f))).collect() };
            let de = recorded_length(&xs(v_ego, a_ego));
            let dl = recorded_length(&xs(v_lead, a_lead));

            // acceleration is only recoverable while neither the stop nor the
            // first three frames interfere
            let stop_t = if a_ego < 0.0 { v_ego / -a_ego } else { f64::INFINITY };
            let early_stop = stop_t > 0.0 && stop_t < 0.35;
            if !early_stop {
                ctx.expect(MetricId::Vel, "ego", None, [0, 0], Some(vel0(v_ego, a_ego)), KIN_TOL);
                if stop_t.is_infinite() || v_ego > 0.0 {
                    let last = if stop_t.is_finite() {
                        ((stop_t / DT).floor() as usize).saturating_sub(2).min(FRAMES - 1)
                    } else {
                        FRAMES - 1
                    };
                    if stop_t.is_infinite() || last >= 1 {
                        ctx.expect(MetricId::Acc, "ego", None, [0, last], Some(a_ego), KIN_TOL);
                    }
                }
                let lead_stop = if a_lead < 0.0 { v_lead / -a_lead } else { f64::INFINITY };
                if !(lead_stop > 0.0 && lead_stop < 0.35) {
                    if let Some(ttc) = following_ttc(gap, (v_ego, a_ego, de), (v_lead, a_lead, dl), EGO_LENGTH) {
                        ctx.expect(MetricId::Ttc, "ego", Some("lead"), [0, 0], ttc, 0.0);
                    }
                }
            } else {
                ctx.expect(MetricId::Vel, "ego", None, [0, 0], Some(vel0(v_ego, a_ego)), KIN_TOL);
            }
            let rear = EGO_LENGTH / 2.0 + gap;
            if de >= rear + MARGIN {
                ctx.expect(MetricId::Gap, "ego", Some("lead"), [0, 0], Some(gap), DIST_TOL);
            } else if de + 1.2 < rear - MARGIN {
                ctx.expect(MetricId::Gap, "ego", None, [0, 0], None, 0.0);
            }
        }
        CaseParams::CrossingPaths {
            d_ego,
            v_ego,
            d_other,
            v_other,
        } => {
            map = main_road(BoundaryStyle::Dashed, MAIN_HALF_WIDTH);
            map.lanes.push(Lane {
                centerline: vec![Vec2::new(0.0, -100.0), Vec2::new(0.0, 30.0)],
                ..lane("cross", 0.0, None, None)
            });
            agents.push(straight("ego", AgentCategory::Ego, ego_size, Vec2::new(-d_ego, 0.0), v_ego, 0.0, false));
            agents.push(straight(
                "cross",
                AgentCategory::Vehicle,
                ego_size,
                Vec2::new(0.0, -d_other),
                v_other,
                0.0,
                true,
            ));
            // conflict area is |x| <= w/2, |y| <= w/2; a box occupies it while
            // its centre is within (length + width) / 2 of the crossing
            let reach = (EGO_LENGTH + EGO_WIDTH) / 2.0;
            let ego_c = |f: usize| -d_ego + v_ego * time(f);
            let oth_c = |f: usize| -d_other + v_other * time(f);
            let near = (0..FRAMES).any(|f| {
                (ego_c(f).abs() - reach).abs() < 1e-6 || (oth_c(f).abs() - reach).abs() < 1e-6
            });
            let both_reach = ego_c(FRAMES - 1) > 0.0 && oth_c(FRAMES - 1) > 0.0 && v_ego > 0.0 && v_other > 0.0;
            if !near && both_reach {
                let occ_a: Vec<bool> = (0..FRAMES).map(|f| ego_c(f).abs() <= reach).collect();
                let occ_b: Vec<bool> = (0..FRAMES).map(|f| oth_c(f).abs() <= reach).collect();
                let overlap = (0..FRAMES).any(|f| occ_a[f] && occ_b[f]);
                let last_a = occ_a.iter().rposition(|&o| o);
                let first_b = occ_b.iter().position(|&o| o);
                match (overlap, last_a, first_b) {
                    (false, Some(xa), Some(eb)) if eb > xa => ctx.expect(
                        MetricId::Pet,
                        "ego",
                        Some("cross"),
                        [eb, eb],
                        Some((eb - xa) as f64 * DT),
                        1e-9,
                    ),
                    _ => ctx.expect(MetricId::Pet, "ego", Some("cross"), [0, FRAMES - 1], None, 0.0),
                }
            }
            ctx.expect(MetricId::Vel, "ego", None, [0, FRAMES - 1], Some(v_ego), KIN_TOL);
        }
        CaseParams::CyclistOvertake {
            clearance,
            v_ego,
            v_bike,
            lead,
        } => {
            map = main_road(BoundaryStyle::Dashed, MAIN_HALF_WIDTH);
            let (bl, bw) = (1.8, 0.6);
            let by = -(EGO_WIDTH / 2.0 + clearance + bw / 2.0);
            agents.push(straight("ego", AgentCategory::Ego, ego_size, Vec2::ZERO, v_ego, 0.0, false));
            agents.push(straight(
                "bike",
                AgentCategory::Bicycle,
                (bl, bw),
                Vec2::new(lead, by),
                v_bike,
                0.0,
                false,
            ));
            let half = (EGO_LENGTH + bl) / 2.0;
            let dx = |f: usize| (lead + v_bike * time(f)) - v_ego * time(f);
            if let Some(r) = frames_where(|f| dx(f).abs() < half - MARGIN) {
                ctx.expect(MetricId::Ladtb, "ego", Some("bike"), r, Some(clearance), DIST_TOL);
                ctx.expect(MetricId::Lodtb, "ego", Some("bike"), r, Some(0.0), DIST_TOL);
            }
            ctx.expect(MetricId::Vel, "ego", None, [0, FRAMES - 1], Some(v_ego), KIN_TOL);
        }
        CaseParams::CrosswalkApproach {
            v,
            ped_lateral,
            distance,
        } => {
            map = main_road(BoundaryStyle::Dashed, MAIN_HALF_WIDTH);
            let half_depth = 2.0;
            map.crosswalks.push(Crosswalk {
                crosswalk_id: "cw_0".into(),
                polygon: vec![
                    Vec2::new(distance - half_depth, -6.0),
                    Vec2::new(distance + half_depth, -6.0),
                    Vec2::new(distance + half_depth, 6.0),
                    Vec2::new(distance - half_depth, 6.0),
                ],
            });
            agents.push(straight("ego", AgentCategory::Ego, ego_size, Vec2::ZERO, v, 0.0, false));
            let py = EGO_WIDTH / 2.0 + ped_lateral;
            agents.push(straight(
                "ped",
                AgentCategory::Pedestrian,
                (0.0, 0.0),
                Vec2::new(distance, py),
                0.0,
                0.0,
                false,
            ));
            let off = |f: usize| v * time(f) - distance;
            if let Some(r) = frames_where(|f| off(f).abs() < EGO_LENGTH / 2.0 - MARGIN) {
                ctx.expect(MetricId::Dtpnz, "ego", Some("ped"), r, Some(ped_lateral), DIST_TOL);
            }
            if let Some(r) = frames_where(|f| off(f).abs() < EGO_LENGTH / 2.0 + half_depth - MARGIN) {
                ctx.expect(MetricId::Voz, "ego", Some("cw_0"), r, Some(v), KIN_TOL);
            }
            ctx.expect(MetricId::Vel, "ego", None, [0, FRAMES - 1], Some(v), KIN_TOL);
        }
        CaseParams::SolidLineDrift {
            offset,
            width,
            line_y,
            v,
        } => {
            map = main_road(BoundaryStyle::Solid, line_y);
            agents.push(straight(
                "ego",
                AgentCategory::Ego,
                (4.5, width),
                Vec2::new(0.0, offset),
                v,
                0.0,
                false,
            ));
            let depth = (offset + width / 2.0 - line_y).max(0.0);
            ctx.expect(MetricId::Slc, "ego", Some("main_left"), [0, FRAMES - 1], Some(depth), DIST_TOL);
            ctx.expect(MetricId::Vel, "ego", None, [0, FRAMES - 1], Some(v), KIN_TOL);
        }
        CaseParams::StationaryField { parked } => {
            map = main_road(BoundaryStyle::Dashed, MAIN_HALF_WIDTH);
            moving_background = false;
            agents.push(straight("ego", AgentCategory::Ego, ego_size, Vec2::ZERO, 0.0, 0.0, false));
            add_background(&mut map, &mut agents, parked, &mut rng, false);
            ctx.expect(MetricId::Vel, "ego", None, [0, FRAMES - 1], Some(0.0), KIN_TOL);
            ctx.expect(MetricId::Acc, "ego", None, [0, FRAMES - 1], Some(0.0), KIN_TOL);
            if parked > 0 {
                ctx.expect(MetricId::Ttc, "ego", Some("bg_0"), [0, FRAMES - 1], None, 0.0);
            }
        }
    }
    if moving_background {
        add_background(&mut map, &mut agents, case.background, &mut rng, true);
    }

    let mut expected = ctx.out;
    if case.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, case.noise_sigma).expect("sigma validated");
        for a in &mut agents {
            for s in &mut a.states {
                s.position = s.position + Vec2::new(normal.sample(&mut rng), normal.sample(&mut rng));
            }
        }
        expected = widen_for_noise(expected, case.noise_sigma);
    }

    let scenario = Scenario {
        meta: ScenarioMeta {
            scenario_id: case.scenario_id.clone(),
            dataset_name: "synthetic".into(),
            city: case.params.kind().as_str().into(),
            frame_rate_hz: CANONICAL_RATE_HZ,
            time_of_day: None,
        },
        map,
        agents,
        frame_count: FRAMES,
    };
    Ok((scenario, expected))
}

/// Noise makes acceleration, TTC and PET expectations meaningless; distance
/// and speed tolerances grow with the noise level.
fn widen_for_noise(expected: Vec<ExpectedValue>, sigma: f64) -> Vec<ExpectedValue> {
    let pos = 6.0 * sigma;
    expected
        .into_iter()
        .filter(|e| !matches!(e.metric, MetricId::Acc | MetricId::Ttc | MetricId::Pet))
        .filter(|e| e.value.is_some())
        .map(|mut e| {
            e.tolerance += match e.metric {
                MetricId::Vel | MetricId::Voz => 2.0 * pos / DT,
                _ => 2.0 * pos,
            };
            e
        })
        .collect()
}

/// Builds one case. The scenario is passed through the canonical format so
/// the in-memory copy equals what a reader of the written file sees.
pub fn generate(case: &SynthCase) -> Result<Generated, SynthError> {
    let (s, expected) = build(case)?;
    let scenario = parse_scenario(&to_canonical_json(&s))?;
    Ok(Generated { scenario, expected })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusOptions {
    pub kinds: Vec<CaseKind>,
    pub background: usize,
    pub noise_sigma: f64,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        Self {
            kinds: CaseKind::ALL.to_vec(),
            background: 8,
            noise_sigma: 0.0,
        }
    }
}

fn u(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    q(rng.random_range(lo..hi))
}

/// Random parameters for case `index` of a corpus.
pub fn random_case(kind: CaseKind, index: usize, seed: u64, opts: &CorpusOptions) -> SynthCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let params = match kind {
        CaseKind::CarFollowing => {
            let v_ego = u(&mut rng, 3.0, 12.0);
            let v_lead = u(&mut rng, 0.0, 12.0);
            CaseParams::CarFollowing {
                gap: u(&mut rng, 2.0, 60.0),
                v_ego,
                a_ego: u(&mut rng, -1.5, 0.5),
                v_lead,
                a_lead: if v_lead > 1.0 { u(&mut rng, -1.0, 0.5) } else { 0.0 },
            }
        }
        CaseKind::CrossingPaths => CaseParams::CrossingPaths {
            d_ego: u(&mut rng, 10.0, 60.0),
            v_ego: u(&mut rng, 4.0, 12.0),
            d_other: u(&mut rng, 10.0, 60.0),
            v_other: u(&mut rng, 4.0, 12.0),
        },
        CaseKind::CyclistOvertake => CaseParams::CyclistOvertake {
            clearance: u(&mut rng, 0.5, 2.5),
            v_ego: u(&mut rng, 8.0, 13.0),
            v_bike: u(&mut rng, 3.0, 6.0),
            lead: u(&mut rng, 5.0, 30.0),
        },
        CaseKind::CrosswalkApproach => CaseParams::CrosswalkApproach {
            v: u(&mut rng, 2.0, 9.0),
            ped_lateral: u(&mut rng, 0.5, 3.5),
            distance: u(&mut rng, 10.0, 40.0),
        },
        CaseKind::SolidLineDrift => CaseParams::SolidLineDrift {
            offset: u(&mut rng, -0.5, 1.0),
            width: u(&mut rng, 1.6, 2.2),
            line_y: u(&mut rng, 1.0, 2.0),
            v: u(&mut rng, 5.0, 13.0),
        },
        CaseKind::StationaryField => CaseParams::StationaryField {
            parked: opts.background.max(1),
        },
    };
    SynthCase {
        scenario_id: format!("synth_{index:05}_{}", kind.as_str()),
        params,
        background: opts.background,
        noise_sigma: opts.noise_sigma,
        seed: rng.random(),
    }
}

/// Deterministic corpus of `n` cases cycling through `opts.kinds`.
pub fn generate_corpus(n: usize, seed: u64, opts: &CorpusOptions) -> Result<Vec<Generated>, SynthError> {
    if n == 0 {
        return Err(param_err("n", "must be > 0"));
    }
    if opts.kinds.is_empty() {
        return Err(param_err("kinds", "at least one case kind required"));
    }
    (0..n)
        .map(|i| generate(&random_case(opts.kinds[i % opts.kinds.len()], i, seed, opts)))
        .collect()
}

/// Writes `<scenario_id>.json` per scenario and `expected.jsonl`; returns the
/// path of the expectations file.
pub fn write_corpus(dir: &Path, corpus: &[Generated]) -> Result<PathBuf, SynthError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| SynthError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    for g in corpus {
        save_scenario(&g.scenario, dir.join(format!("{}.json", g.scenario.meta.scenario_id)))?;
    }
    let manifest = dir.join("expected.jsonl");
    let mut buf = Vec::new();
    for e in corpus.iter().flat_map(|g| &g.expected) {
        serde_json::to_writer(&mut buf, e).expect("expectation serializes");
        buf.push(b'\n');
    }
    let mut f = fs::File::create(&manifest).map_err(io(&manifest))?;
    f.write_all(&buf).map_err(io(&manifest))?;
    Ok(manifest)
}

/// An expectation the engine output disagrees with.
#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub expected: ExpectedValue,
    pub frame: usize,
    pub actual: Option<f64>,
}

/// Checks `samples` of one scenario against its expectations.
pub fn verify_expectations(expected: &[ExpectedValue], samples: &[MetricSample]) -> Vec<Mismatch> {
    let mut out = Vec::new();
    for e in expected {
        for frame in e.frame_range[0]..=e.frame_range[1] {
            let found: Vec<f64> = samples
                .iter()
                .filter(|s| {
                    s.defined
                        && s.metric == e.metric
                        && s.subject == e.subject
                        && s.frame == frame
                        && (e.other.is_none() || s.other == e.other)
                })
                .map(|s| s.value)
                .collect();
            let ok = match e.value {
                None => found.is_empty(),
                Some(v) => found.len() == 1 && (found[0] - v).abs() <= e.tolerance,
            };
            if !ok {
                out.push(Mismatch {
                    expected: e.clone(),
                    frame,
                    actual: found.first().copied(),
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{compute_all, MetricConfig};
    use crate::scenario::check_invariants;

    fn case(params: CaseParams) -> SynthCase {
        SynthCase {
            scenario_id: "t".into(),
            params,
            background: 2,
            noise_sigma: 0.0,
            seed: 1,
        }
    }

    fn run(c: &SynthCase) -> (Generated, Vec<Mismatch>) {
        let g = generate(c).unwrap();
        let samples = compute_all(&g.scenario, &MetricConfig::default()).samples;
        let m = verify_expectations(&g.expected, &samples);
        (g, m)
    }

    #[test]
    fn car_following_example() {
        // contact at 1.605 s, clear of any sweep point
        let (g, m) = run(&case(CaseParams::CarFollowing {
            gap: 16.05,
            v_ego: 10.0,
            a_ego: 0.0,
            v_lead: 0.0,
            a_lead: 0.0,
        }));
        let ttc = g.expected.iter().find(|e| e.metric == MetricId::Ttc).unwrap();
        assert_eq!(ttc.value, Some(2.0));
        assert!(m.is_empty(), "{m:?}");
    }

    #[test]
    fn solid_line_example() {
        let (g, m) = run(&case(CaseParams::SolidLineDrift {
            offset: 0.5,
            width: 2.0,
            line_y: 1.0,
            v: 8.0,
        }));
        let slc = g.expected.iter().find(|e| e.metric == MetricId::Slc).unwrap();
        assert_eq!(slc.value, Some(0.5));
        assert!(m.is_empty(), "{m:?}");
    }

    #[test]
    fn crosswalk_example() {
        let (g, m) = run(&case(CaseParams::CrosswalkApproach {
            v: 4.0,
            ped_lateral: 2.0,
            distance: 20.0,
        }));
        let kinds: Vec<MetricId> = g.expected.iter().map(|e| e.metric).collect();
        assert!(kinds.contains(&MetricId::Dtpnz) && kinds.contains(&MetricId::Voz));
        assert!(m.is_empty(), "{m:?}");
    }

    #[test]
    fn every_kind_is_valid_and_matched() {
        let opts = CorpusOptions::default();
        for (i, kind) in CaseKind::ALL.into_iter().enumerate() {
            let c = random_case(kind, i, 3, &opts);
            let (g, m) = run(&c);
            assert!(check_invariants(&g.scenario).is_empty());
            assert!(!g.expected.is_empty(), "{kind:?}");
            assert!(m.is_empty(), "{kind:?}: {m:?}");
        }
    }

    #[test]
    fn corpus_is_deterministic() {
        let a = generate_corpus(12, 42, &CorpusOptions::default()).unwrap();
        let b = generate_corpus(12, 42, &CorpusOptions::default()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_corpus(12, 43, &CorpusOptions::default()).unwrap());
    }

    #[test]
    fn bad_parameters_name_the_field() {
        let err = generate(&case(CaseParams::CarFollowing {
            gap: 150.0,
            v_ego: 10.0,
            a_ego: 0.0,
            v_lead: 0.0,
            a_lead: 0.0,
        }))
        .unwrap_err();
        assert!(matches!(err, SynthError::Parameter { ref field, .. } if field == "gap"));
        assert!("warp_drive".parse::<CaseKind>().is_err());
    }

    #[test]
    fn noisy_expectations_are_widened() {
        let mut c = case(CaseParams::SolidLineDrift {
            offset: 0.5,
            width: 2.0,
            line_y: 1.0,
            v: 8.0,
        });
        c.noise_sigma = 0.01;
        let g = generate(&c).unwrap();
        assert!(g.expected.iter().all(|e| e.tolerance > DIST_TOL));
    }
}
