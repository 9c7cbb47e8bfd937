//! Canonical in-memory scenario representation.
//!
//! A [`Scenario`] bundles recording metadata, a vector map (lanes with typed
//! boundaries, crosswalks) and agent tracks sampled on a uniform frame grid.
//! Scenarios are immutable once built; every operation returns a new value.

mod adapter;
mod format;
mod standardize;
mod validate;

pub use adapter::{TrackCsvAdapter, TrackCsvRow};
pub use format::{
    load_scenario, parse_scenario, save_scenario, to_canonical_json, FORMAT_VERSION,
};
pub use standardize::{crop_map, resample_scenario, DEFAULT_CROP_RADIUS_M};
pub use validate::{check_invariants, Violation};

use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::{OrientedBox, Vec2};

/// Canonical frame rate after standardization.
pub const CANONICAL_RATE_HZ: f64 = 10.0;
/// Canonical window length after standardization.
pub const CANONICAL_WINDOW_S: f64 = 11.0;
/// Canonical number of frames (11 s at 10 Hz).
pub const CANONICAL_FRAME_COUNT: usize = 110;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: parse error: {message}")]
    Parse { path: String, message: String },
    #[error("{path}: schema error: {message}")]
    Schema { path: String, message: String },
    #[error("{path}: invariant violated: {message}")]
    Invariant { path: String, message: String },
    #[error("no agent has two or more valid frames")]
    EmptyScenario,
    #[error("{}: {source}", file.display())]
    Io {
        file: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ScenarioError {
    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn invariant(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Invariant {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioMeta {
    pub scenario_id: String,
    pub dataset_name: String,
    pub city: String,
    pub frame_rate_hz: f64,
    pub time_of_day: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AgentCategory {
    Ego,
    Vehicle,
    Bus,
    Bicycle,
    Pedestrian,
    Other,
}

impl AgentCategory {
    /// Unknown labels map to [`AgentCategory::Other`].
    pub fn parse(label: &str) -> Self {
        match label {
            "ego" => Self::Ego,
            "vehicle" => Self::Vehicle,
            "bus" => Self::Bus,
            "bicycle" => Self::Bicycle,
            "pedestrian" => Self::Pedestrian,
            _ => Self::Other,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ego => "ego",
            Self::Vehicle => "vehicle",
            Self::Bus => "bus",
            Self::Bicycle => "bicycle",
            Self::Pedestrian => "pedestrian",
            Self::Other => "other",
        }
    }

    /// Ego, cars and buses: the subjects of rule-compliance metrics.
    pub fn is_motor_vehicle(self) -> bool {
        matches!(self, Self::Ego | Self::Vehicle | Self::Bus)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub position: Vec2,
    pub heading: f64,
    /// Measured speed, if the source carried one.
    pub speed: Option<f64>,
}

impl AgentState {
    pub const INVALID: AgentState = AgentState {
        position: Vec2::ZERO,
        heading: 0.0,
        speed: None,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentTrack {
    pub agent_id: String,
    pub category: AgentCategory,
    pub length: f64,
    pub width: f64,
    pub states: Vec<AgentState>,
    pub valid: Vec<bool>,
}

impl AgentTrack {
    pub fn is_valid(&self, frame: usize) -> bool {
        self.valid.get(frame).copied().unwrap_or(false)
    }

    pub fn valid_frame_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    pub fn position(&self, frame: usize) -> Vec2 {
        self.states[frame].position
    }

    /// Footprint at `frame`. Pedestrians are always point agents.
    pub fn footprint(&self, frame: usize) -> OrientedBox {
        let s = &self.states[frame];
        self.footprint_at(s.position, s.heading)
    }

    /// Footprint of this agent placed at an arbitrary pose.
    pub fn footprint_at(&self, center: Vec2, heading: f64) -> OrientedBox {
        if self.category == AgentCategory::Pedestrian {
            OrientedBox::point(center)
        } else {
            OrientedBox::new(center, heading, self.length, self.width)
        }
    }

    /// Maximal runs of consecutive valid frames as half-open ranges.
    pub fn valid_runs(&self) -> Vec<std::ops::Range<usize>> {
        let mut runs = Vec::new();
        let mut start = None;
        for (i, &v) in self.valid.iter().enumerate() {
            match (v, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    runs.push(s..i);
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            runs.push(s..self.valid.len());
        }
        runs
    }

    pub fn last_valid_frame(&self) -> Option<usize> {
        self.valid.iter().rposition(|&v| v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryStyle {
    Solid,
    Dashed,
    Other,
}

impl BoundaryStyle {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Solid => "solid",
            Self::Dashed => "dashed",
            Self::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryLine {
    pub boundary_id: String,
    pub style: BoundaryStyle,
    pub polyline: Vec<Vec2>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaneType {
    Normal,
    Bus,
    Bicycle,
}

impl LaneType {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Normal => "normal",
            Self::Bus => "bus",
            Self::Bicycle => "bicycle",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lane {
    pub lane_id: String,
    pub lane_type: LaneType,
    pub centerline: Vec<Vec2>,
    pub left_boundary: Option<String>,
    pub right_boundary: Option<String>,
    pub predecessors: Vec<String>,
    pub successors: Vec<String>,
    pub neighbors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Crosswalk {
    pub crosswalk_id: String,
    /// Closed ring without a repeated closing vertex.
    pub polygon: Vec<Vec2>,
}

/// Accepted and preserved by the format; no metric reads it.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedArea {
    pub area_id: String,
    pub polygon: Vec<Vec2>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MapData {
    pub lanes: Vec<Lane>,
    pub boundaries: Vec<BoundaryLine>,
    pub crosswalks: Vec<Crosswalk>,
    pub restricted_areas: Vec<RestrictedArea>,
}

impl MapData {
    pub fn boundary(&self, id: &str) -> Option<&BoundaryLine> {
        self.boundaries.iter().find(|b| b.boundary_id == id)
    }

    pub fn is_empty(&self) -> bool {
        self.lanes.is_empty()
            && self.boundaries.is_empty()
            && self.crosswalks.is_empty()
            && self.restricted_areas.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub meta: ScenarioMeta,
    pub map: MapData,
    pub agents: Vec<AgentTrack>,
    pub frame_count: usize,
}

impl Scenario {
    /// Seconds between frames.
    pub fn dt(&self) -> f64 {
        1.0 / self.meta.frame_rate_hz
    }

    pub fn ego(&self) -> Option<&AgentTrack> {
        self.agents.iter().find(|a| a.category == AgentCategory::Ego)
    }

    pub fn agent(&self, id: &str) -> Option<&AgentTrack> {
        self.agents.iter().find(|a| a.agent_id == id)
    }

    /// True for the standardized 11 s / 10 Hz grid.
    pub fn is_canonical(&self) -> bool {
        self.frame_count == CANONICAL_FRAME_COUNT
            && (self.meta.frame_rate_hz - CANONICAL_RATE_HZ).abs() < 1e-9
    }
}
