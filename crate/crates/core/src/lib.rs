//! Scenario model, geometry kernel and the criticality/rule-compliance metric
//! suite for auditing recorded driving datasets.

pub mod classify;
pub mod geometry;
pub mod metrics;
pub mod report;
pub mod scenario;
pub mod stats;
pub mod synthgen;

pub use geometry::{OrientedBox, PathParam, Vec2};
pub use metrics::{compute_all, MetricConfig, MetricId, MetricOutput, MetricSample};
pub use scenario::{AgentCategory, AgentTrack, MapData, Scenario, ScenarioError};
pub use classify::{classify_agents, RuleSet, ThresholdRule};
