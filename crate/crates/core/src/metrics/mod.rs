//! Per-agent, per-frame criticality and rule-compliance metrics.
//!
//! Every metric is a pure function of the scenario. [`compute_all`] drives the
//! full suite and returns defined samples in a fixed order.

mod dump;
mod gap;
mod kinematics;
mod pet;
mod proximity;
mod slc;
mod ttc;

pub use dump::{read_samples_csv, write_samples_csv, write_samples_jsonl};
pub use gap::{compute_gap, DEFAULT_CORRIDOR_HALFWIDTH_M};
pub use kinematics::{compute_acc, compute_vel, AgentKinematics};
pub use pet::{compute_pet, derive_conflict_area, ConflictArea, ConflictAreaSource};
pub use proximity::{compute_dtpnz, compute_dtx, compute_voz, DEFAULT_PROXIMITY_RADIUS_M};
pub use slc::compute_slc;
pub use ttc::{
    build_reference_path, compute_ttc, displacement, Motion, TtcConfig, DEFAULT_TTC_SUBSTEP_S,
};

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::{AgentCategory, AgentTrack, Scenario};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("reference path has fewer than two distinct points")]
    DegeneratePath,
    #[error("invalid conflict area: {0}")]
    InvalidConflictArea(String),
    #[error("agent {agent_id} has category {category}, expected bicycle or pedestrian")]
    Category {
        agent_id: String,
        category: &'static str,
    },
}

/// Closed set of metrics. Declaration order is the report column order.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "UPPERCASE")]
pub enum MetricId {
    Vel,
    Acc,
    Gap,
    Ttc,
    Ladtb,
    Lodtb,
    Ladtp,
    Lodtp,
    Dtpnz,
    Voz,
    Slc,
    Pet,
}

impl MetricId {
    pub const ALL: [MetricId; 12] = [
        MetricId::Vel,
        MetricId::Acc,
        MetricId::Gap,
        MetricId::Ttc,
        MetricId::Ladtb,
        MetricId::Lodtb,
        MetricId::Ladtp,
        MetricId::Lodtp,
        MetricId::Dtpnz,
        MetricId::Voz,
        MetricId::Slc,
        MetricId::Pet,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricId::Vel => "VEL",
            MetricId::Acc => "ACC",
            MetricId::Gap => "GAP",
            MetricId::Ttc => "TTC",
            MetricId::Ladtb => "LADTB",
            MetricId::Lodtb => "LODTB",
            MetricId::Ladtp => "LADTP",
            MetricId::Lodtp => "LODTP",
            MetricId::Dtpnz => "DTPNZ",
            MetricId::Voz => "VOZ",
            MetricId::Slc => "SLC",
            MetricId::Pet => "PET",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            MetricId::Vel | MetricId::Voz => "m/s",
            MetricId::Acc => "m/s^2",
            MetricId::Ttc | MetricId::Pet => "s",
            _ => "m",
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MetricId::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown metric `{s}`"))
    }
}

/// One metric value for a subject agent at a frame.
///
/// `other` names the paired agent (pair metrics) or the crosswalk (VOZ).
/// When `defined` is false the value carries no meaning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSample {
    pub metric: MetricId,
    pub subject: String,
    pub other: Option<String>,
    pub frame: usize,
    pub value: f64,
    pub defined: bool,
}

impl MetricSample {
    pub fn new(
        metric: MetricId,
        subject: &str,
        other: Option<&str>,
        frame: usize,
        value: f64,
    ) -> Self {
        Self {
            metric,
            subject: subject.to_owned(),
            other: other.map(str::to_owned),
            frame,
            value,
            defined: true,
        }
    }

    pub fn undefined(metric: MetricId, subject: &str, other: Option<&str>, frame: usize) -> Self {
        Self {
            defined: false,
            value: f64::NAN,
            ..Self::new(metric, subject, other, frame, 0.0)
        }
    }

    pub fn value(&self) -> Option<f64> {
        self.defined.then_some(self.value)
    }

    fn sort_key(&self) -> (MetricId, &str, Option<&str>, usize) {
        (
            self.metric,
            self.subject.as_str(),
            self.other.as_deref(),
            self.frame,
        )
    }
}

/// Which agents act as subjects of the pairwise GAP/TTC/PET metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairScope {
    #[default]
    Ego,
    AllVehicles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub metrics: BTreeSet<MetricId>,
    pub corridor_halfwidth: f64,
    pub proximity_radius: f64,
    pub ttc: TtcConfig,
    pub pair_scope: PairScope,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            metrics: MetricId::ALL.into_iter().collect(),
            corridor_halfwidth: DEFAULT_CORRIDOR_HALFWIDTH_M,
            proximity_radius: DEFAULT_PROXIMITY_RADIUS_M,
            ttc: TtcConfig::default(),
            pair_scope: PairScope::Ego,
        }
    }
}

impl MetricConfig {
    fn wants(&self, m: MetricId) -> bool {
        self.metrics.contains(&m)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricOutput {
    /// Defined samples ordered by (metric, subject, other, frame).
    pub samples: Vec<MetricSample>,
    /// Conflict areas derived for PET, one per evaluated pair.
    pub conflict_areas: Vec<ConflictArea>,
}

fn push_defined(out: &mut Vec<MetricSample>, s: MetricSample) {
    if s.defined {
        out.push(s);
    }
}

/// Evaluates every selected metric on every applicable agent and pair.
pub fn compute_all(s: &Scenario, cfg: &MetricConfig) -> MetricOutput {
    let dt = s.dt();
    let kin: Vec<AgentKinematics> = s
        .agents
        .iter()
        .map(|a| AgentKinematics::new(a, dt))
        .collect();
    let mut samples = Vec::new();
    let mut conflict_areas = Vec::new();

    for k in &kin {
        if cfg.wants(MetricId::Vel) {
            samples.extend(k.vel.iter().filter(|x| x.defined).cloned());
        }
        if cfg.wants(MetricId::Acc) {
            samples.extend(k.acc.iter().filter(|x| x.defined).cloned());
        }
    }

    let is_subject = |a: &AgentTrack| match cfg.pair_scope {
        PairScope::Ego => a.category == AgentCategory::Ego,
        PairScope::AllVehicles => a.category.is_motor_vehicle(),
    };
    let subjects: Vec<usize> = (0..s.agents.len())
        .filter(|&i| is_subject(&s.agents[i]))
        .collect();
    let vehicles: Vec<usize> = (0..s.agents.len())
        .filter(|&i| s.agents[i].category.is_motor_vehicle())
        .collect();
    let vulnerable: Vec<usize> = (0..s.agents.len())
        .filter(|&i| {
            matches!(
                s.agents[i].category,
                AgentCategory::Bicycle | AgentCategory::Pedestrian
            )
        })
        .collect();
    let pedestrians: Vec<&AgentTrack> = s
        .agents
        .iter()
        .filter(|a| a.category == AgentCategory::Pedestrian)
        .collect();

    let want_ttc = cfg.wants(MetricId::Ttc);
    let want_gap = cfg.wants(MetricId::Gap);
    if want_ttc || want_gap {
        for f in 0..s.frame_count {
            let motions: Vec<Option<Motion>> = s
                .agents
                .iter()
                .zip(&kin)
                .map(|(a, k)| a.is_valid(f).then(|| Motion::new(a, k, f)))
                .collect();
            for &i in &subjects {
                let Some(mi) = &motions[i] else { continue };
                let subject = &s.agents[i];
                if want_ttc {
                    for (j, mj) in motions.iter().enumerate() {
                        let Some(mj) = mj else { continue };
                        if j == i {
                            continue;
                        }
                        let v = ttc::ttc_between(mi, mj, &cfg.ttc);
                        if let Some(t) = v {
                            samples.push(MetricSample::new(
                                MetricId::Ttc,
                                &subject.agent_id,
                                Some(&s.agents[j].agent_id),
                                f,
                                t,
                            ));
                        }
                    }
                }
                if want_gap {
                    let others: Vec<&AgentTrack> = s
                        .agents
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != i)
                        .map(|(_, a)| a)
                        .collect();
                    let g = gap::gap_with_path(subject, mi.path(), &others, f, cfg.corridor_halfwidth);
                    push_defined(&mut samples, g);
                }
            }
        }
    }

    if cfg.wants(MetricId::Pet) {
        for &i in &subjects {
            for j in 0..s.agents.len() {
                if i == j {
                    continue;
                }
                let (a, b) = (&s.agents[i], &s.agents[j]);
                let Some(area) = derive_conflict_area(a, b) else {
                    continue;
                };
                for (first, second) in [(a, b), (b, a)] {
                    if let Ok(p) = compute_pet(first, second, &area.polygon, s.dt()) {
                        push_defined(&mut samples, p);
                    }
                }
                conflict_areas.push(area);
            }
        }
    }

    let want_dtb = cfg.wants(MetricId::Ladtb) || cfg.wants(MetricId::Lodtb);
    let want_dtp = cfg.wants(MetricId::Ladtp) || cfg.wants(MetricId::Lodtp);
    for &i in &vehicles {
        let v = &s.agents[i];
        for f in 0..s.frame_count {
            if !v.is_valid(f) {
                continue;
            }
            if want_dtb || want_dtp {
                for &j in &vulnerable {
                    let t = &s.agents[j];
                    let wanted = match t.category {
                        AgentCategory::Bicycle => want_dtb,
                        _ => want_dtp,
                    };
                    if !wanted || !t.is_valid(f) {
                        continue;
                    }
                    if let Ok((lat, lon)) =
                        proximity::dtx_with_radius(v, t, f, cfg.proximity_radius)
                    {
                        for smp in [lat, lon] {
                            if cfg.wants(smp.metric) {
                                push_defined(&mut samples, smp);
                            }
                        }
                    }
                }
            }
            if cfg.wants(MetricId::Dtpnz) {
                samples.extend(
                    proximity::dtpnz_with_radius(
                        v,
                        &pedestrians,
                        &s.map.crosswalks,
                        f,
                        cfg.proximity_radius,
                    )
                    .into_iter()
                    .filter(|x| x.defined),
                );
            }
            if cfg.wants(MetricId::Voz) {
                push_defined(
                    &mut samples,
                    proximity::voz_from_vel(v, &kin[i], &s.map.crosswalks, f),
                );
            }
            if cfg.wants(MetricId::Slc) {
                push_defined(&mut samples, compute_slc(v, &s.map, f));
            }
        }
    }

    samples.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    MetricOutput {
        samples,
        conflict_areas,
    }
}
