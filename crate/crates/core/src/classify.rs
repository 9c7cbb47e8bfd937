//! Threshold rules, critical-agent labelling and corpus filtering.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::metrics::{compute_all, MetricConfig, MetricId, MetricSample};
use crate::scenario::{Scenario, ScenarioError};

const DEFAULT_RULES_JSON: &str = include_str!("../rules/default_rules.json");

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("rules file is not valid JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("rule {index} ({target}): {message}")]
    Invalid {
        index: usize,
        target: RuleTarget,
        message: String,
    },
}

/// What a rule inspects. `Dtb` reads LADTB; `Dtp` reads the smaller of
/// LADTP and LODTP for the same pair and frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleTarget {
    Metric(MetricId),
    Dtb,
    Dtp,
}

impl RuleTarget {
    pub fn name(self) -> &'static str {
        match self {
            RuleTarget::Metric(m) => m.as_str(),
            RuleTarget::Dtb => "DTB",
            RuleTarget::Dtp => "DTP",
        }
    }
}

impl fmt::Display for RuleTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RuleTarget {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "DTB" => Ok(RuleTarget::Dtb),
            "DTP" => Ok(RuleTarget::Dtp),
            other => other.parse().map(RuleTarget::Metric),
        }
    }
}

impl Serialize for RuleTarget {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for RuleTarget {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "abs>")]
    AbsGt,
}

impl Comparator {
    /// Strict comparison; the bound itself never triggers.
    pub fn holds(self, value: f64, bound: f64) -> bool {
        match self {
            Comparator::Lt => value < bound,
            Comparator::Gt => value > bound,
            Comparator::AbsGt => value.abs() > bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRule {
    pub metric: RuleTarget,
    pub comparator: Comparator,
    pub bound: Option<f64>,
    pub enabled: bool,
}

impl ThresholdRule {
    fn active_bound(&self) -> Option<f64> {
        self.bound.filter(|_| self.enabled)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RuleSet {
    pub rules: Vec<ThresholdRule>,
}

impl Default for RuleSet {
    fn default() -> Self {
        RuleSet::from_json(DEFAULT_RULES_JSON).expect("shipped rules parse")
    }
}

impl RuleSet {
    pub fn from_json(text: &str) -> Result<Self, RuleError> {
        let set: RuleSet = serde_json::from_str(text)?;
        set.validate()?;
        Ok(set)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("rules serialize")
    }

    pub fn validate(&self) -> Result<(), RuleError> {
        let mut seen = BTreeSet::new();
        for (index, r) in self.rules.iter().enumerate() {
            let invalid = |message: &str| RuleError::Invalid {
                index,
                target: r.metric,
                message: message.into(),
            };
            if !seen.insert(r.metric) {
                return Err(invalid("duplicate rule"));
            }
            match r.bound {
                None if r.enabled => return Err(invalid("enabled rule needs a bound")),
                Some(b) if !b.is_finite() => return Err(invalid("bound must be finite")),
                _ => {}
            }
        }
        Ok(())
    }

    pub fn rule(&self, target: RuleTarget) -> Option<&ThresholdRule> {
        self.rules.iter().find(|r| r.metric == target)
    }

    /// Copy with one rule's bound replaced and the rule enabled.
    pub fn with_bound(&self, target: RuleTarget, bound: f64) -> Self {
        let mut out = self.clone();
        if let Some(r) = out.rules.iter_mut().find(|r| r.metric == target) {
            r.bound = Some(bound);
            r.enabled = true;
        }
        out
    }

    pub fn all_disabled(&self) -> Self {
        let mut out = self.clone();
        for r in &mut out.rules {
            r.enabled = false;
        }
        out
    }
}

/// One sample that satisfied a rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trigger {
    pub rule: RuleTarget,
    pub metric: MetricId,
    pub other: Option<String>,
    pub frame: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalityLabel {
    pub agent_id: String,
    pub is_critical: bool,
    pub triggers: Vec<Trigger>,
}

impl CriticalityLabel {
    pub fn triggered_rules(&self) -> BTreeSet<RuleTarget> {
        self.triggers.iter().map(|t| t.rule).collect()
    }
}

/// Samples a rule looks at, as (metric actually read, sample) pairs.
fn rule_inputs(target: RuleTarget, samples: &[MetricSample]) -> Vec<(MetricId, &MetricSample)> {
    match target {
        RuleTarget::Metric(m) => samples
            .iter()
            .filter(|s| s.defined && s.metric == m)
            .map(|s| (m, s))
            .collect(),
        RuleTarget::Dtb => rule_inputs(RuleTarget::Metric(MetricId::Ladtb), samples),
        RuleTarget::Dtp => {
            let mut lon: HashMap<(&str, Option<&str>, usize), &MetricSample> = HashMap::new();
            for s in samples.iter().filter(|s| s.defined && s.metric == MetricId::Lodtp) {
                lon.insert((&s.subject, s.other.as_deref(), s.frame), s);
            }
            samples
                .iter()
                .filter(|s| s.defined && s.metric == MetricId::Ladtp)
                .map(|lat| match lon.get(&(&lat.subject, lat.other.as_deref(), lat.frame)) {
                    Some(l) if l.value < lat.value => (MetricId::Lodtp, *l),
                    _ => (MetricId::Ladtp, lat),
                })
                .collect()
        }
    }
}

/// Labels every agent in `agent_ids`; agents without samples come out
/// non-critical.
pub fn classify_agents(
    samples: &[MetricSample],
    rules: &RuleSet,
    agent_ids: &[String],
) -> Vec<CriticalityLabel> {
    let mut triggers: HashMap<&str, Vec<Trigger>> = HashMap::new();
    for rule in &rules.rules {
        let Some(bound) = rule.active_bound() else {
            continue;
        };
        for (metric, s) in rule_inputs(rule.metric, samples) {
            if rule.comparator.holds(s.value, bound) {
                triggers.entry(&s.subject).or_default().push(Trigger {
                    rule: rule.metric,
                    metric,
                    other: s.other.clone(),
                    frame: s.frame,
                    value: s.value,
                });
            }
        }
    }
    agent_ids
        .iter()
        .map(|id| {
            let t = triggers.remove(id.as_str()).unwrap_or_default();
            CriticalityLabel {
                agent_id: id.clone(),
                is_critical: !t.is_empty(),
                triggers: t,
            }
        })
        .collect()
}

/// Scenario-level verdict and metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioVerdict {
    pub scenario_id: String,
    pub is_critical: bool,
    pub total_agents: usize,
    pub critical_agents: usize,
    /// Distinct critical agents per rule.
    pub per_rule: BTreeMap<String, usize>,
}

impl ScenarioVerdict {
    pub fn triggering_rules(&self) -> Vec<String> {
        self.per_rule
            .iter()
            .filter(|(_, &n)| n > 0)
            .map(|(k, _)| k.clone())
            .collect()
    }
}

pub fn classify_scenario(scenario_id: &str, labels: &[CriticalityLabel]) -> ScenarioVerdict {
    let mut per_rule: BTreeMap<String, usize> = BTreeMap::new();
    for l in labels {
        for r in l.triggered_rules() {
            *per_rule.entry(r.name().to_owned()).or_default() += 1;
        }
    }
    let critical_agents = labels.iter().filter(|l| l.is_critical).count();
    ScenarioVerdict {
        scenario_id: scenario_id.to_owned(),
        is_critical: critical_agents > 0,
        total_agents: labels.len(),
        critical_agents,
        per_rule,
    }
}

/// Computes metrics and labels for one scenario.
pub fn evaluate_scenario(
    s: &Scenario,
    cfg: &MetricConfig,
    rules: &RuleSet,
) -> (Vec<MetricSample>, Vec<CriticalityLabel>, ScenarioVerdict) {
    let samples = compute_all(s, cfg).samples;
    let ids: Vec<String> = s.agents.iter().map(|a| a.agent_id.clone()).collect();
    let labels = classify_agents(&samples, rules, &ids);
    let verdict = classify_scenario(&s.meta.scenario_id, &labels);
    (samples, labels, verdict)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterMode {
    DropCritical,
    KeepCritical,
}

impl FilterMode {
    pub fn emits(self, is_critical: bool) -> bool {
        match self {
            FilterMode::DropCritical => !is_critical,
            FilterMode::KeepCritical => is_critical,
        }
    }
}

impl FromStr for FilterMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "drop-critical" => Ok(FilterMode::DropCritical),
            "keep-critical" => Ok(FilterMode::KeepCritical),
            _ => Err(format!("unknown filter mode `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub scenario_id: String,
    pub critical: bool,
    pub emitted: bool,
    pub triggering_metrics: Vec<String>,
}

#[derive(Debug, Default)]
pub struct FilterOutcome {
    pub emitted: Vec<Scenario>,
    pub manifest: Vec<ManifestEntry>,
    pub failures: Vec<(String, ScenarioError)>,
}

/// Classifies each scenario and keeps those matching `mode`. Load failures
/// are recorded and skipped.
pub fn filter_corpus<I>(corpus: I, cfg: &MetricConfig, rules: &RuleSet, mode: FilterMode) -> FilterOutcome
where
    I: IntoIterator<Item = Result<Scenario, (String, ScenarioError)>>,
{
    let mut out = FilterOutcome::default();
    for item in corpus {
        let s = match item {
            Ok(s) => s,
            Err((name, e)) => {
                log::warn!("skipping {name}: {e}");
                out.failures.push((name, e));
                continue;
            }
        };
        let (_, _, verdict) = evaluate_scenario(&s, cfg, rules);
        let emitted = mode.emits(verdict.is_critical);
        out.manifest.push(ManifestEntry {
            scenario_id: verdict.scenario_id.clone(),
            critical: verdict.is_critical,
            emitted,
            triggering_metrics: verdict.triggering_rules(),
        });
        if emitted {
            out.emitted.push(s);
        }
    }
    out
}
