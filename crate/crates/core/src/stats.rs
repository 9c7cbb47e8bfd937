//! Corpus-level distribution summaries and critical-agent percentages.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{CriticalityLabel, ScenarioVerdict};
use crate::metrics::{MetricId, MetricSample};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("total agent count must be positive")]
    NoAgents,
    #[error("{labelled} labelled agents exceed total of {total}")]
    TooManyLabels { labelled: usize, total: usize },
}

pub const DEFAULT_BINS: usize = 100;

/// Fixed histogram range per metric so corpora stay comparable.
pub fn default_range(m: MetricId) -> (f64, f64) {
    match m {
        MetricId::Vel | MetricId::Voz => (0.0, 40.0),
        MetricId::Acc => (-20.0, 20.0),
        MetricId::Gap => (0.0, 100.0),
        MetricId::Ttc => (0.0, 40.0),
        MetricId::Pet => (0.0, 20.0),
        MetricId::Ladtb | MetricId::Lodtb | MetricId::Ladtp | MetricId::Lodtp => (0.0, 5.0),
        MetricId::Dtpnz => (0.0, 20.0),
        MetricId::Slc => (0.0, 2.0),
    }
}

/// Linear interpolation between closest ranks over sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> Option<f64> {
    let n = sorted.len();
    if n == 0 {
        return None;
    }
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    Some(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` ascending edges.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn uniform(lo: f64, hi: f64, bins: usize) -> Self {
        assert!(bins > 0 && hi > lo, "histogram needs bins > 0 and hi > lo");
        let w = (hi - lo) / bins as f64;
        let mut edges: Vec<f64> = (0..=bins).map(|i| lo + w * i as f64).collect();
        edges[bins] = hi;
        Self {
            edges,
            counts: vec![0; bins],
        }
    }

    /// Values outside the range land in the edge bins.
    pub fn add(&mut self, v: f64) {
        let bins = self.counts.len();
        let i = self.edges.partition_point(|&e| e <= v);
        let idx = i.saturating_sub(1).min(bins - 1);
        self.counts[idx] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub metric: MetricId,
    pub count: usize,
    pub median: Option<f64>,
    pub q1: Option<f64>,
    pub q3: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub histogram: Histogram,
}

impl DistributionSummary {
    pub fn from_values(metric: MetricId, values: &[f64], bins: usize) -> Self {
        let (lo, hi) = default_range(metric);
        Self::with_histogram(metric, values, Histogram::uniform(lo, hi, bins))
    }

    pub fn with_histogram(metric: MetricId, values: &[f64], mut histogram: Histogram) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        for &v in &sorted {
            histogram.add(v);
        }
        Self {
            metric,
            count: sorted.len(),
            median: quantile(&sorted, 0.5),
            q1: quantile(&sorted, 0.25),
            q3: quantile(&sorted, 0.75),
            min: sorted.first().copied(),
            max: sorted.last().copied(),
            histogram,
        }
    }
}

/// How samples feed the distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SummaryMode {
    /// Every defined per-frame sample.
    #[default]
    PerFrame,
    /// One value per (subject, other) series: its most critical extreme.
    PerAgentExtreme,
}

/// Which tail of a metric is the critical one.
fn extreme_is_max(m: MetricId) -> bool {
    matches!(m, MetricId::Vel | MetricId::Voz | MetricId::Slc | MetricId::Acc)
}

/// Multiset of defined values per metric. Merging is concatenation, so
/// partial accumulators combine associatively.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleAccumulator {
    mode: SummaryMode,
    values: BTreeMap<MetricId, Vec<f64>>,
}

impl SampleAccumulator {
    pub fn new(mode: SummaryMode) -> Self {
        Self {
            mode,
            values: BTreeMap::new(),
        }
    }

    pub fn mode(&self) -> SummaryMode {
        self.mode
    }

    pub fn add_samples(&mut self, samples: &[MetricSample]) {
        match self.mode {
            SummaryMode::PerFrame => {
                for s in samples.iter().filter(|s| s.defined) {
                    self.values.entry(s.metric).or_default().push(s.value);
                }
            }
            SummaryMode::PerAgentExtreme => {
                let mut ext: BTreeMap<(MetricId, &str, Option<&str>), f64> = BTreeMap::new();
                for s in samples.iter().filter(|s| s.defined) {
                    let key = (s.metric, s.subject.as_str(), s.other.as_deref());
                    let e = ext.entry(key).or_insert(s.value);
                    let better = if s.metric == MetricId::Acc {
                        s.value.abs() > e.abs()
                    } else if extreme_is_max(s.metric) {
                        s.value > *e
                    } else {
                        s.value < *e
                    };
                    if better {
                        *e = s.value;
                    }
                }
                for ((m, _, _), v) in ext {
                    self.values.entry(m).or_default().push(v);
                }
            }
        }
    }

    pub fn merge(&mut self, other: SampleAccumulator) {
        for (m, mut v) in other.values {
            self.values.entry(m).or_default().append(&mut v);
        }
    }

    pub fn values(&self, m: MetricId) -> &[f64] {
        self.values.get(&m).map(Vec::as_slice).unwrap_or(&[])
    }

    /// One summary per metric in enumeration order, empty metrics included.
    pub fn summarize(&self, bins: usize) -> Vec<DistributionSummary> {
        MetricId::ALL
            .into_iter()
            .map(|m| DistributionSummary::from_values(m, self.values(m), bins))
            .collect()
    }
}

/// Per-frame summaries of `samples` with the default histogram layout.
pub fn summarize(samples: &[MetricSample]) -> Vec<DistributionSummary> {
    let mut acc = SampleAccumulator::new(SummaryMode::PerFrame);
    acc.add_samples(samples);
    acc.summarize(DEFAULT_BINS)
}

/// Column order of the critical-percentage tables.
pub const RULE_COLUMNS: [&str; 10] = [
    "VEL", "ACC", "GAP", "TTC", "DTB", "DTP", "DTPNZ", "VOZ", "SLC", "PET",
];

/// Distinct critical agents per rule, summed over scenarios.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CriticalCounts {
    pub total_agents: usize,
    pub critical_agents: usize,
    pub per_rule: BTreeMap<String, usize>,
}

impl CriticalCounts {
    pub fn add_verdict(&mut self, v: &ScenarioVerdict) {
        self.total_agents += v.total_agents;
        self.critical_agents += v.critical_agents;
        for (k, n) in &v.per_rule {
            *self.per_rule.entry(k.clone()).or_default() += n;
        }
    }

    pub fn merge(&mut self, other: &CriticalCounts) {
        self.total_agents += other.total_agents;
        self.critical_agents += other.critical_agents;
        for (k, n) in &other.per_rule {
            *self.per_rule.entry(k.clone()).or_default() += n;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPercentageRow {
    pub corpus_label: String,
    pub total_agents: usize,
    pub critical_agents: usize,
    /// Percent of agents, in [0, 100], keyed by rule name.
    pub percent: BTreeMap<String, f64>,
}

impl CriticalPercentageRow {
    pub fn from_counts(corpus_label: &str, c: &CriticalCounts) -> Result<Self, StatsError> {
        if c.total_agents == 0 {
            return Err(StatsError::NoAgents);
        }
        let total = c.total_agents as f64;
        Ok(Self {
            corpus_label: corpus_label.to_owned(),
            total_agents: c.total_agents,
            critical_agents: c.critical_agents,
            percent: RULE_COLUMNS
                .iter()
                .map(|&k| {
                    let n = c.per_rule.get(k).copied().unwrap_or(0);
                    (k.to_owned(), 100.0 * n as f64 / total)
                })
                .collect(),
        })
    }

    pub fn get(&self, rule: &str) -> f64 {
        self.percent.get(rule).copied().unwrap_or(0.0)
    }
}

/// Percentages of `total_agents` that triggered each rule, counting every
/// labelled agent at most once per rule.
pub fn critical_percentages(
    corpus_label: &str,
    labels: &[CriticalityLabel],
    total_agents: usize,
) -> Result<CriticalPercentageRow, StatsError> {
    if total_agents == 0 {
        return Err(StatsError::NoAgents);
    }
    if labels.len() > total_agents {
        return Err(StatsError::TooManyLabels {
            labelled: labels.len(),
            total: total_agents,
        });
    }
    let mut counts = CriticalCounts {
        total_agents,
        ..CriticalCounts::default()
    };
    for l in labels {
        let rules: BTreeSet<_> = l.triggered_rules();
        for r in rules {
            *counts.per_rule.entry(r.name().to_owned()).or_default() += 1;
        }
        counts.critical_agents += usize::from(l.is_critical);
    }
    CriticalPercentageRow::from_counts(corpus_label, &counts)
}
