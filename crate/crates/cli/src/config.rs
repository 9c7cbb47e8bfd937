//! Run configuration: defaults, an optional JSON config file and command-line
//! flags, applied in that order.

use std::fs;
use std::path::{Path, PathBuf};

use drive_audit_core::classify::{FilterMode, RuleSet};
use drive_audit_core::metrics::{MetricConfig, MetricId, PairScope, TtcConfig};
use drive_audit_core::report::ReportFormat;
use drive_audit_core::stats::{SummaryMode, DEFAULT_BINS};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_CORPUS_LABEL: &str = "corpus";

/// Optional settings shared by the config file and the command line.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Overrides {
    pub metrics: Option<Vec<MetricId>>,
    pub corridor_halfwidth: Option<f64>,
    pub proximity_radius: Option<f64>,
    pub ttc_step: Option<f64>,
    pub ttc_max: Option<f64>,
    /// Zero disables sub-stepping.
    pub ttc_substep: Option<f64>,
    pub pair_scope: Option<PairScope>,
    pub rules: Option<PathBuf>,
    pub corpus_label: Option<String>,
    pub summary_mode: Option<SummaryMode>,
    pub bins: Option<usize>,
    pub formats: Option<Vec<ReportFormat>>,
    pub mode: Option<FilterMode>,
}

impl Overrides {
    /// Fields set in `self` win over `base`.
    pub fn over(self, base: Overrides) -> Overrides {
        Overrides {
            metrics: self.metrics.or(base.metrics),
            corridor_halfwidth: self.corridor_halfwidth.or(base.corridor_halfwidth),
            proximity_radius: self.proximity_radius.or(base.proximity_radius),
            ttc_step: self.ttc_step.or(base.ttc_step),
            ttc_max: self.ttc_max.or(base.ttc_max),
            ttc_substep: self.ttc_substep.or(base.ttc_substep),
            pair_scope: self.pair_scope.or(base.pair_scope),
            rules: self.rules.or(base.rules),
            corpus_label: self.corpus_label.or(base.corpus_label),
            summary_mode: self.summary_mode.or(base.summary_mode),
            bins: self.bins.or(base.bins),
            formats: self.formats.or(base.formats),
            mode: self.mode.or(base.mode),
        }
    }

    /// Reads a config file; a relative `rules` path is taken relative to it.
    pub fn from_file(path: &Path) -> Result<Overrides, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut o: Overrides = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if let (Some(r), Some(dir)) = (&o.rules, path.parent()) {
            if r.is_relative() {
                o.rules = Some(dir.join(r));
            }
        }
        Ok(o)
    }
}

/// Fully resolved settings, echoed to `run_config.json`. Worker count is
/// deliberately absent: it never affects results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub metric: MetricConfig,
    pub rules: RuleSet,
    pub corpus_label: String,
    pub summary_mode: SummaryMode,
    pub bins: usize,
    pub formats: Vec<ReportFormat>,
    pub mode: FilterMode,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            metric: MetricConfig::default(),
            rules: RuleSet::default(),
            corpus_label: DEFAULT_CORPUS_LABEL.into(),
            summary_mode: SummaryMode::default(),
            bins: DEFAULT_BINS,
            formats: ReportFormat::ALL.to_vec(),
            mode: FilterMode::DropCritical,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::Config(format!("{name} must be a positive number, got {v}")))
    }
}

impl RunConfig {
    pub fn resolve(o: Overrides) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(m) = o.metrics {
            if m.is_empty() {
                return Err(CliError::Config("metric selection is empty".into()));
            }
            cfg.metric.metrics = m.into_iter().collect();
        }
        if let Some(v) = o.corridor_halfwidth {
            cfg.metric.corridor_halfwidth = positive("corridor_halfwidth", v)?;
        }
        if let Some(v) = o.proximity_radius {
            cfg.metric.proximity_radius = positive("proximity_radius", v)?;
        }
        if o.ttc_step.is_some() || o.ttc_max.is_some() {
            let step = o.ttc_step.unwrap_or(0.5);
            let max = o.ttc_max.unwrap_or(40.0);
            cfg.metric.ttc = TtcConfig::with_horizon(step, max).map_err(CliError::Config)?;
        }
        if let Some(h) = o.ttc_substep {
            cfg.metric.ttc.substep = (h != 0.0).then_some(h);
        }
        cfg.metric.ttc.validate().map_err(CliError::Config)?;
        if let Some(p) = o.pair_scope {
            cfg.metric.pair_scope = p;
        }
        if let Some(path) = o.rules {
            let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            cfg.rules = RuleSet::from_json(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        }
        if let Some(l) = o.corpus_label {
            if l.trim().is_empty() {
                return Err(CliError::Config("corpus label is empty".into()));
            }
            cfg.corpus_label = l;
        }
        if let Some(m) = o.summary_mode {
            cfg.summary_mode = m;
        }
        if let Some(b) = o.bins {
            if b == 0 {
                return Err(CliError::Config("bins must be > 0".into()));
            }
            cfg.bins = b;
        }
        if let Some(f) = o.formats {
            if f.is_empty() {
                return Err(CliError::Config("no report format selected".into()));
            }
            cfg.formats = f.iter().enumerate().filter(|(i, x)| !f[..*i].contains(x)).map(|(_, x)| *x).collect();
        }
        if let Some(m) = o.mode {
            cfg.mode = m;
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_file_beat_defaults() {
        let file = Overrides {
            corridor_halfwidth: Some(2.0),
            corpus_label: Some("file".into()),
            ..Overrides::default()
        };
        let flags = Overrides {
            corpus_label: Some("flag".into()),
            ..Overrides::default()
        };
        let cfg = RunConfig::resolve(flags.over(file)).unwrap();
        assert_eq!(cfg.corpus_label, "flag");
        assert_eq!(cfg.metric.corridor_halfwidth, 2.0);
        assert_eq!(cfg.metric.proximity_radius, 5.0);
    }

    #[test]
    fn bad_values_are_config_errors() {
        for o in [
            Overrides {
                corridor_halfwidth: Some(-1.0),
                ..Overrides::default()
            },
            Overrides {
                bins: Some(0),
                ..Overrides::default()
            },
            Overrides {
                metrics: Some(vec![]),
                ..Overrides::default()
            },
            Overrides {
                ttc_substep: Some(-0.1),
                ..Overrides::default()
            },
        ] {
            assert!(matches!(RunConfig::resolve(o), Err(CliError::Config(_))));
        }
    }

    #[test]
    fn config_file_parses_and_rejects_unknown_keys() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        fs::write(&p, r#"{"metrics": ["VEL", "TTC"], "ttc_substep": 0, "rules": "r.json"}"#).unwrap();
        let o = Overrides::from_file(&p).unwrap();
        assert_eq!(o.rules.as_deref(), Some(dir.path().join("r.json").as_path()));
        fs::write(dir.path().join("r.json"), RuleSet::default().to_json()).unwrap();
        let cfg = RunConfig::resolve(o).unwrap();
        assert_eq!(cfg.metric.metrics.len(), 2);
        assert_eq!(cfg.metric.ttc.substep, None);

        fs::write(&p, r#"{"jobs": 4}"#).unwrap();
        assert!(matches!(Overrides::from_file(&p), Err(CliError::Config(_))));
    }

    #[test]
    fn resolved_config_round_trips() {
        let cfg = RunConfig::default();
        let back: RunConfig = serde_json::from_str(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }
}
