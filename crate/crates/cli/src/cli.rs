use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use drive_audit_core::classify::FilterMode;
use drive_audit_core::metrics::{MetricId, PairScope};
use drive_audit_core::report::ReportFormat;
use drive_audit_core::stats::SummaryMode;
use drive_audit_core::synthgen::CaseKind;
use serde::de::DeserializeOwned;

use crate::config::{Overrides, RunConfig};
use crate::pipeline::{self, SynthRequest};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "drive-audit", version, about = "Criticality and rule-compliance audit of driving scenario corpora")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute metrics, labels and report tables for a corpus.
    Analyze {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        settings: Settings,
    },
    /// Split a corpus into critical and non-critical scenarios.
    Filter {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// drop-critical or keep-critical
        #[arg(long)]
        mode: Option<FilterMode>,
        #[command(flatten)]
        settings: Settings,
    },
    /// Write a synthetic corpus with analytically known metric values.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Case kinds to cycle through (default: all).
        #[arg(long, value_delimiter = ',')]
        kinds: Vec<CaseKind>,
        /// Non-interacting vehicles added to each scenario.
        #[arg(long, default_value_t = 8)]
        background: usize,
        /// Standard deviation of position noise in metres.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
    },
    /// Check scenario files against the format and its invariants.
    Validate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, env = "DRIVE_AUDIT_JOBS")]
        jobs: Option<usize>,
    },
    /// Re-render report tables from one or more `analyze` outputs.
    Report {
        /// `analyze` output directories, one per corpus column.
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Column labels, one per input (default: the label each run used).
        #[arg(long = "corpus-label", num_args = 1..)]
        corpus_labels: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        format: Option<Vec<ReportFormat>>,
        #[arg(long)]
        bins: Option<usize>,
        #[arg(long, value_parser = enum_arg::<SummaryMode>)]
        summary_mode: Option<SummaryMode>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// Flags shared by `analyze` and `filter`.
#[derive(Debug, Clone, Args)]
pub struct Settings {
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Threshold rules file (default: built-in rules).
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Metrics to compute, comma separated (default: all).
    #[arg(long, value_delimiter = ',')]
    pub metrics: Option<Vec<MetricId>>,
    #[arg(long)]
    pub corridor_halfwidth: Option<f64>,
    #[arg(long)]
    pub proximity_radius: Option<f64>,
    /// Spacing of the contact check between TTC horizons; 0 disables it.
    #[arg(long)]
    pub ttc_substep: Option<f64>,
    /// ego or all_vehicles
    #[arg(long, value_parser = enum_arg::<PairScope>)]
    pub pair_scope: Option<PairScope>,
    #[arg(long)]
    pub corpus_label: Option<String>,
    /// per-frame or per-agent-extreme
    #[arg(long, value_parser = enum_arg::<SummaryMode>)]
    pub summary_mode: Option<SummaryMode>,
    #[arg(long)]
    pub bins: Option<usize>,
    /// Report formats, comma separated: csv, json, md.
    #[arg(long, value_delimiter = ',')]
    pub format: Option<Vec<ReportFormat>>,
    /// Worker threads (default: all cores).
    #[arg(long, env = "DRIVE_AUDIT_JOBS")]
    pub jobs: Option<usize>,
}

fn enum_arg<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_owned())).map_err(|e| e.to_string())
}

impl Settings {
    fn overrides(&self) -> Overrides {
        Overrides {
            metrics: self.metrics.clone(),
            corridor_halfwidth: self.corridor_halfwidth,
            proximity_radius: self.proximity_radius,
            ttc_substep: self.ttc_substep,
            pair_scope: self.pair_scope,
            rules: self.rules.clone(),
            corpus_label: self.corpus_label.clone(),
            summary_mode: self.summary_mode,
            bins: self.bins,
            formats: self.format.clone(),
            ..Overrides::default()
        }
    }
}

fn resolve(flags: Overrides, config: Option<&Path>) -> Result<RunConfig, CliError> {
    let file = match config {
        Some(p) => Overrides::from_file(p)?,
        None => Overrides::default(),
    };
    RunConfig::resolve(flags.over(file))
}

fn jobs(j: Option<usize>) -> Result<usize, CliError> {
    match j {
        Some(0) => Err(CliError::Config("--jobs must be at least 1".into())),
        Some(n) => Ok(n),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn finish(out: &Path, command: &str, s: &pipeline::RunSummary) -> Result<i32, CliError> {
    let mut lines = vec![format!("processed {} scenarios, {} failed", s.processed, s.failures.len())];
    lines.extend(s.failures.iter().map(|f| format!("failed {}: {}", f.file, f.error)));
    pipeline::write_run_log(out, command, &lines)?;
    for l in &lines {
        println!("{l}");
    }
    Ok(if s.failures.is_empty() { 0 } else { 1 })
}

/// Runs one command and returns the process exit code: 0 on success, 1 when
/// some input files failed.
pub fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Analyze { input, out, settings } => {
            let cfg = resolve(settings.overrides(), settings.config.as_deref())?;
            let jobs = jobs(settings.jobs)?;
            let inputs = pipeline::discover(&input)?;
            let s = pipeline::analyze(&inputs, &cfg, jobs, &out)?;
            finish(&out, "analyze", &s)
        }
        Command::Filter {
            input,
            out,
            mode,
            settings,
        } => {
            let flags = Overrides {
                mode,
                ..settings.overrides()
            };
            let cfg = resolve(flags, settings.config.as_deref())?;
            let jobs = jobs(settings.jobs)?;
            let inputs = pipeline::discover(&input)?;
            let s = pipeline::filter(&inputs, &cfg, jobs, &out)?;
            println!("emitted {} of {} scenarios", s.scenario_ids.len(), s.processed);
            finish(&out, "filter", &s)
        }
        Command::Synth {
            out,
            n,
            seed,
            kinds,
            background,
            noise,
        } => {
            let req = SynthRequest {
                n,
                seed,
                kinds,
                background,
                noise_sigma: noise,
            };
            let written = pipeline::synth(&req, &out)?;
            println!("wrote {written} scenarios to {}", out.display());
            Ok(0)
        }
        Command::Validate { input, jobs: j } => {
            let inputs = pipeline::discover(&input)?;
            let checks = pipeline::validate(&inputs, jobs(j)?)?;
            let bad = checks.iter().filter(|c| c.error.is_some()).count();
            for c in &checks {
                match &c.error {
                    None => println!("ok {}", c.file),
                    Some(e) => println!("invalid {}: {e}", c.file),
                }
            }
            println!("{} files, {bad} invalid", checks.len());
            Ok(if bad == 0 { 0 } else { 1 })
        }
        Command::Report {
            input,
            out,
            corpus_labels,
            format,
            bins,
            summary_mode,
            config,
        } => {
            let flags = Overrides {
                formats: format,
                bins,
                summary_mode,
                ..Overrides::default()
            };
            let cfg = resolve(flags, config.as_deref())?;
            pipeline::report(&input, &corpus_labels, &cfg, &out)?;
            println!("rendered {} corpora to {}", input.len(), out.display());
            Ok(0)
        }
    }
}
