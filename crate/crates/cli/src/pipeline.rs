//! Corpus-level runs behind the subcommands.
//!
//! Scenarios are evaluated in parallel in fixed-size chunks; everything that
//! touches the output directory happens on the calling thread in input order,
//! so the worker count never shows up in the artifacts.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use drive_audit_core::classify::{classify_agents, classify_scenario, CriticalityLabel, ManifestEntry, ScenarioVerdict, Trigger};
use drive_audit_core::metrics::{read_samples_csv, write_samples_csv, write_samples_jsonl, compute_all, ConflictArea, MetricId, MetricSample};
use drive_audit_core::report::{render_critical, render_histogram_csv, render_medians, CorpusSummary};
use drive_audit_core::scenario::{load_scenario, save_scenario, Scenario};
use drive_audit_core::stats::{CriticalCounts, CriticalPercentageRow, SampleAccumulator, RULE_COLUMNS};
use drive_audit_core::synthgen::{generate_corpus, write_corpus, CaseKind, CorpusOptions};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::CliError;

/// Scenarios evaluated per parallel batch, per worker.
const CHUNK_PER_WORKER: usize = 8;

pub const RUN_CONFIG_FILE: &str = "run_config.json";
pub const SAMPLES_DIR: &str = "samples";
pub const VERDICTS_FILE: &str = "verdicts.jsonl";

/// A file that could not be processed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub file: String,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunSummary {
    pub processed: usize,
    pub failures: Vec<Failure>,
    /// Scenario ids written or emitted, in input order.
    pub scenario_ids: Vec<String>,
}

/// Scenario files under `input`: the file itself, or the `.json` files
/// directly inside a directory, sorted by name.
pub fn discover(input: &Path) -> Result<Vec<PathBuf>, CliError> {
    let meta = fs::metadata(input).map_err(|e| CliError::io(input, e))?;
    if meta.is_file() {
        return Ok(vec![input.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(input)
        .map_err(|e| CliError::io(input, e))?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {jobs} workers: {e}")))
}

/// Maps `f` over `items` in parallel batches and hands results to `sink` in
/// input order.
fn ordered_batches<T, R, F, S>(items: &[T], jobs: usize, f: F, mut sink: S) -> Result<(), CliError>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
    S: FnMut(R) -> Result<(), CliError>,
{
    let pool = pool(jobs)?;
    for chunk in items.chunks(jobs.max(1) * CHUNK_PER_WORKER) {
        let results: Vec<R> = pool.install(|| chunk.par_iter().map(&f).collect());
        for r in results {
            sink(r)?;
        }
    }
    Ok(())
}

fn file_name(p: &Path) -> String {
    p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn jsonl<T: Serialize>(items: impl IntoIterator<Item = T>) -> String {
    let mut s = String::new();
    for it in items {
        s.push_str(&serde_json::to_string(&it).expect("record serializes"));
        s.push('\n');
    }
    s
}

fn create_dir(p: &Path) -> Result<(), CliError> {
    fs::create_dir_all(p).map_err(|e| CliError::io(p, e))
}

fn timestamp() -> String {
    let d = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default();
    format!("{}.{:03}", d.as_secs(), d.subsec_millis())
}

/// Appends to `run.log`, the only artifact allowed to vary between runs.
pub fn write_run_log(out: &Path, command: &str, lines: &[String]) -> Result<(), CliError> {
    let mut s = format!("[{}] {command} started\n", timestamp());
    for l in lines {
        s.push_str(l);
        s.push('\n');
    }
    s.push_str(&format!("[{}] {command} finished\n", timestamp()));
    write(&out.join("run.log"), s)
}

#[derive(Debug, Clone, Serialize)]
struct LabelRecord<'a> {
    scenario_id: &'a str,
    agent_id: &'a str,
    is_critical: bool,
    rules: Vec<&'static str>,
    triggers: &'a [Trigger],
}

#[derive(Debug, Clone, Serialize)]
struct AreaRecord<'a> {
    scenario_id: &'a str,
    #[serde(flatten)]
    area: &'a ConflictArea,
}

/// Per-corpus running totals behind the report tables.
#[derive(Debug, Clone)]
pub struct CorpusAggregate {
    pub label: String,
    pub samples: SampleAccumulator,
    pub counts: CriticalCounts,
}

impl CorpusAggregate {
    pub fn new(label: &str, cfg: &RunConfig) -> Self {
        Self {
            label: label.to_owned(),
            samples: SampleAccumulator::new(cfg.summary_mode),
            counts: CriticalCounts::default(),
        }
    }

    pub fn add(&mut self, samples: &[MetricSample], verdict: &ScenarioVerdict) {
        self.samples.add_samples(samples);
        self.counts.add_verdict(verdict);
    }

    fn percentages(&self) -> CriticalPercentageRow {
        CriticalPercentageRow::from_counts(&self.label, &self.counts).unwrap_or_else(|_| CriticalPercentageRow {
            corpus_label: self.label.clone(),
            total_agents: 0,
            critical_agents: 0,
            percent: RULE_COLUMNS.iter().map(|k| ((*k).to_owned(), 0.0)).collect(),
        })
    }
}

/// Median, critical-percentage and histogram tables for one or more corpora.
pub fn write_reports(out: &Path, corpora: &[CorpusAggregate], cfg: &RunConfig) -> Result<(), CliError> {
    let summaries: Vec<CorpusSummary> = corpora
        .iter()
        .map(|c| CorpusSummary {
            corpus_label: c.label.clone(),
            summaries: c.samples.summarize(cfg.bins),
        })
        .collect();
    let rows: Vec<CriticalPercentageRow> = corpora.iter().map(CorpusAggregate::percentages).collect();
    for &fmt in &cfg.formats {
        let ext = fmt.extension();
        write(&out.join(format!("medians.{ext}")), render_medians(&summaries, fmt))?;
        write(&out.join(format!("critical_pct.{ext}")), render_critical(&rows, fmt))?;
    }
    let labels: Vec<&str> = corpora.iter().map(|c| c.label.as_str()).collect();
    for (i, m) in MetricId::ALL.into_iter().enumerate() {
        let hists: Vec<_> = summaries.iter().map(|s| &s.summaries[i].histogram).collect();
        write(
            &out.join(format!("hist_{}.csv", m.as_str().to_ascii_lowercase())),
            render_histogram_csv(&labels, &hists),
        )?;
    }
    Ok(())
}

struct Evaluated {
    scenario: Scenario,
    samples: Vec<MetricSample>,
    labels: Vec<CriticalityLabel>,
    verdict: ScenarioVerdict,
    areas: Vec<ConflictArea>,
}

fn evaluate(path: &Path, cfg: &RunConfig) -> Result<Evaluated, Failure> {
    let scenario = load_scenario(path).map_err(|e| Failure {
        file: file_name(path),
        error: e.to_string(),
    })?;
    let out = compute_all(&scenario, &cfg.metric);
    let ids: Vec<String> = scenario.agents.iter().map(|a| a.agent_id.clone()).collect();
    let labels = classify_agents(&out.samples, &cfg.rules, &ids);
    let verdict = classify_scenario(&scenario.meta.scenario_id, &labels);
    let (samples, areas) = (out.samples, out.conflict_areas);
    Ok(Evaluated {
        scenario,
        samples,
        labels,
        verdict,
        areas,
    })
}

fn duplicate(path: &Path, id: &str) -> Failure {
    Failure {
        file: file_name(path),
        error: format!("duplicate scenario_id `{id}`"),
    }
}

/// Computes metrics and labels for every scenario in `inputs` and writes the
/// full artifact set to `out`.
pub fn analyze(inputs: &[PathBuf], cfg: &RunConfig, jobs: usize, out: &Path) -> Result<RunSummary, CliError> {
    let samples_dir = out.join(SAMPLES_DIR);
    create_dir(&samples_dir)?;
    let mut summary = RunSummary::default();
    let mut seen = BTreeSet::new();
    let mut agg = CorpusAggregate::new(&cfg.corpus_label, cfg);
    let (mut labels_out, mut verdicts_out, mut areas_out) = (String::new(), String::new(), String::new());

    ordered_batches(
        inputs,
        jobs,
        |p| evaluate(p, cfg).map(|e| (p.clone(), e)),
        |r| {
            let (path, e) = match r {
                Ok(x) => x,
                Err(f) => {
                    log::warn!("skipping {}: {}", f.file, f.error);
                    summary.failures.push(f);
                    return Ok(());
                }
            };
            let id = e.scenario.meta.scenario_id.clone();
            if !seen.insert(id.clone()) {
                summary.failures.push(duplicate(&path, &id));
                return Ok(());
            }
            let mut csv = Vec::new();
            write_samples_csv(&mut csv, &e.samples).map_err(|err| CliError::Output(err.to_string()))?;
            write(&samples_dir.join(format!("{id}.csv")), csv)?;
            let mut jl = Vec::new();
            write_samples_jsonl(&mut jl, &e.samples).map_err(|err| CliError::io(&samples_dir, err))?;
            write(&samples_dir.join(format!("{id}.jsonl")), jl)?;

            labels_out.push_str(&jsonl(e.labels.iter().map(|l| LabelRecord {
                scenario_id: &id,
                agent_id: &l.agent_id,
                is_critical: l.is_critical,
                rules: l.triggered_rules().into_iter().map(|r| r.name()).collect(),
                triggers: &l.triggers,
            })));
            verdicts_out.push_str(&jsonl([&e.verdict]));
            areas_out.push_str(&jsonl(e.areas.iter().map(|a| AreaRecord {
                scenario_id: &id,
                area: a,
            })));
            agg.add(&e.samples, &e.verdict);
            summary.processed += 1;
            summary.scenario_ids.push(id);
            Ok(())
        },
    )?;

    write(&out.join("labels.jsonl"), labels_out)?;
    write(&out.join(VERDICTS_FILE), verdicts_out)?;
    write(&out.join("conflict_areas.jsonl"), areas_out)?;
    write(&out.join("failures.jsonl"), jsonl(&summary.failures))?;
    write_reports(out, &[agg], cfg)?;
    write(&out.join(RUN_CONFIG_FILE), cfg.to_json())?;
    Ok(summary)
}

/// Copies scenarios selected by `cfg.mode` to `out/scenarios` and writes a
/// manifest covering every input.
pub fn filter(inputs: &[PathBuf], cfg: &RunConfig, jobs: usize, out: &Path) -> Result<RunSummary, CliError> {
    let dir = out.join("scenarios");
    create_dir(&dir)?;
    let mut summary = RunSummary::default();
    let mut manifest = Vec::new();
    let mut seen = BTreeSet::new();
    ordered_batches(
        inputs,
        jobs,
        |p| evaluate(p, cfg).map(|e| (p.clone(), e)),
        |r| {
            let (path, e) = match r {
                Ok(x) => x,
                Err(f) => {
                    log::warn!("skipping {}: {}", f.file, f.error);
                    summary.failures.push(f);
                    return Ok(());
                }
            };
            let id = e.verdict.scenario_id.clone();
            if !seen.insert(id.clone()) {
                summary.failures.push(duplicate(&path, &id));
                return Ok(());
            }
            let emitted = cfg.mode.emits(e.verdict.is_critical);
            manifest.push(ManifestEntry {
                scenario_id: id.clone(),
                critical: e.verdict.is_critical,
                emitted,
                triggering_metrics: e.verdict.triggering_rules(),
            });
            if emitted {
                save_scenario(&e.scenario, dir.join(format!("{id}.json")))
                    .map_err(|err| CliError::Output(err.to_string()))?;
                summary.scenario_ids.push(id);
            }
            summary.processed += 1;
            Ok(())
        },
    )?;
    write(&out.join("manifest.jsonl"), jsonl(&manifest))?;
    write(&out.join("failures.jsonl"), jsonl(&summary.failures))?;
    write(&out.join(RUN_CONFIG_FILE), cfg.to_json())?;
    Ok(summary)
}

/// Per-file result of `validate`.
#[derive(Debug, Clone, PartialEq)]
pub struct FileCheck {
    pub file: String,
    pub error: Option<String>,
}

pub fn validate(inputs: &[PathBuf], jobs: usize) -> Result<Vec<FileCheck>, CliError> {
    let mut out = Vec::with_capacity(inputs.len());
    ordered_batches(
        inputs,
        jobs,
        |p| FileCheck {
            file: file_name(p),
            error: load_scenario(p).err().map(|e| e.to_string()),
        },
        |c| {
            out.push(c);
            Ok(())
        },
    )?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthRequest {
    pub n: usize,
    pub seed: u64,
    pub kinds: Vec<CaseKind>,
    pub background: usize,
    pub noise_sigma: f64,
}

/// Writes a synthetic corpus with its `expected.jsonl`.
pub fn synth(req: &SynthRequest, out: &Path) -> Result<usize, CliError> {
    let opts = CorpusOptions {
        kinds: if req.kinds.is_empty() { CaseKind::ALL.to_vec() } else { req.kinds.clone() },
        background: req.background,
        noise_sigma: req.noise_sigma,
    };
    let corpus = generate_corpus(req.n, req.seed, &opts).map_err(|e| CliError::Config(e.to_string()))?;
    write_corpus(out, &corpus).map_err(|e| CliError::Output(e.to_string()))?;
    Ok(corpus.len())
}

/// Rebuilds one corpus aggregate from an `analyze` output directory.
pub fn load_dump(dir: &Path, cfg: &RunConfig, label: Option<&str>) -> Result<CorpusAggregate, CliError> {
    let rc_path = dir.join(RUN_CONFIG_FILE);
    let text = fs::read_to_string(&rc_path).map_err(|e| CliError::io(&rc_path, e))?;
    let dumped: RunConfig =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", rc_path.display())))?;
    let label = label.unwrap_or(&dumped.corpus_label);
    let mut agg = CorpusAggregate::new(label, cfg);

    let vpath = dir.join(VERDICTS_FILE);
    let verdicts = fs::read_to_string(&vpath).map_err(|e| CliError::io(&vpath, e))?;
    let mut by_id: BTreeMap<String, ScenarioVerdict> = BTreeMap::new();
    let mut order = Vec::new();
    for line in verdicts.lines().filter(|l| !l.trim().is_empty()) {
        let v: ScenarioVerdict =
            serde_json::from_str(line).map_err(|e| CliError::Output(format!("{}: {e}", vpath.display())))?;
        order.push(v.scenario_id.clone());
        by_id.insert(v.scenario_id.clone(), v);
    }
    for id in order {
        let spath = dir.join(SAMPLES_DIR).join(format!("{id}.csv"));
        let f = fs::File::open(&spath).map_err(|e| CliError::io(&spath, e))?;
        let samples =
            read_samples_csv(f).map_err(|e| CliError::Output(format!("{}: {e}", spath.display())))?;
        agg.add(&samples, &by_id[&id]);
    }
    Ok(agg)
}

/// Re-renders report tables from one or more `analyze` outputs.
pub fn report(dirs: &[PathBuf], labels: &[String], cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    if !labels.is_empty() && labels.len() != dirs.len() {
        return Err(CliError::Config(format!(
            "{} corpus labels given for {} inputs",
            labels.len(),
            dirs.len()
        )));
    }
    let corpora: Vec<CorpusAggregate> = dirs
        .iter()
        .enumerate()
        .map(|(i, d)| load_dump(d, cfg, labels.get(i).map(String::as_str)))
        .collect::<Result<_, _>>()?;
    create_dir(out)?;
    write_reports(out, &corpora, cfg)
}
