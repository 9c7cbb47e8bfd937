//! Rendering of median and critical-percentage tables.
//!
//! CSV and JSON carry full precision and parse back to the same rows.
//! Markdown rounds to two decimals and follows the published table shapes.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::MetricId;
use crate::stats::{CriticalPercentageRow, DistributionSummary, Histogram, RULE_COLUMNS};

/// Metric rows of the median table, in published order.
pub const MEDIAN_TABLE_METRICS: [MetricId; 11] = [
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
];

/// Rule columns of the critical-percentage table with their headings.
pub const PERCENT_TABLE_COLUMNS: [(&str, &str); 6] = [
    ("VEL", "VEL"),
    ("ACC", "ACC"),
    ("TTC", "TTC"),
    ("DTPNZ", "DTPNZ"),
    ("DTB", "LADTB"),
    ("SLC", "SLC"),
];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed report: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
    Md,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [ReportFormat::Csv, ReportFormat::Json, ReportFormat::Md];

    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
            ReportFormat::Md => "md",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "md" | "markdown" => Ok(ReportFormat::Md),
            _ => Err(format!("unknown report format `{s}`")),
        }
    }
}

/// Summaries of one corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSummary {
    pub corpus_label: String,
    pub summaries: Vec<DistributionSummary>,
}

impl CorpusSummary {
    fn get(&self, m: MetricId) -> Option<&DistributionSummary> {
        self.summaries.iter().find(|s| s.metric == m)
    }
}

/// Flat quantile record, the machine form of the median table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianRow {
    pub corpus_label: String,
    pub metric: MetricId,
    pub count: usize,
    pub median: Option<f64>,
    pub q1: Option<f64>,
    pub q3: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

pub fn median_rows(corpora: &[CorpusSummary]) -> Vec<MedianRow> {
    corpora
        .iter()
        .flat_map(|c| {
            c.summaries.iter().map(|s| MedianRow {
                corpus_label: c.corpus_label.clone(),
                metric: s.metric,
                count: s.count,
                median: s.median,
                q1: s.q1,
                q3: s.q3,
                min: s.min,
                max: s.max,
            })
        })
        .collect()
}

fn md_num(v: Option<f64>) -> String {
    match v {
        Some(x) => {
            let s = format!("{x:.2}");
            if s == "-0.00" {
                "0.00".into()
            } else {
                s
            }
        }
        None => "-".into(),
    }
}

fn md_row(cells: &[String]) -> String {
    format!("| {} |\n", cells.join(" | "))
}

fn md_rule(n: usize) -> String {
    md_row(&vec!["---".to_owned(); n])
}

fn opt_to_field(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn render_medians(corpora: &[CorpusSummary], format: ReportFormat) -> String {
    let rows = median_rows(corpora);
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["corpus_label", "metric", "count", "median", "q1", "q3", "min", "max"])
                .expect("in-memory write");
            for r in &rows {
                w.write_record([
                    r.corpus_label.clone(),
                    r.metric.to_string(),
                    r.count.to_string(),
                    opt_to_field(r.median),
                    opt_to_field(r.q1),
                    opt_to_field(r.q3),
                    opt_to_field(r.min),
                    opt_to_field(r.max),
                ])
                .expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
        }
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(&rows).expect("rows serialize");
            s.push('\n');
            s
        }
        ReportFormat::Md => {
            let mut out = String::from("## Median values per metric\n\n");
            let mut head = vec!["Metric".to_owned()];
            head.extend(corpora.iter().map(|c| c.corpus_label.clone()));
            out.push_str(&md_row(&head));
            out.push_str(&md_rule(head.len()));
            for m in MEDIAN_TABLE_METRICS {
                let mut cells = vec![format!("{m} ({})", m.unit())];
                cells.extend(corpora.iter().map(|c| md_num(c.get(m).and_then(|s| s.median))));
                out.push_str(&md_row(&cells));
            }
            out.push_str("\n### Sample counts\n\n");
            out.push_str(&md_row(&head));
            out.push_str(&md_rule(head.len()));
            for m in MetricId::ALL {
                let mut cells = vec![format!("{m} ({})", m.unit())];
                cells.extend(
                    corpora
                        .iter()
                        .map(|c| c.get(m).map(|s| s.count).unwrap_or(0).to_string()),
                );
                out.push_str(&md_row(&cells));
            }
            let pet: Vec<String> = corpora
                .iter()
                .map(|c| md_num(c.get(MetricId::Pet).and_then(|s| s.median)))
                .collect();
            let _ = writeln!(out, "\nPET median (s): {}", pet.join(", "));
            out
        }
    }
}

fn parse_opt(field: &str) -> Result<Option<f64>, ReportError> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse()
        .map(Some)
        .map_err(|_| ReportError::Malformed(format!("bad number `{field}`")))
}

pub fn parse_medians(text: &str, format: ReportFormat) -> Result<Vec<MedianRow>, ReportError> {
    match format {
        ReportFormat::Json => Ok(serde_json::from_str(text)?),
        ReportFormat::Csv => {
            let mut rdr = csv::Reader::from_reader(text.as_bytes());
            let mut out = Vec::new();
            for rec in rdr.records() {
                let rec = rec?;
                if rec.len() != 8 {
                    return Err(ReportError::Malformed(format!("expected 8 fields, got {}", rec.len())));
                }
                out.push(MedianRow {
                    corpus_label: rec[0].to_owned(),
                    metric: rec[1].parse().map_err(ReportError::Malformed)?,
                    count: rec[2]
                        .parse()
                        .map_err(|_| ReportError::Malformed(format!("bad count `{}`", &rec[2])))?,
                    median: parse_opt(&rec[3])?,
                    q1: parse_opt(&rec[4])?,
                    q3: parse_opt(&rec[5])?,
                    min: parse_opt(&rec[6])?,
                    max: parse_opt(&rec[7])?,
                });
            }
            Ok(out)
        }
        ReportFormat::Md => Err(ReportError::Malformed("markdown is not a machine format".into())),
    }
}

pub fn render_critical(rows: &[CriticalPercentageRow], format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut head = vec!["corpus_label", "total_agents", "critical_agents"];
            head.extend(RULE_COLUMNS);
            w.write_record(&head).expect("in-memory write");
            for r in rows {
                let mut rec = vec![
                    r.corpus_label.clone(),
                    r.total_agents.to_string(),
                    r.critical_agents.to_string(),
                ];
                rec.extend(RULE_COLUMNS.iter().map(|k| r.get(k).to_string()));
                w.write_record(&rec).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
        }
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(rows).expect("rows serialize");
            s.push('\n');
            s
        }
        ReportFormat::Md => {
            let mut out = String::from("## Critical agents per metric threshold (%)\n\n");
            let mut head = vec!["Corpus".to_owned(), "Total Agents".to_owned()];
            head.extend(PERCENT_TABLE_COLUMNS.iter().map(|(_, h)| (*h).to_owned()));
            out.push_str(&md_row(&head));
            out.push_str(&md_rule(head.len()));
            for r in rows {
                let mut cells = vec![r.corpus_label.clone(), r.total_agents.to_string()];
                cells.extend(PERCENT_TABLE_COLUMNS.iter().map(|(k, _)| md_num(Some(r.get(k)))));
                out.push_str(&md_row(&cells));
            }
            out.push_str("\n### Other rules (%)\n\n");
            let extra: Vec<&str> = RULE_COLUMNS
                .iter()
                .copied()
                .filter(|k| !PERCENT_TABLE_COLUMNS.iter().any(|(c, _)| c == k))
                .collect();
            let mut head = vec!["Corpus".to_owned()];
            head.extend(extra.iter().map(|s| (*s).to_owned()));
            head.push("Any Rule".to_owned());
            out.push_str(&md_row(&head));
            out.push_str(&md_rule(head.len()));
            for r in rows {
                let mut cells = vec![r.corpus_label.clone()];
                cells.extend(extra.iter().map(|k| md_num(Some(r.get(k)))));
                let any = 100.0 * r.critical_agents as f64 / r.total_agents.max(1) as f64;
                cells.push(md_num(Some(any)));
                out.push_str(&md_row(&cells));
            }
            out
        }
    }
}

pub fn parse_critical(text: &str, format: ReportFormat) -> Result<Vec<CriticalPercentageRow>, ReportError> {
    match format {
        ReportFormat::Json => Ok(serde_json::from_str(text)?),
        ReportFormat::Csv => {
            let mut rdr = csv::Reader::from_reader(text.as_bytes());
            let headers = rdr.headers()?.clone();
            if headers.len() < 3 {
                return Err(ReportError::Malformed("missing columns".into()));
            }
            let mut out = Vec::new();
            for rec in rdr.records() {
                let rec = rec?;
                let int = |i: usize| {
                    rec[i]
                        .parse::<usize>()
                        .map_err(|_| ReportError::Malformed(format!("bad integer `{}`", &rec[i])))
                };
                let mut percent = std::collections::BTreeMap::new();
                for i in 3..headers.len() {
                    let v = parse_opt(&rec[i])?.unwrap_or(0.0);
                    percent.insert(headers[i].to_owned(), v);
                }
                out.push(CriticalPercentageRow {
                    corpus_label: rec[0].to_owned(),
                    total_agents: int(1)?,
                    critical_agents: int(2)?,
                    percent,
                });
            }
            Ok(out)
        }
        ReportFormat::Md => Err(ReportError::Malformed("markdown is not a machine format".into())),
    }
}

/// Histogram export: one row per bin, one count column per corpus.
pub fn render_histogram_csv(labels: &[&str], hists: &[&Histogram]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut head = vec!["bin_lo".to_owned(), "bin_hi".to_owned()];
    head.extend(labels.iter().map(|s| (*s).to_owned()));
    w.write_record(&head).expect("in-memory write");
    if let Some(first) = hists.first() {
        for i in 0..first.counts.len() {
            let mut rec = vec![first.edges[i].to_string(), first.edges[i + 1].to_string()];
            rec.extend(hists.iter().map(|h| h.counts[i].to_string()));
            w.write_record(&rec).expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// Parses a markdown pipe table starting at the first line beginning with `|`
/// after `heading`. Returns header cells and body rows.
pub fn parse_markdown_table(md: &str, heading: &str) -> Option<(Vec<String>, Vec<Vec<String>>)> {
    let start = md.find(heading)?;
    let mut lines = md[start..]
        .lines()
        .skip(1)
        .skip_while(|l| !l.starts_with('|'))
        .take_while(|l| l.starts_with('|'));
    let split = |l: &str| -> Vec<String> {
        l.trim()
            .trim_start_matches('|')
            .trim_end_matches('|')
            .split('|')
            .map(|c| c.trim().to_owned())
            .collect()
    };
    let head = split(lines.next()?);
    lines.next()?;
    Some((head, lines.map(split).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::MetricSample;
    use crate::stats::{summarize, CriticalCounts};
    use std::collections::BTreeMap;

    fn corpus(label: &str, scale: f64) -> CorpusSummary {
        let samples: Vec<_> = (0..9)
            .flat_map(|i| {
                [
                    MetricSample::new(MetricId::Vel, "a", None, i, scale * i as f64 / 3.0),
                    MetricSample::new(MetricId::Ttc, "a", Some("b"), i, 0.5 * (i + 1) as f64),
                ]
            })
            .collect();
        CorpusSummary {
            corpus_label: label.into(),
            summaries: summarize(&samples),
        }
    }

    fn pct_row(label: &str) -> CriticalPercentageRow {
        let counts = CriticalCounts {
            total_agents: 7,
            critical_agents: 2,
            per_rule: BTreeMap::from([("VEL".to_owned(), 1), ("SLC".to_owned(), 2)]),
        };
        CriticalPercentageRow::from_counts(label, &counts).unwrap()
    }

    #[test]
    fn machine_formats_round_trip() {
        let c = vec![corpus("x", 1.0), corpus("y", 0.7)];
        let rows = median_rows(&c);
        for f in [ReportFormat::Csv, ReportFormat::Json] {
            assert_eq!(parse_medians(&render_medians(&c, f), f).unwrap(), rows);
        }
        let p = vec![pct_row("x"), pct_row("y")];
        for f in [ReportFormat::Csv, ReportFormat::Json] {
            assert_eq!(parse_critical(&render_critical(&p, f), f).unwrap(), p);
        }
    }

    #[test]
    fn markdown_shapes() {
        let md = render_medians(&[corpus("x", 1.0), corpus("y", 1.0)], ReportFormat::Md);
        let (head, body) = parse_markdown_table(&md, "## Median values").unwrap();
        assert_eq!(head, vec!["Metric", "x", "y"]);
        let names: Vec<&str> = body.iter().map(|r| r[0].split(' ').next().unwrap()).collect();
        let expected: Vec<&str> = MEDIAN_TABLE_METRICS.iter().map(|m| m.as_str()).collect();
        assert_eq!(names, expected);
        assert_eq!(body[0][0], "VEL (m/s)");
        assert_eq!(body[0][1], "1.33");

        let md = render_critical(&[pct_row("x")], ReportFormat::Md);
        let (head, body) = parse_markdown_table(&md, "## Critical agents").unwrap();
        assert_eq!(
            head,
            vec!["Corpus", "Total Agents", "VEL", "ACC", "TTC", "DTPNZ", "LADTB", "SLC"]
        );
        assert_eq!(body, vec![vec!["x", "7", "14.29", "0.00", "0.00", "0.00", "0.00", "28.57"]]);
    }

    #[test]
    fn empty_corpus_renders() {
        let c = CorpusSummary {
            corpus_label: "empty".into(),
            summaries: summarize(&[]),
        };
        let md = render_medians(std::slice::from_ref(&c), ReportFormat::Md);
        assert!(md.contains("| VEL (m/s) | - |"));
        let csv = render_medians(std::slice::from_ref(&c), ReportFormat::Csv);
        assert_eq!(csv, render_medians(&[c], ReportFormat::Csv));
    }

    #[test]
    fn histogram_csv_layout() {
        let h = Histogram::uniform(0.0, 2.0, 2);
        let text = render_histogram_csv(&["a"], &[&h]);
        assert_eq!(text, "bin_lo,bin_hi,a\n0,1,0\n1,2,0\n");
    }
}
