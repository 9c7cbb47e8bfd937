//! Flat record form of metric samples: `metric,subject,other,frame,value`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{MetricId, MetricSample};

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    metric: MetricId,
    subject: String,
    other: Option<String>,
    frame: usize,
    value: f64,
}

impl From<&MetricSample> for Record {
    fn from(s: &MetricSample) -> Self {
        Record {
            metric: s.metric,
            subject: s.subject.clone(),
            other: s.other.clone(),
            frame: s.frame,
            value: s.value,
        }
    }
}

/// Writes defined samples as CSV with a header row.
pub fn write_samples_csv<W: Write>(w: W, samples: &[MetricSample]) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["metric", "subject", "other", "frame", "value"])?;
    for s in samples.iter().filter(|s| s.defined) {
        wtr.write_record([
            s.metric.as_str(),
            &s.subject,
            s.other.as_deref().unwrap_or(""),
            &s.frame.to_string(),
            &s.value.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Writes defined samples as one JSON object per line.
pub fn write_samples_jsonl<W: Write>(mut w: W, samples: &[MetricSample]) -> std::io::Result<()> {
    for s in samples.iter().filter(|s| s.defined) {
        serde_json::to_writer(&mut w, &Record::from(s))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads back a CSV produced by [`write_samples_csv`].
pub fn read_samples_csv<R: Read>(r: R) -> csv::Result<Vec<MetricSample>> {
    let mut rdr = csv::Reader::from_reader(r);
    rdr.deserialize::<Record>()
        .map(|rec| {
            rec.map(|r| MetricSample {
                metric: r.metric,
                subject: r.subject,
                other: r.other.filter(|o| !o.is_empty()),
                frame: r.frame,
                value: r.value,
                defined: true,
            })
        })
        .collect()
}
