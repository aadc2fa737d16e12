//! CSV and JSON renderings of evaluation results.

use std::path::Path;

use super::pipeline::{EvaluationReport, SweepRow};
use crate::error::{Error, Result};

const REPORT_HEADER: [&str; 15] = [
    "method",
    "extractor",
    "classifier",
    "n_channels",
    "strategy",
    "unit",
    "n_splits",
    "accuracy",
    "sensitivity",
    "specificity",
    "tp",
    "fn",
    "tn",
    "fp",
    "seed",
];

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

fn csv_string(build: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    build(&mut w).expect("writing CSV to memory");
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("CSV is UTF-8")
}

impl EvaluationReport {
    /// One line per configuration; undefined metrics are written as `NA`.
    pub fn to_csv(&self) -> String {
        let unit = serde_json::to_value(self.unit).expect("unit serializes");
        let unit = unit.as_str().unwrap_or_default().to_string();
        csv_string(|w| {
            w.write_record(REPORT_HEADER)?;
            for r in &self.rows {
                w.write_record([
                    r.method.to_string(),
                    r.extractor.to_string(),
                    r.classifier.to_string(),
                    r.n_channels.to_string(),
                    r.strategy.to_string(),
                    unit.clone(),
                    r.splits.len().to_string(),
                    r.accuracy.to_string(),
                    opt(r.sensitivity),
                    opt(r.specificity),
                    r.counts.tp.to_string(),
                    r.counts.fn_.to_string(),
                    r.counts.tn.to_string(),
                    r.counts.fp.to_string(),
                    self.seed.to_string(),
                ])?;
            }
            Ok(())
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Writes `report.csv` and `report.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        write_text(&dir.join("report.csv"), &self.to_csv())?;
        write_text(&dir.join("report.json"), &self.to_json())
    }
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    csv_string(|w| {
        w.write_record(["method", "extractor", "classifier", "n_channels", "accuracy"])?;
        for r in rows {
            w.write_record([
                r.method.to_string(),
                r.extractor.to_string(),
                r.classifier.to_string(),
                r.n_channels.to_string(),
                r.accuracy.to_string(),
            ])?;
        }
        Ok(())
    })
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
