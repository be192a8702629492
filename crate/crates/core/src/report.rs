//! Sweep reports: line-delimited JSON and CSV with a fixed column order,
//! plus the plot-ready series derived from them.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairpca::Method;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub r: usize,
    pub method: Method,
    pub alpha: f64,
    pub overall_err: f64,
    pub err_a: f64,
    pub err_b: f64,
    pub disparity: f64,
    pub fairness: f64,
    pub runtime_ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub dataset_id: String,
    pub balanced: bool,
    pub rows: Vec<SweepRow>,
}

/// On-disk record. Field order is the column order of both formats.
#[derive(Serialize, Deserialize)]
struct Record {
    dataset_id: String,
    balanced: bool,
    r: usize,
    method: Method,
    alpha: f64,
    overall_err: f64,
    err_a: f64,
    err_b: f64,
    disparity: f64,
    fairness: f64,
    runtime_ms: u64,
}

impl Record {
    fn new(report: &SweepReport, row: &SweepRow) -> Self {
        Record {
            dataset_id: report.dataset_id.clone(),
            balanced: report.balanced,
            r: row.r,
            method: row.method,
            alpha: row.alpha,
            overall_err: row.overall_err,
            err_a: row.err_a,
            err_b: row.err_b,
            disparity: row.disparity,
            fairness: row.fairness,
            runtime_ms: row.runtime_ms,
        }
    }

    fn into_row(self) -> SweepRow {
        SweepRow {
            r: self.r,
            method: self.method,
            alpha: self.alpha,
            overall_err: self.overall_err,
            err_a: self.err_a,
            err_b: self.err_b,
            disparity: self.disparity,
            fairness: self.fairness,
            runtime_ms: self.runtime_ms,
        }
    }
}

pub const CSV_HEADER: &str =
    "dataset_id,balanced,r,method,alpha,overall_err,err_a,err_b,disparity,fairness,runtime_ms";

impl SweepReport {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            let line = serde_json::to_string(&Record::new(self, row))
                .expect("record fields are always serializable");
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(Record::new(self, row))
                .expect("record fields are always serializable");
        }
        let body = String::from_utf8(w.into_inner().expect("in-memory writer"))
            .expect("csv output is utf-8");
        format!("{CSV_HEADER}\n{body}")
    }

    fn from_records(records: Vec<Record>) -> Result<Self> {
        let (dataset_id, balanced) = records
            .first()
            .map_or((String::new(), false), |r| (r.dataset_id.clone(), r.balanced));
        if records
            .iter()
            .any(|r| r.dataset_id != dataset_id || r.balanced != balanced)
        {
            return Err(Error::Report(
                "rows disagree on dataset_id or balanced".into(),
            ));
        }
        let report = SweepReport {
            dataset_id,
            balanced,
            rows: records.into_iter().map(Record::into_row).collect(),
        };
        report.validate()?;
        Ok(report)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: Record = serde_json::from_str(line)
                .map_err(|e| Error::Report(format!("line {}: {e}", i + 1)))?;
            records.push(rec);
        }
        Self::from_records(records)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::Report(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        if header.join(",") != CSV_HEADER {
            return Err(Error::Report(format!("unexpected header `{}`", header.join(","))));
        }
        let records = rdr
            .deserialize()
            .collect::<std::result::Result<Vec<Record>, _>>()
            .map_err(|e| Error::Report(e.to_string()))?;
        Self::from_records(records)
    }

    /// Reads a report, choosing the format from the extension (`.csv` or
    /// anything else for line-delimited JSON).
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if path.extension().is_some_and(|e| e == "csv") {
            Self::from_csv(&text)
        } else {
            Self::from_jsonl(&text)
        }
    }

    /// Writes `<stem>.jsonl` and `<stem>.csv` next to `path`; returns both paths.
    pub fn write(&self, path: &Path) -> Result<(PathBuf, PathBuf)> {
        let jsonl = path.with_extension("jsonl");
        let csv = path.with_extension("csv");
        write_file(&jsonl, &self.to_jsonl())?;
        write_file(&csv, &self.to_csv())?;
        Ok((jsonl, csv))
    }

    /// One row per `(r, method)`, ranks strictly increasing within each
    /// method, and `fairness = disparity²`.
    pub fn validate(&self) -> Result<()> {
        for method in Method::ALL {
            let ranks: Vec<usize> = self
                .rows
                .iter()
                .filter(|row| row.method == method)
                .map(|row| row.r)
                .collect();
            if ranks.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Report(format!(
                    "ranks for {method} are not strictly increasing"
                )));
            }
        }
        for row in &self.rows {
            let fields = [
                row.alpha,
                row.overall_err,
                row.err_a,
                row.err_b,
                row.disparity,
                row.fairness,
            ];
            if fields.iter().any(|v| !v.is_finite()) {
                return Err(Error::Report(format!("non-finite value at r={}", row.r)));
            }
            let sq = row.disparity * row.disparity;
            if (row.fairness - sq).abs() > 1e-12 * sq.abs().max(row.fairness.abs()) {
                return Err(Error::Report(format!(
                    "fairness {} is not disparity² at r={} ({})",
                    row.fairness, row.r, row.method
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// The three panel families: overall error, fairness, and per-group
/// errors, each against the rank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlotData {
    pub overall_error: String,
    pub fairness: String,
    pub group_errors: String,
}

pub const PLOT_FILES: [&str; 3] = ["overall_error.csv", "fairness.csv", "group_errors.csv"];

impl PlotData {
    pub fn from_report(report: &SweepReport) -> Self {
        let mut overall = String::from("method,r,overall_err\n");
        let mut fairness = String::from("method,r,fairness\n");
        let mut groups = String::from("method,r,err_a,err_b\n");
        for method in Method::ALL {
            for row in report.rows.iter().filter(|row| row.method == method) {
                overall.push_str(&format!("{method},{},{}\n", row.r, row.overall_err));
                fairness.push_str(&format!("{method},{},{}\n", row.r, row.fairness));
                groups.push_str(&format!("{method},{},{},{}\n", row.r, row.err_a, row.err_b));
            }
        }
        PlotData {
            overall_error: overall,
            fairness,
            group_errors: groups,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let contents = [&self.overall_error, &self.fairness, &self.group_errors];
        let mut paths = Vec::new();
        for (name, body) in PLOT_FILES.iter().zip(contents) {
            let p = dir.join(name);
            write_file(&p, body)?;
            paths.push(p);
        }
        Ok(paths)
    }
}
