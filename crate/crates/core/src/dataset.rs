//! CSV ingestion, centering and sensitive-group partitioning.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Feature matrix plus one group label per row, before centering.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub feature_names: Vec<String>,
    pub features: Matrix,
    pub labels: Vec<String>,
}

/// Which of the two groups, in order of first appearance in the file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Group {
    First,
    Second,
}

impl Group {
    pub fn other(self) -> Group {
        match self {
            Group::First => Group::Second,
            Group::Second => Group::First,
        }
    }
}

impl RawTable {
    pub fn new(feature_names: Vec<String>, features: Matrix, labels: Vec<String>) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} rows",
                labels.len(),
                features.rows()
            )));
        }
        if feature_names.len() != features.cols() {
            return Err(Error::DimensionMismatch(format!(
                "{} names for {} feature columns",
                feature_names.len(),
                features.cols()
            )));
        }
        let table = RawTable {
            feature_names,
            features,
            labels,
        };
        table.group_labels()?;
        Ok(table)
    }

    pub fn n(&self) -> usize {
        self.features.rows()
    }

    /// The two distinct labels in order of first appearance.
    pub fn group_labels(&self) -> Result<(String, String)> {
        let mut seen: Vec<&str> = Vec::with_capacity(2);
        for l in &self.labels {
            if !seen.contains(&l.as_str()) {
                seen.push(l);
                if seen.len() > 2 {
                    break;
                }
            }
        }
        if seen.len() != 2 {
            let distinct = if seen.len() > 2 {
                let mut all: Vec<&String> = self.labels.iter().collect();
                all.sort();
                all.dedup();
                all.len()
            } else {
                seen.len()
            };
            return Err(Error::GroupCount(distinct));
        }
        Ok((seen[0].to_string(), seen[1].to_string()))
    }

    /// Row indices of each group, in file order.
    pub fn group_rows(&self) -> Result<(Vec<usize>, Vec<usize>)> {
        let (first, _) = self.group_labels()?;
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (i, l) in self.labels.iter().enumerate() {
            if *l == first {
                a.push(i);
            } else {
                b.push(i);
            }
        }
        Ok((a, b))
    }

    pub fn group_counts(&self) -> Result<(usize, usize)> {
        let (a, b) = self.group_rows()?;
        Ok((a.len(), b.len()))
    }
}

/// Reads a comma-separated file with a header row. The sensitive column is
/// matched by exact header name and removed from the features.
pub fn load_table(path: &Path, sensitive_column: &str) -> Result<RawTable> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_table(file, sensitive_column)
}

pub fn read_table<R: Read>(reader: R, sensitive_column: &str) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let sens = header
        .iter()
        .position(|h| h == sensitive_column)
        .ok_or_else(|| Error::MissingColumn(sensitive_column.to_string()))?;
    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != sens)
        .map(|(_, h)| h.clone())
        .collect();
    if feature_names.is_empty() {
        return Err(Error::NoFeatures);
    }
    let d = feature_names.len();

    let mut data = Vec::new();
    let mut labels = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let record = record?;
        // header is line 1
        let line = idx + 2;
        if record.len() != header.len() {
            return Err(Error::RaggedRow {
                line,
                expected: header.len(),
                found: record.len(),
            });
        }
        for (j, cell) in record.iter().enumerate() {
            if j == sens {
                labels.push(cell.to_string());
                continue;
            }
            let value = cell
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::NonNumeric {
                    line,
                    column: header[j].clone(),
                    value: cell.to_string(),
                })?;
            data.push(value);
        }
    }
    let features = Matrix::new(labels.len(), d, data)?;
    RawTable::new(feature_names, features, labels)
}

/// Keeps the first `min(n_a, n_b)` rows of each group, in file order.
pub fn balance(table: &RawTable) -> Result<RawTable> {
    let (a, b) = table.group_rows()?;
    let keep_n = a.len().min(b.len());
    let mut keep: Vec<usize> = a[..keep_n].iter().chain(&b[..keep_n]).copied().collect();
    keep.sort_unstable();
    Ok(RawTable {
        feature_names: table.feature_names.clone(),
        features: table.features.select_rows(&keep),
        labels: keep.iter().map(|&i| table.labels[i].clone()).collect(),
    })
}

/// Globally centered data split into its two sensitive groups.
#[derive(Debug, Clone)]
pub struct GroupedData {
    pub feature_names: Vec<String>,
    /// All rows, centered, in file order.
    pub x: Matrix,
    pub x_a: Matrix,
    pub x_b: Matrix,
    pub n: usize,
    pub n_a: usize,
    pub n_b: usize,
    pub label_a: String,
    pub label_b: String,
    /// Column means removed during centering.
    pub means: Vec<f64>,
}

impl GroupedData {
    pub fn d(&self) -> usize {
        self.x.cols()
    }

    pub fn rows_of(&self, g: Group) -> &Matrix {
        match g {
            Group::First => &self.x_a,
            Group::Second => &self.x_b,
        }
    }

    pub fn count_of(&self, g: Group) -> usize {
        match g {
            Group::First => self.n_a,
            Group::Second => self.n_b,
        }
    }

    pub fn label_of(&self, g: Group) -> &str {
        match g {
            Group::First => &self.label_a,
            Group::Second => &self.label_b,
        }
    }
}

/// Subtracts each column's mean over all rows, then partitions by group.
pub fn center_and_split(table: &RawTable) -> Result<GroupedData> {
    let (label_a, label_b) = table.group_labels()?;
    let (rows_a, rows_b) = table.group_rows()?;
    if rows_a.is_empty() {
        return Err(Error::EmptyGroup(label_a));
    }
    if rows_b.is_empty() {
        return Err(Error::EmptyGroup(label_b));
    }
    let n = table.n();
    let d = table.features.cols();
    let mut means = vec![0.0; d];
    for i in 0..n {
        for (m, v) in means.iter_mut().zip(table.features.row(i)) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n as f64);

    let mut data = Vec::with_capacity(n * d);
    for i in 0..n {
        data.extend(table.features.row(i).iter().zip(&means).map(|(v, m)| v - m));
    }
    let x = Matrix::new(n, d, data)?;
    Ok(GroupedData {
        feature_names: table.feature_names.clone(),
        x_a: x.select_rows(&rows_a),
        x_b: x.select_rows(&rows_b),
        n,
        n_a: rows_a.len(),
        n_b: rows_b.len(),
        x,
        label_a,
        label_b,
        means,
    })
}

/// Optionally balances, then centers and splits. Centering always runs on
/// the rows that survive balancing.
pub fn prepare(table: &RawTable, balanced: bool) -> Result<GroupedData> {
    if balanced {
        center_and_split(&balance(table)?)
    } else {
        center_and_split(table)
    }
}
