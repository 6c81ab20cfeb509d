//! CSV ingestion, replicate reduction, and the serialized report.
//!
//! All inputs are UTF-8, comma-separated, with a header row and `.` as the
//! decimal separator. Sigma is always a standard deviation, never a variance.
//!
//! | schema       | columns                   |
//! |--------------|---------------------------|
//! | summary      | `id,y_hat,y_bar,sigma`    |
//! | replicates   | `id,replicate`            |
//! | predictions  | `id,y_hat`                |
//! | classification | `id,y,p_hat`            |
//!
//! Columns may appear in any order; unknown or repeated columns are rejected.
//! Errors cite the 1-based data row (header excluded) and the file line.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classification::VarianceConvention;
use crate::data::{
    compensated_sum, ClassificationDataset, ClassificationObservation, ConfusionCounts,
    RegressionDataset, RegressionObservation,
};
use crate::error::Error;
use crate::oracle::{OracleReport, QuadCheck};
use crate::regression::SigmaMode;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line 1: {message}")]
    Header { path: String, message: String },
    #[error("{path}: row {row} (line {line}): {message}")]
    Row {
        path: String,
        row: usize,
        line: u64,
        message: String,
    },
    #[error("observation '{id}' has a single replicate; supply a fallback sigma")]
    MissingSigma { id: String },
    #[error("{path}: {message}")]
    Mismatch { path: String, message: String },
    #[error("{path}: {source}")]
    Dataset {
        path: String,
        #[source]
        source: Error,
    },
}

/// One parsed data row, with its position for error messages.
struct Row {
    row: usize,
    line: u64,
    cells: Vec<String>,
}

struct Table {
    path: String,
    rows: Vec<Row>,
}

impl Table {
    fn row_error(&self, row: &Row, message: impl Into<String>) -> LoadError {
        LoadError::Row {
            path: self.path.clone(),
            row: row.row,
            line: row.line,
            message: message.into(),
        }
    }
}

/// Reads a strict CSV file, returning the cells reordered to match `columns`.
fn read_table(path: &Path, columns: &[&str]) -> Result<Table, LoadError> {
    let display = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|source| LoadError::Io {
        path: display.clone(),
        source,
    })?;
    read_table_from(file, display, columns)
}

fn read_table_from<R: std::io::Read>(
    reader: R,
    path: String,
    columns: &[&str],
) -> Result<Table, LoadError> {
    let header_error = |message: String| LoadError::Header {
        path: path.clone(),
        message,
    };
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(reader);
    let headers = csv
        .headers()
        .map_err(|e| header_error(format!("unreadable header: {e}")))?
        .clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(header_error(format!(
            "missing header; expected columns {}",
            columns.join(",")
        )));
    }
    let mut index = Vec::with_capacity(columns.len());
    for (pos, name) in headers.iter().enumerate() {
        if !columns.contains(&name) {
            return Err(header_error(format!(
                "unexpected column '{name}'; expected columns {}",
                columns.join(",")
            )));
        }
        if headers.iter().take(pos).any(|h| h == name) {
            return Err(header_error(format!("column '{name}' appears twice")));
        }
    }
    for col in columns {
        match headers.iter().position(|h| h == *col) {
            Some(i) => index.push(i),
            None => return Err(header_error(format!("missing column '{col}'"))),
        }
    }

    let mut rows = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            LoadError::Row {
                path: path.clone(),
                row,
                line,
                message: match e.kind() {
                    csv::ErrorKind::UnequalLengths {
                        expected_len, len, ..
                    } => {
                        format!("expected {expected_len} fields, found {len}")
                    }
                    _ => e.to_string(),
                },
            }
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let cells = index.iter().map(|&i| record[i].to_string()).collect();
        rows.push(Row { row, line, cells });
    }
    Ok(Table { path, rows })
}

fn parse_real(cell: &str, column: &str) -> Result<f64, String> {
    if cell.is_empty() {
        return Err(format!("missing value in column '{column}'"));
    }
    let value: f64 = cell
        .parse()
        .map_err(|_| format!("non-numeric value '{cell}' in column '{column}'"))?;
    if !value.is_finite() {
        return Err(format!("non-finite value '{cell}' in column '{column}'"));
    }
    Ok(value)
}

fn parse_id(cell: &str) -> Result<String, String> {
    if cell.is_empty() {
        return Err("missing value in column 'id'".into());
    }
    Ok(cell.to_string())
}

/// Raw repeated measurements, grouped by observation id in first-appearance order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplicateTable {
    groups: Vec<(String, Vec<f64>)>,
    index: HashMap<String, usize>,
}

impl ReplicateTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one measurement. Values must be finite.
    pub fn push(&mut self, id: &str, value: f64) -> Result<(), Error> {
        if !value.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "replicate for '{id}' must be finite, got {value}"
            )));
        }
        match self.index.get(id) {
            Some(&i) => self.groups[i].1.push(value),
            None => {
                self.index.insert(id.to_string(), self.groups.len());
                self.groups.push((id.to_string(), vec![value]));
            }
        }
        Ok(())
    }

    pub fn groups(&self) -> &[(String, Vec<f64>)] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

/// Mean and Bessel-corrected standard deviation of one observation's replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateSummary {
    pub id: String,
    pub y_bar: f64,
    /// `None` when there is a single replicate.
    pub sigma: Option<f64>,
    pub replicates: usize,
}

pub fn summarize_replicates(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / n;
    if values.len() < 2 {
        return (mean, None);
    }
    let ss = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    (mean, Some((ss / (n - 1.0)).sqrt()))
}

pub fn reduce_replicates(table: &ReplicateTable) -> Vec<ReplicateSummary> {
    table
        .groups()
        .iter()
        .map(|(id, values)| {
            let (y_bar, sigma) = summarize_replicates(values);
            ReplicateSummary {
                id: id.clone(),
                y_bar,
                sigma,
                replicates: values.len(),
            }
        })
        .collect()
}

/// Fills missing sigmas from `fallback`; fails on the first observation that needs one
/// when no fallback is given.
pub fn resolve_sigmas(
    summaries: Vec<ReplicateSummary>,
    fallback: Option<f64>,
) -> Result<Vec<ReplicateSummary>, LoadError> {
    summaries
        .into_iter()
        .map(|mut s| {
            if s.sigma.is_none() {
                s.sigma =
                    Some(fallback.ok_or_else(|| LoadError::MissingSigma { id: s.id.clone() })?);
            }
            Ok(s)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegressionSchema {
    Summary,
    Replicates,
}

/// Loads a `id,y_hat,y_bar,sigma` file.
pub fn load_summary_csv(path: &Path) -> Result<RegressionDataset, LoadError> {
    let table = read_table(path, &["id", "y_hat", "y_bar", "sigma"])?;
    let mut seen = HashMap::new();
    let mut observations = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let parsed = (|| {
            let id = parse_id(&row.cells[0])?;
            if let Some(first) = seen.insert(id.clone(), row.row) {
                return Err(format!("duplicate id '{id}' (first seen at row {first})"));
            }
            let y_hat = parse_real(&row.cells[1], "y_hat")?;
            let y_bar = parse_real(&row.cells[2], "y_bar")?;
            let sigma = parse_real(&row.cells[3], "sigma")?;
            if sigma < 0.0 {
                return Err(format!("sigma must be >= 0, got {sigma}"));
            }
            Ok(RegressionObservation {
                y_hat,
                y_bar,
                sigma,
            })
        })();
        observations.push(parsed.map_err(|m| table.row_error(row, m))?);
    }
    RegressionDataset::new(observations).map_err(|source| LoadError::Dataset {
        path: table.path.clone(),
        source,
    })
}

/// Loads a `id,replicate` file into a [`ReplicateTable`].
pub fn load_replicate_table(path: &Path) -> Result<ReplicateTable, LoadError> {
    let table = read_table(path, &["id", "replicate"])?;
    let mut replicates = ReplicateTable::new();
    for row in &table.rows {
        let parsed = parse_id(&row.cells[0]).and_then(|id| {
            let value = parse_real(&row.cells[1], "replicate")?;
            replicates.push(&id, value).map_err(|e| e.to_string())
        });
        parsed.map_err(|m| table.row_error(row, m))?;
    }
    Ok(replicates)
}

/// Loads raw replicates plus a separate `id,y_hat` predictions file. Observations
/// follow the first-appearance order of the replicates file.
pub fn load_replicates_csv(
    replicates_path: &Path,
    predictions_path: &Path,
    fallback_sigma: Option<f64>,
) -> Result<RegressionDataset, LoadError> {
    let replicates = load_replicate_table(replicates_path)?;
    let predictions = read_table(predictions_path, &["id", "y_hat"])?;
    let mut y_hat_by_id: HashMap<String, (usize, f64)> = HashMap::new();
    for row in &predictions.rows {
        let parsed = (|| {
            let id = parse_id(&row.cells[0])?;
            let y_hat = parse_real(&row.cells[1], "y_hat")?;
            if let Some((first, _)) = y_hat_by_id.get(&id) {
                return Err(format!("duplicate id '{id}' (first seen at row {first})"));
            }
            y_hat_by_id.insert(id, (row.row, y_hat));
            Ok(())
        })();
        parsed.map_err(|m| predictions.row_error(row, m))?;
    }

    let summaries = resolve_sigmas(reduce_replicates(&replicates), fallback_sigma)?;
    let mut observations = Vec::with_capacity(summaries.len());
    for s in &summaries {
        let (_, y_hat) = y_hat_by_id
            .remove(&s.id)
            .ok_or_else(|| LoadError::Mismatch {
                path: predictions.path.clone(),
                message: format!("no prediction for observation '{}'", s.id),
            })?;
        observations.push(RegressionObservation {
            y_hat,
            y_bar: s.y_bar,
            sigma: s.sigma.expect("resolved"),
        });
    }
    if let Some((id, (row, _))) = y_hat_by_id.into_iter().min_by_key(|(_, (row, _))| *row) {
        return Err(LoadError::Mismatch {
            path: predictions.path.clone(),
            message: format!("row {row}: prediction for '{id}' has no replicates"),
        });
    }
    RegressionDataset::new(observations).map_err(|source| LoadError::Dataset {
        path: replicates_path.display().to_string(),
        source,
    })
}

pub fn load_regression_csv(
    path: &Path,
    schema: RegressionSchema,
    predictions: Option<&Path>,
    fallback_sigma: Option<f64>,
) -> Result<RegressionDataset, LoadError> {
    match schema {
        RegressionSchema::Summary => load_summary_csv(path),
        RegressionSchema::Replicates => {
            let predictions = predictions.ok_or_else(|| LoadError::Mismatch {
                path: path.display().to_string(),
                message: "replicates schema needs a predictions file".into(),
            })?;
            load_replicates_csv(path, predictions, fallback_sigma)
        }
    }
}

/// Loads a `id,y,p_hat` file; `alpha` and `q` come from the caller.
pub fn load_classification_csv(
    path: &Path,
    alpha: f64,
    q: f64,
) -> Result<ClassificationDataset, LoadError> {
    let table = read_table(path, &["id", "y", "p_hat"])?;
    let mut seen = HashMap::new();
    let mut observations = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let parsed = (|| {
            let id = parse_id(&row.cells[0])?;
            if let Some(first) = seen.insert(id.clone(), row.row) {
                return Err(format!("duplicate id '{id}' (first seen at row {first})"));
            }
            let label = match row.cells[1].as_str() {
                "0" => false,
                "1" => true,
                "" => return Err("missing value in column 'y'".into()),
                other => return Err(format!("label y must be 0 or 1, got '{other}'")),
            };
            let p_hat = parse_real(&row.cells[2], "p_hat")?;
            if !(0.0..=1.0).contains(&p_hat) {
                return Err(format!("p_hat must lie in [0, 1], got {p_hat}"));
            }
            Ok(ClassificationObservation { label, p_hat })
        })();
        observations.push(parsed.map_err(|m| table.row_error(row, m))?);
    }
    ClassificationDataset::new(observations, alpha, q).map_err(|source| LoadError::Dataset {
        path: table.path.clone(),
        source,
    })
}

/// Which formulas and conventions produced a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeFlags {
    /// Regression only: which `E(MSE)` route applied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_mode: Option<SigmaMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub homoscedastic: Option<bool>,
    pub paper_compat: bool,
    /// Accuracy only: convention behind the `variance` field.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance_convention: Option<VarianceConvention>,
    /// Variance as printed in the source tables, reported next to the default when
    /// `paper_compat` is set and the printed form differs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paper_printed_variance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub observations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confusion: Option<ConfusionCounts>,
}

impl InputDigest {
    pub fn regression(ds: &RegressionDataset) -> Self {
        let sigmas = ds.observations().iter().map(|o| o.sigma);
        Self {
            observations: ds.len(),
            sigma_min: sigmas.clone().reduce(f64::min),
            sigma_max: sigmas.clone().reduce(f64::max),
            sigma_mean: Some(compensated_sum(sigmas) / ds.len() as f64),
            q: None,
            alpha: None,
            confusion: None,
        }
    }

    pub fn classification(ds: &ClassificationDataset, confusion: ConfusionCounts) -> Self {
        Self {
            observations: ds.len(),
            sigma_min: None,
            sigma_max: None,
            sigma_mean: None,
            q: Some(ds.q()),
            alpha: Some(ds.alpha()),
            confusion: Some(confusion),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<OracleReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadCheck>,
}

/// The document written by the command-line tool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub metric: String,
    pub classical: f64,
    pub expected: f64,
    pub variance: f64,
    pub std: f64,
    pub correction: f64,
    pub mode: ModeFlags,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSection>,
    pub input_digest: InputDigest,
}

impl ReportDocument {
    /// Pretty JSON. Numbers use the shortest representation that round-trips exactly.
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut line = |label: &str, value: String| {
            let _ = writeln!(out, "{label:<24}{value}");
        };
        line("metric", self.metric.clone());
        line("observations", self.input_digest.observations.to_string());
        if let Some(mode) = self.mode.sigma_mode {
            line("mode", mode.as_str().to_string());
        }
        if let (Some(lo), Some(hi), Some(mean)) = (
            self.input_digest.sigma_min,
            self.input_digest.sigma_max,
            self.input_digest.sigma_mean,
        ) {
            line("sigma min/mean/max", format!("{lo} / {mean} / {hi}"));
        }
        if let (Some(q), Some(alpha)) = (self.input_digest.q, self.input_digest.alpha) {
            line("flip probability q", q.to_string());
            line("threshold alpha", alpha.to_string());
        }
        if let Some(c) = self.input_digest.confusion {
            line(
                "TP / TN / FP / FN",
                format!("{} / {} / {} / {}", c.tp, c.tn, c.fp, c.fn_),
            );
        }
        line("classical", self.classical.to_string());
        line("expected", self.expected.to_string());
        line("variance", self.variance.to_string());
        line("std", self.std.to_string());
        line("correction", self.correction.to_string());
        if let Some(conv) = self.mode.variance_convention {
            line("variance convention", conv.as_str().to_string());
        }
        if let Some(v) = self.mode.paper_printed_variance {
            line("paper-printed variance", v.to_string());
        }
        if let Some(oracle) = &self.oracle {
            if let Some(seed) = oracle.seed {
                line("oracle seed", seed.to_string());
            }
            if let Some(mc) = &oracle.monte_carlo {
                line("mc draws", mc.n_effective.to_string());
                line(
                    "mc mean",
                    format!("{} ± {}", mc.estimate, mc.standard_error),
                );
                line("mc mean z", fmt_z(mc.z_score));
                if let Some(v) = &mc.variance {
                    line(
                        "mc variance",
                        format!("{} ± {}", v.estimate, v.standard_error),
                    );
                    line("mc variance z", fmt_z(v.z_score));
                }
            }
            if let Some(q) = &oracle.quadrature {
                line("quad max |deviation|", q.max_abs_deviation.to_string());
                line(
                    "quad observations",
                    format!("{} checked, {} skipped", q.checked, q.skipped),
                );
            }
        }
        out
    }
}

fn fmt_z(z: Option<f64>) -> String {
    z.map_or_else(|| "n/a (no spread)".to_string(), |z| format!("{z:.3}"))
}
