//! Tabular input: CSV loading with a missingness mask, percentization onto
//! conceptual 0–1 scales, descriptive statistics and listwise deletion.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{domain, MediationError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Outcome,
    Mediator,
    Treatment,
    Control,
}

/// A variable with its conceptual range `[conceptual_min, conceptual_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    pub role: Role,
    pub conceptual_min: f64,
    pub conceptual_max: f64,
}

impl VariableSpec {
    pub fn new(name: impl Into<String>, role: Role, conceptual_min: f64, conceptual_max: f64) -> Result<Self> {
        let spec = Self {
            name: name.into(),
            role,
            conceptual_min,
            conceptual_max,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.conceptual_max > self.conceptual_min) {
            return domain(format!(
                "variable `{}`: conceptual max {} must exceed conceptual min {}",
                self.name, self.conceptual_max, self.conceptual_min
            ));
        }
        Ok(())
    }

    pub fn percentize(&self, value: f64) -> f64 {
        (value - self.conceptual_min) / (self.conceptual_max - self.conceptual_min)
    }
}

/// Checks that outcome, mediator and treatment are each assigned exactly once.
pub fn validate_roles(specs: &[VariableSpec]) -> Result<()> {
    for role in [Role::Outcome, Role::Mediator, Role::Treatment] {
        let count = specs.iter().filter(|s| s.role == role).count();
        if count != 1 {
            return Err(MediationError::Schema(format!(
                "expected exactly one {role:?} variable, found {count}"
            )));
        }
    }
    specs.iter().try_for_each(VariableSpec::validate)
}

/// Named columns of optional reals; `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    columns: BTreeMap<String, Vec<Option<f64>>>,
    n_raw: usize,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_columns<I, S>(columns: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<Option<f64>>)>,
        S: Into<String>,
    {
        let mut ds = Self::new();
        for (name, col) in columns {
            ds.insert(name, col)?;
        }
        Ok(ds)
    }

    /// Convenience constructor for fully observed data.
    pub fn from_complete<S: Into<String>>(columns: Vec<(S, Vec<f64>)>) -> Result<Self> {
        Self::from_columns(
            columns
                .into_iter()
                .map(|(n, c)| (n, c.into_iter().map(Some).collect())),
        )
    }

    pub fn insert(&mut self, name: impl Into<String>, column: Vec<Option<f64>>) -> Result<()> {
        let name = name.into();
        if !self.columns.is_empty() && column.len() != self.n_raw {
            return Err(MediationError::Schema(format!(
                "column `{name}` has {} rows, expected {}",
                column.len(),
                self.n_raw
            )));
        }
        self.n_raw = column.len();
        self.columns.insert(name, column);
        Ok(())
    }

    pub fn n_raw(&self) -> usize {
        self.n_raw
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(String::as_str)
    }

    pub fn column(&self, name: &str) -> Option<&[Option<f64>]> {
        self.columns.get(name).map(Vec::as_slice)
    }

    /// The column as plain reals; fails if it is absent or has missing cells.
    pub fn complete_column(&self, name: &str) -> Result<Vec<f64>> {
        let col = self
            .column(name)
            .ok_or_else(|| MediationError::Schema(format!("no column named `{name}`")))?;
        col.iter()
            .enumerate()
            .map(|(i, v)| {
                v.ok_or_else(|| MediationError::Schema(format!("column `{name}` has a missing value at row {}", i + 1)))
            })
            .collect()
    }

    pub fn missing_count(&self, name: &str) -> Option<usize> {
        self.column(name).map(|c| c.iter().filter(|v| v.is_none()).count())
    }

    /// Maps every column named in `specs` onto its 0–1 percentage scale.
    pub fn percentized(&self, specs: &[VariableSpec]) -> Result<Dataset> {
        let mut out = self.clone();
        for spec in specs {
            spec.validate()?;
            let col = out
                .columns
                .get_mut(&spec.name)
                .ok_or_else(|| MediationError::Schema(format!("no column named `{}`", spec.name)))?;
            for v in col.iter_mut().flatten() {
                *v = spec.percentize(*v);
            }
        }
        Ok(out)
    }
}

/// `(value - c_min) / (c_max - c_min)`; values outside the range are not
/// clamped.
pub fn percentize(value: f64, c_min: f64, c_max: f64) -> Result<f64> {
    if !(c_max > c_min) {
        return domain(format!("conceptual max {c_max} must exceed conceptual min {c_min}"));
    }
    Ok((value - c_min) / (c_max - c_min))
}

fn parse_cell(raw: &str) -> Option<std::result::Result<f64, ()>> {
    let s = raw.trim();
    if s.is_empty() || s.eq_ignore_ascii_case("na") {
        return None;
    }
    Some(s.parse::<f64>().map_err(|_| ()))
}

/// Reads a comma-separated UTF-8 file with a header row. Only the columns
/// named in `specs` are kept; blank and `NA` cells become missing.
pub fn load_csv(path: impl AsRef<Path>, specs: &[VariableSpec]) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| MediationError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, specs).map_err(|e| match e {
        MediationError::MissingColumn { column, .. } => MediationError::MissingColumn {
            column,
            path: path.to_path_buf(),
        },
        other => other,
    })
}

/// Same as [`load_csv`] over any reader.
pub fn read_csv<R: std::io::Read>(reader: R, specs: &[VariableSpec]) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut index = Vec::with_capacity(specs.len());
    for spec in specs {
        let pos = headers
            .iter()
            .position(|h| h.trim() == spec.name)
            .ok_or_else(|| MediationError::MissingColumn {
                column: spec.name.clone(),
                path: "<input>".into(),
            })?;
        index.push(pos);
    }

    let mut cols: Vec<Vec<Option<f64>>> = vec![Vec::new(); specs.len()];
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        for ((spec, &pos), col) in specs.iter().zip(&index).zip(cols.iter_mut()) {
            let raw = record.get(pos).unwrap_or("");
            match parse_cell(raw) {
                None => col.push(None),
                Some(Ok(v)) => col.push(Some(v)),
                Some(Err(())) => {
                    return Err(MediationError::Parse {
                        // 1-based data row, header excluded
                        row: row + 1,
                        column: spec.name.clone(),
                        value: raw.to_string(),
                    })
                }
            }
        }
    }
    Dataset::from_columns(specs.iter().map(|s| s.name.clone()).zip(cols))
}

/// Drops every row with a missing value among `vars`.
pub fn complete_cases(ds: &Dataset, vars: &[&str]) -> Result<Dataset> {
    let selected: Vec<&[Option<f64>]> = vars
        .iter()
        .map(|v| {
            ds.column(v)
                .ok_or_else(|| MediationError::Schema(format!("no column named `{v}`")))
        })
        .collect::<Result<_>>()?;
    let keep: Vec<bool> = (0..ds.n_raw())
        .map(|i| selected.iter().all(|c| c[i].is_some()))
        .collect();
    let mut out = Dataset::new();
    for (name, col) in &ds.columns {
        let filtered = col.iter().zip(&keep).filter(|(_, &k)| k).map(|(v, _)| *v).collect();
        out.insert(name.clone(), filtered)?;
    }
    if ds.columns.is_empty() {
        out.n_raw = 0;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for a single value.
    pub sd: f64,
}

impl Moments {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        let sd = if values.len() > 1 { (ss / (n - 1.0)).sqrt() } else { 0.0 };
        let (min, max) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        Some(Self { min, max, mean, sd })
    }
}

/// One row of the descriptive table. `raw` and `ps` are `None` when the
/// column has no observed values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSummary {
    pub variable: String,
    pub n: usize,
    pub raw: Option<Moments>,
    pub ps: Option<Moments>,
}

impl VariableSummary {
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveSummary {
    pub n_raw: usize,
    pub variables: Vec<VariableSummary>,
}

pub const SUMMARY_COLUMNS: [&str; 10] = [
    "variable", "n", "raw_min", "raw_max", "raw_mean", "raw_sd", "ps_min", "ps_max", "ps_mean", "ps_sd",
];

#[derive(Serialize)]
struct SummaryRow<'a> {
    variable: &'a str,
    n: usize,
    raw_min: Option<f64>,
    raw_max: Option<f64>,
    raw_mean: Option<f64>,
    raw_sd: Option<f64>,
    ps_min: Option<f64>,
    ps_max: Option<f64>,
    ps_mean: Option<f64>,
    ps_sd: Option<f64>,
}

impl DescriptiveSummary {
    fn flat_rows(&self) -> Vec<SummaryRow<'_>> {
        self.variables
            .iter()
            .map(|v| SummaryRow {
                variable: &v.variable,
                n: v.n,
                raw_min: v.raw.map(|m| m.min),
                raw_max: v.raw.map(|m| m.max),
                raw_mean: v.raw.map(|m| m.mean),
                raw_sd: v.raw.map(|m| m.sd),
                ps_min: v.ps.map(|m| m.min),
                ps_max: v.ps.map(|m| m.max),
                ps_mean: v.ps.map(|m| m.mean),
                ps_sd: v.ps.map(|m| m.sd),
            })
            .collect()
    }

    /// CSV with columns in [`SUMMARY_COLUMNS`] order; empty variables leave
    /// the statistic cells blank.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for row in self.flat_rows() {
            w.serialize(row)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// JSON array of flat rows, keys in [`SUMMARY_COLUMNS`] order.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.flat_rows())?)
    }
}

/// Per-variable statistics over observed entries, on the raw and the
/// percentized scale.
pub fn describe(ds: &Dataset, specs: &[VariableSpec]) -> Result<DescriptiveSummary> {
    let mut variables = Vec::with_capacity(specs.len());
    for spec in specs {
        spec.validate()?;
        let col = ds
            .column(&spec.name)
            .ok_or_else(|| MediationError::Schema(format!("no column named `{}`", spec.name)))?;
        let raw: Vec<f64> = col.iter().flatten().copied().collect();
        let ps: Vec<f64> = raw.iter().map(|&v| spec.percentize(v)).collect();
        variables.push(VariableSummary {
            variable: spec.name.clone(),
            n: raw.len(),
            raw: Moments::of(&raw),
            ps: Moments::of(&ps),
        });
    }
    Ok(DescriptiveSummary {
        n_raw: ds.n_raw(),
        variables,
    })
}
