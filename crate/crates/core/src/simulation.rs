//! Seeded Monte Carlo study of erroneous total-effect rejections.
//!
//! Each replicate draws `n ~ U{10..100}`, `(i_M, i_Y, a, b, d) ~ U[-1, 1]⁵`,
//! `X ~ N(0, 1)` and noise variances from Inv-Gamma(1, 1), simulates
//!
//! ```text
//!   M = i_M + a X + e_M,   Y = i_Y + b M + d X + e_Y
//! ```
//!
//! and tests the paths under every requested framework. Curves report, over
//! an α grid, the proportion of replicates with `p_c ≥ α` among those
//! meeting a mediation condition.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::distributions::{sample_inv_gamma_1_1, sample_std_normal, sample_uniform_int, sample_uniform_real, RngStream};
use crate::error::{domain, MediationError, Result};
use crate::estimation::{fit_lad_matrix, fit_lse_matrix, DataMatrix, Framework, MediationFit};

pub const SCHEMA_VERSION: u32 = 1;

/// Regeneration attempts per replicate before the study gives up.
const MAX_ATTEMPTS: u64 = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub replicates: usize,
    pub n_min: usize,
    pub n_max: usize,
    /// Range of `(i_M, i_Y, a, b, d)`.
    pub param_min: f64,
    pub param_max: f64,
    pub seed: u64,
    pub frameworks: Vec<Framework>,
    pub alpha_points: usize,
    pub alpha_min: f64,
    pub alpha_max: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            replicates: 10_000,
            n_min: 10,
            n_max: 100,
            param_min: -1.0,
            param_max: 1.0,
            seed: 20_240_601,
            frameworks: Framework::ALL.to_vec(),
            alpha_points: 1000,
            alpha_min: 0.01,
            alpha_max: 0.99,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return domain("replicates must be at least 1");
        }
        if self.n_min < 5 || self.n_min > self.n_max {
            return domain(format!("n range [{}, {}] must satisfy 5 ≤ n_min ≤ n_max", self.n_min, self.n_max));
        }
        if !(self.param_min <= self.param_max) || !self.param_min.is_finite() || !self.param_max.is_finite() {
            return domain("parameter range must be finite with param_min ≤ param_max");
        }
        if self.frameworks.is_empty() {
            return domain("at least one framework is required");
        }
        if self.alpha_points == 0 {
            return domain("alpha grid needs at least one point");
        }
        if !(self.alpha_min > 0.0 && self.alpha_max < 1.0 && self.alpha_min <= self.alpha_max) {
            return domain("alpha grid must lie inside (0, 1)");
        }
        Ok(())
    }

    /// Evenly spaced grid from `alpha_min` to `alpha_max` inclusive.
    pub fn alpha_grid(&self) -> Vec<f64> {
        if self.alpha_points == 1 {
            return vec![self.alpha_min];
        }
        let step = (self.alpha_max - self.alpha_min) / (self.alpha_points - 1) as f64;
        (0..self.alpha_points).map(|i| self.alpha_min + step * i as f64).collect()
    }

    /// Parses either JSON or `key = value` lines (`#` starts a comment,
    /// `frameworks` takes a comma-separated list). Unset keys keep their
    /// defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = if text.trim_start().starts_with('{') {
            serde_json::from_str(text)?
        } else {
            let mut map = serde_json::Map::new();
            for (lineno, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let Some((key, value)) = line.split_once('=').or_else(|| line.split_once(':')) else {
                    return domain(format!("config line {}: expected key = value", lineno + 1));
                };
                let (key, value) = (key.trim(), value.trim());
                let json = if key == "frameworks" {
                    serde_json::Value::Array(
                        value
                            .split(',')
                            .map(|s| serde_json::Value::String(s.trim().to_string()))
                            .collect(),
                    )
                } else {
                    serde_json::from_str(value).unwrap_or_else(|_| serde_json::Value::String(value.to_string()))
                };
                map.insert(key.to_string(), json);
            }
            serde_json::from_value(serde_json::Value::Object(map))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&read_text(path)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrueParams {
    pub i_m: f64,
    pub i_y: f64,
    pub a: f64,
    pub b: f64,
    pub d: f64,
    pub sigma2_m: f64,
    pub sigma2_y: f64,
}

/// Forced values for testing; the random draws still happen so the
/// stream stays aligned.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ReplicateOverride {
    pub n: Option<usize>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub d: Option<f64>,
    pub sigma2_m: Option<f64>,
    pub sigma2_y: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replicate {
    pub n: usize,
    pub params: TrueParams,
    pub data: DataMatrix,
}

impl Replicate {
    pub fn to_dataset(&self) -> Result<Dataset> {
        Dataset::from_complete(vec![
            ("X", self.data.x.clone()),
            ("M", self.data.m.clone()),
            ("Y", self.data.y.clone()),
        ])
    }
}

pub fn generate_replicate(rng: &mut RngStream, config: &SimulationConfig) -> Result<Replicate> {
    generate_replicate_with(rng, config, &ReplicateOverride::default())
}

pub fn generate_replicate_with(rng: &mut RngStream, config: &SimulationConfig, force: &ReplicateOverride) -> Result<Replicate> {
    let n = sample_uniform_int(config.n_min as i64, config.n_max as i64, rng)? as usize;
    let n = force.n.unwrap_or(n);
    let (lo, hi) = (config.param_min, config.param_max);
    let mut draw = || sample_uniform_real(lo, hi, rng);
    let (i_m, i_y, a, b, d) = (draw()?, draw()?, draw()?, draw()?, draw()?);
    let s2m = sample_inv_gamma_1_1(rng);
    let s2y = sample_inv_gamma_1_1(rng);
    let params = TrueParams {
        i_m,
        i_y,
        a: force.a.unwrap_or(a),
        b: force.b.unwrap_or(b),
        d: force.d.unwrap_or(d),
        sigma2_m: force.sigma2_m.unwrap_or(s2m),
        sigma2_y: force.sigma2_y.unwrap_or(s2y),
    };
    let (sm, sy) = (params.sigma2_m.sqrt(), params.sigma2_y.sqrt());
    let x: Vec<f64> = (0..n).map(|_| sample_std_normal(rng)).collect();
    let m: Vec<f64> = x.iter().map(|&xi| i_m + params.a * xi + sm * sample_std_normal(rng)).collect();
    let y: Vec<f64> = x
        .iter()
        .zip(&m)
        .map(|(&xi, &mi)| i_y + params.b * mi + params.d * xi + sy * sample_std_normal(rng))
        .collect();
    Ok(Replicate {
        n,
        params,
        data: DataMatrix::new(x, m, y)?,
    })
}

/// Tests of one replicate under one framework.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameworkOutcome {
    pub framework: Framework,
    pub p_a: f64,
    pub p_b: f64,
    pub p_d: f64,
    pub p_c: f64,
    pub p_ab: Option<f64>,
    pub sign_abd: i8,
    pub sign_abc: i8,
}

impl FrameworkOutcome {
    fn from_fit(framework: Framework, fit: &MediationFit, with_sobel: bool) -> Self {
        Self {
            framework,
            p_a: fit.p_a,
            p_b: fit.p_b,
            p_d: fit.p_d,
            p_c: fit.p_c,
            p_ab: if with_sobel { fit.p_ab } else { None },
            sign_abd: fit.sign_abd() as i8,
            sign_abc: fit.sign_abc() as i8,
        }
    }

    pub fn indirect_significant(&self, alpha: f64) -> bool {
        match self.framework {
            Framework::LseSobel => self.p_ab.is_some_and(|p| p < alpha),
            _ => self.p_a.max(self.p_b) < alpha,
        }
    }

    pub fn meets(&self, condition: Condition, alpha: f64) -> bool {
        let ab = self.indirect_significant(alpha);
        let d = self.p_d < alpha;
        match condition {
            Condition::IndirectOnly => ab && !d,
            Condition::IndirectOnlyAbdPos => ab && !d && self.sign_abd > 0,
            Condition::IndirectOnlyAbdNeg => ab && !d && self.sign_abd < 0,
            Condition::Competitive => ab && d && self.sign_abd < 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub index: usize,
    /// Substreams tried before the fits succeeded (1 = first try).
    pub attempts: u64,
    pub n: usize,
    pub params: TrueParams,
    pub outcomes: Vec<FrameworkOutcome>,
}

impl ReplicateRecord {
    pub fn outcome(&self, framework: Framework) -> Option<&FrameworkOutcome> {
        self.outcomes.iter().find(|o| o.framework == framework)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// Indirect effect significant, `d` not.
    IndirectOnly,
    IndirectOnlyAbdPos,
    IndirectOnlyAbdNeg,
    /// Indirect and direct effects significant with `â·b̂·d̂ < 0`.
    Competitive,
}

impl Condition {
    pub const ALL: [Condition; 4] = [
        Condition::IndirectOnly,
        Condition::IndirectOnlyAbdPos,
        Condition::IndirectOnlyAbdNeg,
        Condition::Competitive,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Condition::IndirectOnly => "indirect_only",
            Condition::IndirectOnlyAbdPos => "indirect_only_abd_pos",
            Condition::IndirectOnlyAbdNeg => "indirect_only_abd_neg",
            Condition::Competitive => "competitive",
        }
    }
}

impl std::str::FromStr for Condition {
    type Err = MediationError;
    fn from_str(s: &str) -> Result<Self> {
        Condition::ALL
            .into_iter()
            .find(|c| c.label() == s)
            .map_or_else(|| domain(format!("unknown condition `{s}`")), Ok)
    }
}

/// Proportion of `{p_c ≥ α}` among replicates meeting `condition`, per α.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub framework: Framework,
    pub condition: Condition,
    /// Replicates meeting the condition.
    pub counts: Vec<u64>,
    /// Of those, replicates with `p_c ≥ α`.
    pub hits: Vec<u64>,
}

impl Curve {
    /// `None` where the condition count is zero.
    pub fn proportions(&self) -> Vec<Option<f64>> {
        self.counts
            .iter()
            .zip(&self.hits)
            .map(|(&c, &h)| (c > 0).then(|| h as f64 / c as f64))
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Replicates that needed at least one regeneration.
    pub regenerated: u64,
    /// Failed attempts by error kind.
    pub failures: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub schema_version: u32,
    pub config: SimulationConfig,
    pub alpha_grid: Vec<f64>,
    pub records: Vec<ReplicateRecord>,
    pub curves: Vec<Curve>,
    pub diagnostics: Diagnostics,
}

impl SimulationReport {
    pub fn curve(&self, framework: Framework, condition: Condition) -> Option<&Curve> {
        self.curves.iter().find(|c| c.framework == framework && c.condition == condition)
    }

    /// `(hits, count)` at an arbitrary α, recomputed from the records.
    pub fn tally(&self, framework: Framework, condition: Condition, alpha: f64) -> (u64, u64) {
        tally(&self.records, framework, condition, alpha)
    }

    /// Conditional proportion of `{p_c ≥ α}`; `None` when no replicate meets
    /// the condition.
    pub fn conditional_proportion(&self, framework: Framework, condition: Condition, alpha: f64) -> Option<f64> {
        let (h, c) = self.tally(framework, condition, alpha);
        (c > 0).then(|| h as f64 / c as f64)
    }
}

fn tally(records: &[ReplicateRecord], framework: Framework, condition: Condition, alpha: f64) -> (u64, u64) {
    let mut hits = 0;
    let mut count = 0;
    for o in records.iter().filter_map(|r| r.outcome(framework)) {
        if o.meets(condition, alpha) {
            count += 1;
            if o.p_c >= alpha {
                hits += 1;
            }
        }
    }
    (hits, count)
}

fn fit_all(data: &DataMatrix, frameworks: &[Framework]) -> Result<Vec<FrameworkOutcome>> {
    let needs_lse = frameworks.iter().any(|f| *f != Framework::LadZ);
    let lse = if needs_lse { Some(fit_lse_matrix(data)?) } else { None };
    let lad = if frameworks.contains(&Framework::LadZ) {
        Some(fit_lad_matrix(data)?)
    } else {
        None
    };
    frameworks
        .iter()
        .map(|&fw| match fw {
            Framework::LadZ => Ok(FrameworkOutcome::from_fit(fw, lad.as_ref().expect("fitted"), false)),
            Framework::LseF => Ok(FrameworkOutcome::from_fit(fw, lse.as_ref().expect("fitted"), false)),
            Framework::LseSobel => {
                let fit = lse.as_ref().expect("fitted");
                if fit.p_ab.is_none() {
                    return Err(MediationError::Degenerate("Sobel test unavailable".into()));
                }
                Ok(FrameworkOutcome::from_fit(fw, fit, true))
            }
        })
        .collect()
}

fn error_kind(e: &MediationError) -> &'static str {
    match e {
        MediationError::Collinear { .. } => "collinear",
        MediationError::NonConvergence { .. } => "non_convergence",
        MediationError::Degenerate(_) => "degenerate",
        MediationError::InsufficientRows { .. } => "insufficient_rows",
        _ => "other",
    }
}

/// Stream id of attempt `k` of replicate `i`.
fn stream_id(index: usize, attempt: u64) -> u64 {
    index as u64 * MAX_ATTEMPTS + attempt
}

fn run_replicate(
    config: &SimulationConfig,
    frameworks: &[Framework],
    index: usize,
) -> Result<(ReplicateRecord, Vec<&'static str>)> {
    let mut failures = Vec::new();
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = RngStream::new(config.seed, stream_id(index, attempt));
        let rep = generate_replicate(&mut rng, config)?;
        match fit_all(&rep.data, frameworks) {
            Ok(outcomes) => {
                return Ok((
                    ReplicateRecord {
                        index,
                        attempts: attempt + 1,
                        n: rep.n,
                        params: rep.params,
                        outcomes,
                    },
                    failures,
                ))
            }
            Err(e) => failures.push(error_kind(&e)),
        }
    }
    Err(MediationError::Degenerate(format!(
        "replicate {index} failed {MAX_ATTEMPTS} regenerations"
    )))
}

pub fn run_study(config: &SimulationConfig) -> Result<SimulationReport> {
    run_study_with_progress(config, |_| {})
}

/// As [`run_study`], calling `progress(done)` as replicates finish (from
/// worker threads, in no particular order).
pub fn run_study_with_progress(config: &SimulationConfig, progress: impl Fn(usize) + Sync) -> Result<SimulationReport> {
    config.validate()?;
    let mut frameworks = config.frameworks.clone();
    frameworks.sort_by_key(|f| Framework::ALL.iter().position(|g| g == f));
    frameworks.dedup();

    let done = AtomicUsize::new(0);
    let results: Vec<_> = (0..config.replicates)
        .into_par_iter()
        .map(|i| {
            let r = run_replicate(config, &frameworks, i);
            progress(done.fetch_add(1, Ordering::Relaxed) + 1);
            r
        })
        .collect::<Result<_>>()?;

    let mut diagnostics = Diagnostics::default();
    let mut records = Vec::with_capacity(results.len());
    for (rec, fails) in results {
        if !fails.is_empty() {
            diagnostics.regenerated += 1;
        }
        for f in fails {
            *diagnostics.failures.entry(f.to_string()).or_default() += 1;
        }
        records.push(rec);
    }

    let alpha_grid = config.alpha_grid();
    let curves = frameworks
        .iter()
        .flat_map(|&fw| Condition::ALL.into_iter().map(move |c| (fw, c)))
        .map(|(framework, condition)| {
            let (hits, counts) = alpha_grid
                .par_iter()
                .map(|&alpha| tally(&records, framework, condition, alpha))
                .unzip();
            Curve {
                framework,
                condition,
                counts,
                hits,
            }
        })
        .collect();

    Ok(SimulationReport {
        schema_version: SCHEMA_VERSION,
        config: SimulationConfig {
            frameworks,
            ..config.clone()
        },
        alpha_grid,
        records,
        curves,
        diagnostics,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ExportFormat {
    type Err = MediationError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => domain(format!("unknown format `{other}`")),
        }
    }
}

pub const REPORT_JSON: &str = "report.json";
pub const CURVES_CSV: &str = "curves.csv";
pub const RECORDS_CSV: &str = "records.csv";
pub const MANIFEST_JSON: &str = "manifest.json";

const CURVE_HEADER: [&str; 6] = ["framework", "condition", "alpha", "count", "hits", "proportion"];
const RECORD_HEADER: [&str; 18] = [
    "index", "attempts", "n", "i_m", "i_y", "a", "b", "d", "sigma2_m", "sigma2_y", "framework", "p_a", "p_b", "p_d",
    "p_c", "p_ab", "sign_abd", "sign_abc",
];

#[derive(Serialize, Deserialize)]
struct Manifest {
    schema_version: u32,
    config: SimulationConfig,
    diagnostics: Diagnostics,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> MediationError + '_ {
    move |source| MediationError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(io_err(path))
}

/// Writes the report into directory `dir` (created if needed). JSON gives a
/// single `report.json`; CSV gives `curves.csv` (one row per framework,
/// condition and α), `records.csv` (one row per replicate and framework)
/// and a `manifest.json` with the config. Returns the files written.
pub fn export_report(report: &SimulationReport, dir: impl AsRef<Path>, format: ExportFormat) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    match format {
        ExportFormat::Json => {
            let path = dir.join(REPORT_JSON);
            write_text(&path, &serde_json::to_string_pretty(report)?)?;
            Ok(vec![path])
        }
        ExportFormat::Csv => {
            let curves = dir.join(CURVES_CSV);
            let mut w = csv::Writer::from_path(&curves)?;
            w.write_record(CURVE_HEADER)?;
            for c in &report.curves {
                for (i, alpha) in report.alpha_grid.iter().enumerate() {
                    let prop = (c.counts[i] > 0).then(|| (c.hits[i] as f64 / c.counts[i] as f64).to_string());
                    w.write_record([
                        c.framework.label().to_string(),
                        c.condition.label().to_string(),
                        alpha.to_string(),
                        c.counts[i].to_string(),
                        c.hits[i].to_string(),
                        prop.unwrap_or_default(),
                    ])?;
                }
            }
            w.flush().map_err(io_err(&curves))?;

            let records = dir.join(RECORDS_CSV);
            let mut w = csv::Writer::from_path(&records)?;
            w.write_record(RECORD_HEADER)?;
            for r in &report.records {
                let p = &r.params;
                for o in &r.outcomes {
                    w.write_record([
                        r.index.to_string(),
                        r.attempts.to_string(),
                        r.n.to_string(),
                        p.i_m.to_string(),
                        p.i_y.to_string(),
                        p.a.to_string(),
                        p.b.to_string(),
                        p.d.to_string(),
                        p.sigma2_m.to_string(),
                        p.sigma2_y.to_string(),
                        o.framework.label().to_string(),
                        o.p_a.to_string(),
                        o.p_b.to_string(),
                        o.p_d.to_string(),
                        o.p_c.to_string(),
                        o.p_ab.map(|v| v.to_string()).unwrap_or_default(),
                        o.sign_abd.to_string(),
                        o.sign_abc.to_string(),
                    ])?;
                }
            }
            w.flush().map_err(io_err(&records))?;

            let manifest = dir.join(MANIFEST_JSON);
            let m = Manifest {
                schema_version: report.schema_version,
                config: report.config.clone(),
                diagnostics: report.diagnostics.clone(),
            };
            write_text(&manifest, &serde_json::to_string_pretty(&m)?)?;
            Ok(vec![curves, records, manifest])
        }
    }
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, row: usize) -> Result<T> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse().map_err(|_| MediationError::Parse {
        row,
        column: RECORD_HEADER.get(i).copied().unwrap_or("?").to_string(),
        value: raw.to_string(),
    })
}

/// Reads back a report written by [`export_report`].
pub fn import_report(dir: impl AsRef<Path>, format: ExportFormat) -> Result<SimulationReport> {
    let dir = dir.as_ref();
    let report: SimulationReport = match format {
        ExportFormat::Json => serde_json::from_str(&read_text(&dir.join(REPORT_JSON))?)?,
        ExportFormat::Csv => {
            let m: Manifest = serde_json::from_str(&read_text(&dir.join(MANIFEST_JSON))?)?;

            let mut alpha_grid = Vec::new();
            let mut curves: Vec<Curve> = Vec::new();
            let mut rdr = csv::Reader::from_path(dir.join(CURVES_CSV))?;
            for (row, rec) in rdr.records().enumerate() {
                let rec = rec?;
                let framework: Framework = rec.get(0).unwrap_or("").parse()?;
                let condition: Condition = rec.get(1).unwrap_or("").parse()?;
                let alpha: f64 = field(&rec, 2, row + 1)?;
                let count: u64 = field(&rec, 3, row + 1)?;
                let hits: u64 = field(&rec, 4, row + 1)?;
                let same = curves.last().is_some_and(|c| c.framework == framework && c.condition == condition);
                if !same {
                    curves.push(Curve {
                        framework,
                        condition,
                        counts: Vec::new(),
                        hits: Vec::new(),
                    });
                }
                if curves.len() == 1 {
                    alpha_grid.push(alpha);
                }
                let c = curves.last_mut().expect("pushed");
                c.counts.push(count);
                c.hits.push(hits);
            }

            let mut records: Vec<ReplicateRecord> = Vec::new();
            let mut rdr = csv::Reader::from_path(dir.join(RECORDS_CSV))?;
            for (row, rec) in rdr.records().enumerate() {
                let rec = rec?;
                let row = row + 1;
                let index: usize = field(&rec, 0, row)?;
                let outcome = FrameworkOutcome {
                    framework: rec.get(10).unwrap_or("").parse()?,
                    p_a: field(&rec, 11, row)?,
                    p_b: field(&rec, 12, row)?,
                    p_d: field(&rec, 13, row)?,
                    p_c: field(&rec, 14, row)?,
                    p_ab: match rec.get(15).unwrap_or("") {
                        "" => None,
                        _ => Some(field(&rec, 15, row)?),
                    },
                    sign_abd: field(&rec, 16, row)?,
                    sign_abc: field(&rec, 17, row)?,
                };
                if records.last().is_some_and(|r| r.index == index) {
                    records.last_mut().expect("nonempty").outcomes.push(outcome);
                    continue;
                }
                records.push(ReplicateRecord {
                    index,
                    attempts: field(&rec, 1, row)?,
                    n: field(&rec, 2, row)?,
                    params: TrueParams {
                        i_m: field(&rec, 3, row)?,
                        i_y: field(&rec, 4, row)?,
                        a: field(&rec, 5, row)?,
                        b: field(&rec, 6, row)?,
                        d: field(&rec, 7, row)?,
                        sigma2_m: field(&rec, 8, row)?,
                        sigma2_y: field(&rec, 9, row)?,
                    },
                    outcomes: vec![outcome],
                });
            }
            SimulationReport {
                schema_version: m.schema_version,
                config: m.config,
                alpha_grid,
                records,
                curves,
                diagnostics: m.diagnostics,
            }
        }
    };
    if report.schema_version != SCHEMA_VERSION {
        return Err(MediationError::Schema(format!(
            "report schema version {} is not supported (expected {SCHEMA_VERSION})",
            report.schema_version
        )));
    }
    Ok(report)
}
