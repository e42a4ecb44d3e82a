//! Python bindings. Results that are plain records come back as dicts; fits
//! and geometry points are small frozen classes with a `to_dict()` method.

use std::path::PathBuf;

use mediation::geometry::{self as geo, Region, RegionId, Subtype};
use mediation::reduction::canonical_reduce_matrix;
use mediation::simulation::{export_report, Condition, ExportFormat};
use mediation::{DataMatrix, EffectTests, Framework, GeometryPoint, MediationFit, ModelSpec, Role, SimulationConfig, VariableSpec};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyString};
use serde::de::DeserializeOwned;
use serde::Serialize;

create_exception!(mediation_py, MediationError, PyValueError);

fn err(e: mediation::MediationError) -> PyErr {
    MediationError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| err(e.into()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| err(e.into()))
}

fn parse<T: std::str::FromStr<Err = mediation::MediationError>>(s: &str) -> PyResult<T> {
    s.parse().map_err(err)
}

/// Estimates and tests of one mediation model.
#[pyclass(name = "MediationFit", frozen, module = "mediation_py")]
struct PyFit(MediationFit);

#[pymethods]
impl PyFit {
    #[getter]
    fn framework(&self) -> &'static str {
        self.0.framework.label()
    }
    #[getter]
    fn n_used(&self) -> usize {
        self.0.n_used
    }
    #[getter]
    fn a_hat(&self) -> f64 {
        self.0.a_hat
    }
    #[getter]
    fn b_hat(&self) -> f64 {
        self.0.b_hat
    }
    #[getter]
    fn d_hat(&self) -> f64 {
        self.0.d_hat
    }
    #[getter]
    fn c_hat(&self) -> f64 {
        self.0.c_hat
    }
    #[getter]
    fn p_a(&self) -> f64 {
        self.0.p_a
    }
    #[getter]
    fn p_b(&self) -> f64 {
        self.0.p_b
    }
    #[getter]
    fn p_d(&self) -> f64 {
        self.0.p_d
    }
    #[getter]
    fn p_c(&self) -> f64 {
        self.0.p_c
    }
    #[getter]
    fn p_ab(&self) -> Option<f64> {
        self.0.p_ab
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0)
    }

    fn __repr__(&self) -> String {
        format!(
            "MediationFit({}, n={}, a={:.4}, b={:.4}, d={:.4}, c={:.4})",
            self.0.framework, self.0.n_used, self.0.a_hat, self.0.b_hat, self.0.d_hat, self.0.c_hat
        )
    }
}

/// A dataset reduced to `(r, p, q)` plus its sign context.
#[pyclass(name = "GeometryPoint", frozen, module = "mediation_py")]
struct PyPoint(GeometryPoint);

#[pymethods]
impl PyPoint {
    #[new]
    #[pyo3(signature = (r, p, q, n, sign_abd, sign_abc))]
    fn new(r: f64, p: f64, q: f64, n: usize, sign_abd: i8, sign_abc: i8) -> Self {
        PyPoint(GeometryPoint { r, p, q, n, sign_abd, sign_abc })
    }
    #[getter]
    fn r(&self) -> f64 {
        self.0.r
    }
    #[getter]
    fn p(&self) -> f64 {
        self.0.p
    }
    #[getter]
    fn q(&self) -> f64 {
        self.0.q
    }
    #[getter]
    fn n(&self) -> usize {
        self.0.n
    }
    #[getter]
    fn sign_abd(&self) -> i8 {
        self.0.sign_abd
    }
    #[getter]
    fn sign_abc(&self) -> i8 {
        self.0.sign_abc
    }

    /// Membership in `Ra`, `Rb`, `Rc`, `Rd` or `Rab`; `complement` negates.
    #[pyo3(signature = (region, alpha, complement = false))]
    fn in_region(&self, region: &str, alpha: f64, complement: bool) -> PyResult<bool> {
        let region = match region.to_ascii_lowercase().as_str() {
            "ra" => Region::Ra,
            "rb" => Region::Rb,
            "rc" => Region::Rc,
            "rd" => Region::Rd,
            "rab" | "rab_sobel" => Region::RabSobel,
            other => return Err(PyValueError::new_err(format!("unknown region `{other}`"))),
        };
        let id = if complement { RegionId::not(region) } else { RegionId::of(region) };
        let cv = geo::critical_values(self.0.n, alpha).map_err(err)?;
        geo::in_region(&self.0, id, &cv).map_err(err)
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0)
    }

    fn __repr__(&self) -> String {
        format!(
            "GeometryPoint(r={}, p={}, q={}, n={}, sign_abd={}, sign_abc={})",
            self.0.r, self.0.p, self.0.q, self.0.n, self.0.sign_abd, self.0.sign_abc
        )
    }
}

fn matrix(x: Vec<f64>, m: Vec<f64>, y: Vec<f64>, controls: Option<Bound<'_, PyDict>>) -> PyResult<DataMatrix> {
    let mut dm = DataMatrix::new(x, m, y).map_err(err)?;
    if let Some(c) = controls {
        for (k, v) in c.iter() {
            dm.controls.push((k.extract()?, v.extract()?));
        }
    }
    Ok(dm)
}

fn fit_matrix(dm: &DataMatrix, framework: &str) -> PyResult<MediationFit> {
    let fw: Framework = parse(framework)?;
    let fit = match fw {
        Framework::LadZ => mediation::estimation::fit_lad_matrix(dm),
        other => mediation::estimation::fit_lse_matrix(dm).and_then(|f| f.with_framework(other)),
    };
    fit.map_err(err)
}

/// Fits the model from columns `y`, `m`, `x` and optional `{name: column}` controls.
#[pyfunction]
#[pyo3(signature = (y, m, x, controls = None, framework = "lse-f"))]
fn fit(y: Vec<f64>, m: Vec<f64>, x: Vec<f64>, controls: Option<Bound<'_, PyDict>>, framework: &str) -> PyResult<PyFit> {
    Ok(PyFit(fit_matrix(&matrix(x, m, y, controls)?, framework)?))
}

/// Loads a CSV, percentizes the columns given in `ranges` (`{name: (min, max)}`)
/// and fits on complete cases.
#[pyfunction]
#[pyo3(signature = (path, outcome, mediator, treatment, controls = Vec::new(), ranges = None, framework = "lse-f"))]
fn fit_csv(
    path: PathBuf,
    outcome: &str,
    mediator: &str,
    treatment: &str,
    controls: Vec<String>,
    ranges: Option<Bound<'_, PyDict>>,
    framework: &str,
) -> PyResult<PyFit> {
    let model = ModelSpec::new(outcome, mediator, treatment).with_controls(controls);
    let mut specs = Vec::new();
    let mut scaled = Vec::new();
    for name in model.variables() {
        let range: Option<(f64, f64)> = match &ranges {
            Some(r) => r.get_item(name)?.map(|v| v.extract()).transpose()?,
            None => None,
        };
        let (lo, hi) = range.unwrap_or((0.0, 1.0));
        let spec = VariableSpec::new(name, Role::Control, lo, hi).map_err(err)?;
        if range.is_some() {
            scaled.push(spec.clone());
        }
        specs.push(spec);
    }
    let ds = mediation::load_csv(&path, &specs)
        .and_then(|ds| ds.percentized(&scaled))
        .map_err(err)?;
    let dm = DataMatrix::from_dataset(&ds, &model).map_err(err)?;
    Ok(PyFit(fit_matrix(&dm, framework)?))
}

fn effect_tests(obj: &Bound<'_, PyAny>) -> PyResult<EffectTests> {
    match obj.cast::<PyFit>() {
        Ok(f) => Ok(EffectTests::from(&f.get().0)),
        Err(_) => from_py(obj),
    }
}

/// Classifies a fit, or a dict with the `EffectTests` fields, at level `alpha`.
#[pyfunction]
#[pyo3(signature = (tests, alpha = 0.05))]
fn classify<'py>(py: Python<'py>, tests: &Bound<'py, PyAny>, alpha: f64) -> PyResult<Bound<'py, PyAny>> {
    let verdict = mediation::classify(&effect_tests(tests)?, alpha).map_err(err)?;
    let out = to_py(py, &verdict)?;
    out.set_item("label", verdict.label())?;
    Ok(out)
}

/// Percent contributions `b_p` and `c_p` of each path.
#[pyfunction]
fn percent_contributions<'py>(py: Python<'py>, tests: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
    let report = mediation::percent_contributions(&effect_tests(tests)?).map_err(err)?;
    to_py(py, &report)
}

/// Canonical reduction of columns `y`, `m`, `x` to a geometry point.
#[pyfunction]
fn reduce(y: Vec<f64>, m: Vec<f64>, x: Vec<f64>) -> PyResult<PyPoint> {
    let cc = canonical_reduce_matrix(&DataMatrix::new(x, m, y).map_err(err)?).map_err(err)?;
    Ok(PyPoint(mediation::geometry_point(&cc)))
}

#[pyfunction]
#[pyo3(signature = (n, alpha = 0.05))]
fn critical_values<'py>(py: Python<'py>, n: usize, alpha: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &geo::critical_values(n, alpha).map_err(err)?)
}

/// An indirect-only point for `subtype` ("d-plementary" or "d-petitive").
#[pyfunction]
#[pyo3(signature = (n, alpha = 0.05, subtype = "d-plementary", context = None))]
fn witness_indirect_only(n: usize, alpha: f64, subtype: &str, context: Option<i8>) -> PyResult<PyPoint> {
    let subtype: Subtype = parse(subtype)?;
    let w = match context {
        Some(c) => geo::witness_indirect_only_in_context(n, alpha, subtype, c),
        None => geo::witness_indirect_only(n, alpha, subtype),
    };
    w.map(PyPoint).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (n, alpha = 0.05, context = 1))]
fn witness_competitive(n: usize, alpha: f64, context: i8) -> PyResult<PyPoint> {
    geo::witness_competitive(n, alpha, context).map(PyPoint).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (n, alpha = 0.05))]
fn witness_sobel_io(n: usize, alpha: f64) -> PyResult<PyPoint> {
    geo::witness_sobel_io(n, alpha).map(PyPoint).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (n, alpha = 0.05, density = 500))]
fn verify_complementary_superfluous<'py>(py: Python<'py>, n: usize, alpha: f64, density: usize) -> PyResult<Bound<'py, PyAny>> {
    let report = py
        .detach(|| geo::verify_complementary_superfluous(n, alpha, density))
        .map_err(err)?;
    to_py(py, &report)
}

/// Runs the Monte Carlo study. `config` is a dict of config fields, `overrides`
/// apply on top. Returns the alpha grid and one proportion curve per
/// framework and condition; with `out` the full report is also written.
#[pyfunction]
#[pyo3(signature = (config = None, out = None, format = "json"))]
fn simulate<'py>(
    py: Python<'py>,
    config: Option<Bound<'py, PyAny>>,
    out: Option<PathBuf>,
    format: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg: SimulationConfig = match &config {
        Some(c) if c.is_instance_of::<PyString>() => SimulationConfig::load(c.extract::<String>()?).map_err(err)?,
        Some(c) => from_py(c)?,
        None => SimulationConfig::default(),
    };
    let format: ExportFormat = parse(format)?;
    let report = py.detach(|| mediation::run_study(&cfg)).map_err(err)?;
    if let Some(dir) = &out {
        export_report(&report, dir, format).map_err(err)?;
    }
    let result = PyDict::new(py);
    result.set_item("alpha_grid", report.alpha_grid.clone())?;
    result.set_item("replicates", report.records.len())?;
    result.set_item("regenerated", report.diagnostics.regenerated)?;
    let curves = PyDict::new(py);
    for c in &report.curves {
        let key = format!("{}/{}", c.framework.label(), c.condition.label());
        curves.set_item(key, c.proportions())?;
    }
    result.set_item("curves", curves)?;
    result.set_item("conditions", Condition::ALL.map(|c| c.label()).to_vec())?;
    Ok(result.into_any())
}

#[pymodule]
fn mediation_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("MediationError", m.py().get_type::<MediationError>())?;
    m.add_class::<PyFit>()?;
    m.add_class::<PyPoint>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(fit_csv, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(percent_contributions, m)?)?;
    m.add_function(wrap_pyfunction!(reduce, m)?)?;
    m.add_function(wrap_pyfunction!(critical_values, m)?)?;
    m.add_function(wrap_pyfunction!(witness_indirect_only, m)?)?;
    m.add_function(wrap_pyfunction!(witness_competitive, m)?)?;
    m.add_function(wrap_pyfunction!(witness_sobel_io, m)?)?;
    m.add_function(wrap_pyfunction!(verify_complementary_superfluous, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
