//! The three mediation regressions and their path tests.
//!
//! * `M ~ 1 + X (+ controls)` gives `a` and the intercept `i_M`,
//! * `Y ~ 1 + M + X (+ controls)` gives `b`, `d` and `i_Y`,
//! * `Y ~ 1 + X (+ controls)` gives the total effect `c` and `i*_Y`.
//!
//! LSE fits test each path with `F = t²` against `F(1, df)`; the Sobel test
//! covers `a·b`. LAD fits test each path with `z = |β̌| / sd(β̌)` against the
//! standard normal.

pub mod lad;
pub mod ols;

use serde::{Deserialize, Serialize};

use crate::dataset::{complete_cases, Dataset};
use crate::distributions::{f_pvalue, two_sided_normal_pvalue};
use crate::error::{domain, MediationError, Result};
use crate::linalg::Matrix;

pub use lad::{lad_fit, LadFit};
pub use ols::{ols_fit, OlsFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Framework {
    #[serde(rename = "LSE-F")]
    LseF,
    #[serde(rename = "LSE-Sobel")]
    LseSobel,
    #[serde(rename = "LAD-Z")]
    LadZ,
}

impl Framework {
    pub const ALL: [Framework; 3] = [Framework::LseF, Framework::LseSobel, Framework::LadZ];

    pub fn label(self) -> &'static str {
        match self {
            Framework::LseF => "LSE-F",
            Framework::LseSobel => "LSE-Sobel",
            Framework::LadZ => "LAD-Z",
        }
    }
}

impl std::fmt::Display for Framework {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Framework {
    type Err = MediationError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "lse-f" | "f" => Ok(Framework::LseF),
            "lse-sobel" | "sobel" => Ok(Framework::LseSobel),
            "lad-z" | "lad" => Ok(Framework::LadZ),
            other => domain(format!("unknown framework `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub outcome: String,
    pub mediator: String,
    pub treatment: String,
    #[serde(default)]
    pub controls: Vec<String>,
    pub alpha: f64,
}

impl ModelSpec {
    pub fn new(outcome: &str, mediator: &str, treatment: &str) -> Self {
        Self {
            outcome: outcome.into(),
            mediator: mediator.into(),
            treatment: treatment.into(),
            controls: Vec::new(),
            alpha: 0.05,
        }
    }

    pub fn with_controls<I: IntoIterator<Item = S>, S: Into<String>>(mut self, controls: I) -> Self {
        self.controls = controls.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (y, m, x) = (&self.outcome, &self.mediator, &self.treatment);
        if y == m || y == x || m == x {
            return domain("outcome, mediator and treatment must be distinct variables");
        }
        if self.controls.iter().any(|c| c == y || c == m || c == x) {
            return domain("a control cannot also be the outcome, mediator or treatment");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return domain(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        Ok(())
    }

    /// All variables the model touches, in the order (Y, M, X, controls...).
    pub fn variables(&self) -> Vec<&str> {
        let mut v = vec![self.outcome.as_str(), self.mediator.as_str(), self.treatment.as_str()];
        v.extend(self.controls.iter().map(String::as_str));
        v
    }
}

/// Complete-case columns of a mediation model. `intercept` is normally all
/// ones but any column may stand in for it (rotated data, for instance).
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    pub intercept: Vec<f64>,
    pub x: Vec<f64>,
    pub m: Vec<f64>,
    pub y: Vec<f64>,
    pub controls: Vec<(String, Vec<f64>)>,
}

impl DataMatrix {
    pub fn new(x: Vec<f64>, m: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if m.len() != n || y.len() != n {
            return Err(MediationError::Schema("X, M and Y must have equal length".into()));
        }
        Ok(Self {
            intercept: vec![1.0; n],
            x,
            m,
            y,
            controls: Vec::new(),
        })
    }

    /// Listwise-deletes the model variables and extracts the columns.
    pub fn from_dataset(ds: &Dataset, spec: &ModelSpec) -> Result<Self> {
        spec.validate()?;
        let cc = complete_cases(ds, &spec.variables())?;
        let mut dm = Self::new(
            cc.complete_column(&spec.treatment)?,
            cc.complete_column(&spec.mediator)?,
            cc.complete_column(&spec.outcome)?,
        )?;
        for c in &spec.controls {
            dm.controls.push((c.clone(), cc.complete_column(c)?));
        }
        Ok(dm)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    fn design(&self, with_mediator: bool, with_treatment: bool) -> (Matrix, Vec<String>) {
        let mut cols: Vec<&[f64]> = vec![&self.intercept];
        let mut names = vec!["(intercept)".to_string()];
        if with_mediator {
            cols.push(&self.m);
            names.push("M".into());
        }
        if with_treatment {
            cols.push(&self.x);
            names.push("X".into());
        }
        for (name, c) in &self.controls {
            cols.push(c);
            names.push(name.clone());
        }
        (Matrix::from_columns(&cols), names)
    }

    fn check_rows(&self) -> Result<()> {
        let widest = 3 + self.controls.len();
        if self.n() < widest + 2 {
            return Err(MediationError::InsufficientRows {
                rows: self.n(),
                cols: widest,
            });
        }
        Ok(())
    }
}

/// Path estimates, standard errors and tests for one framework.
///
/// For LAD-Z fits the `f_*` fields hold squared z statistics and the
/// Sobel fields are absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediationFit {
    pub framework: Framework,
    pub n_used: usize,
    pub n_controls: usize,
    pub a_hat: f64,
    pub b_hat: f64,
    pub d_hat: f64,
    pub c_hat: f64,
    pub i_m_hat: f64,
    pub i_y_hat: f64,
    pub i_ystar_hat: f64,
    pub se_a: f64,
    pub se_b: f64,
    pub se_d: f64,
    pub se_c: f64,
    pub t_a: f64,
    pub t_b: f64,
    pub t_d: f64,
    pub t_c: f64,
    pub f_a: f64,
    pub f_b: f64,
    pub f_d: f64,
    pub f_c: f64,
    pub p_a: f64,
    pub p_b: f64,
    pub p_d: f64,
    pub p_c: f64,
    /// Residual degrees of freedom of the mediator and outcome regressions
    /// (`n - 2 - k` and `n - 3 - k` with `k` controls); zero for LAD-Z.
    pub df_mediator: usize,
    pub df_outcome: usize,
    pub sobel_s: Option<f64>,
    pub p_ab: Option<f64>,
}

impl MediationFit {
    /// Same estimates, reported under another LSE framework.
    pub fn with_framework(mut self, framework: Framework) -> Result<Self> {
        if (self.framework == Framework::LadZ) != (framework == Framework::LadZ) {
            return domain("cannot relabel an LSE fit as LAD-Z or vice versa");
        }
        self.framework = framework;
        Ok(self)
    }

    pub fn sign_abd(&self) -> f64 {
        sign(self.a_hat * self.b_hat * self.d_hat)
    }

    pub fn sign_abc(&self) -> f64 {
        sign(self.a_hat * self.b_hat * self.c_hat)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub(crate) fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn f_test(t: f64, df: usize) -> Result<(f64, f64)> {
    let f = t * t;
    let p = if f.is_nan() { 1.0 } else { f_pvalue(f, df as u64)? };
    Ok((f, p))
}

/// Sobel statistic `S = âb̂ / sqrt(â² Var(b̂) + b̂² Var(â))` and its two-sided
/// normal p-value.
pub fn sobel_test(fit: &MediationFit) -> Result<(f64, f64)> {
    sobel_statistic(fit.a_hat, fit.se_a, fit.b_hat, fit.se_b)
}

pub fn sobel_statistic(a: f64, se_a: f64, b: f64, se_b: f64) -> Result<(f64, f64)> {
    if !(se_a > 0.0 && se_b > 0.0) {
        return Err(MediationError::Degenerate(format!(
            "Sobel test needs positive standard errors (se_a = {se_a}, se_b = {se_b})"
        )));
    }
    let denom = (a * a * se_b * se_b + b * b * se_a * se_a).sqrt();
    let s = if denom == 0.0 { 0.0 } else { a * b / denom };
    Ok((s, two_sided_normal_pvalue(s)))
}

/// LSE fit of the three regressions with F tests and the Sobel test.
pub fn fit_lse(ds: &Dataset, spec: &ModelSpec) -> Result<MediationFit> {
    fit_lse_matrix(&DataMatrix::from_dataset(ds, spec)?)
}

pub fn fit_lse_matrix(data: &DataMatrix) -> Result<MediationFit> {
    data.check_rows()?;
    let (dx, nx) = data.design(false, true);
    let (dmx, nmx) = data.design(true, true);
    let med = ols::ols_fit_named(&data.m, &dx, &nx)?;
    let out = ols::ols_fit_named(&data.y, &dmx, &nmx)?;
    let tot = ols::ols_fit_named(&data.y, &dx, &nx)?;

    let (t_a, t_b, t_d, t_c) = (med.t_ratio(1), out.t_ratio(1), out.t_ratio(2), tot.t_ratio(1));
    let (f_a, p_a) = f_test(t_a, med.df_resid)?;
    let (f_b, p_b) = f_test(t_b, out.df_resid)?;
    let (f_d, p_d) = f_test(t_d, out.df_resid)?;
    let (f_c, p_c) = f_test(t_c, tot.df_resid)?;

    let mut fit = MediationFit {
        framework: Framework::LseF,
        n_used: data.n(),
        n_controls: data.controls.len(),
        a_hat: med.coefficients[1],
        b_hat: out.coefficients[1],
        d_hat: out.coefficients[2],
        c_hat: tot.coefficients[1],
        i_m_hat: med.coefficients[0],
        i_y_hat: out.coefficients[0],
        i_ystar_hat: tot.coefficients[0],
        se_a: med.std_error(1),
        se_b: out.std_error(1),
        se_d: out.std_error(2),
        se_c: tot.std_error(1),
        t_a,
        t_b,
        t_d,
        t_c,
        f_a,
        f_b,
        f_d,
        f_c,
        p_a,
        p_b,
        p_d,
        p_c,
        df_mediator: med.df_resid,
        df_outcome: out.df_resid,
        sobel_s: None,
        p_ab: None,
    };
    if let Ok((s, p)) = sobel_test(&fit) {
        fit.sobel_s = Some(s);
        fit.p_ab = Some(p);
    }
    Ok(fit)
}

/// LAD fit of the three regressions with normal-reference z tests. The
/// total effect comes from its own L1 regression, so `c = ab + d` does not
/// hold here.
pub fn fit_lad(ds: &Dataset, spec: &ModelSpec) -> Result<MediationFit> {
    fit_lad_matrix(&DataMatrix::from_dataset(ds, spec)?)
}

struct LadPath {
    coefficients: Vec<f64>,
    se: Vec<f64>,
}

fn lad_path(y: &[f64], design: &Matrix, names: &[String]) -> Result<LadPath> {
    let fit = lad::lad_fit_named(y, design, names)?;
    let se = lad::lad_std_errors(design, &fit.residuals)?;
    Ok(LadPath {
        coefficients: fit.coefficients,
        se,
    })
}

fn z_test(estimate: f64, se: f64) -> (f64, f64) {
    let z = ols::ratio(estimate, se);
    if z.is_nan() {
        return (0.0, 1.0);
    }
    (z, two_sided_normal_pvalue(z))
}

pub fn fit_lad_matrix(data: &DataMatrix) -> Result<MediationFit> {
    data.check_rows()?;
    let (dx, nx) = data.design(false, true);
    let (dmx, nmx) = data.design(true, true);
    let med = lad_path(&data.m, &dx, &nx)?;
    let out = lad_path(&data.y, &dmx, &nmx)?;
    let tot = lad_path(&data.y, &dx, &nx)?;

    let (t_a, p_a) = z_test(med.coefficients[1], med.se[1]);
    let (t_b, p_b) = z_test(out.coefficients[1], out.se[1]);
    let (t_d, p_d) = z_test(out.coefficients[2], out.se[2]);
    let (t_c, p_c) = z_test(tot.coefficients[1], tot.se[1]);
    Ok(MediationFit {
        framework: Framework::LadZ,
        n_used: data.n(),
        n_controls: data.controls.len(),
        a_hat: med.coefficients[1],
        b_hat: out.coefficients[1],
        d_hat: out.coefficients[2],
        c_hat: tot.coefficients[1],
        i_m_hat: med.coefficients[0],
        i_y_hat: out.coefficients[0],
        i_ystar_hat: tot.coefficients[0],
        se_a: med.se[1],
        se_b: out.se[1],
        se_d: out.se[2],
        se_c: tot.se[1],
        t_a,
        t_b,
        t_d,
        t_c,
        f_a: t_a * t_a,
        f_b: t_b * t_b,
        f_d: t_d * t_d,
        f_c: t_c * t_c,
        p_a,
        p_b,
        p_d,
        p_c,
        df_mediator: 0,
        df_outcome: 0,
        sobel_s: None,
        p_ab: None,
    })
}
