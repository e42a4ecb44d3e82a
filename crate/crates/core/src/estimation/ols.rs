use serde::{Deserialize, Serialize};

use crate::error::{MediationError, Result};
use crate::linalg::{Matrix, Qr};

/// Least-squares fit of one regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `s² (XᵀX)⁻¹`, row-major `k x k`.
    pub covariance: Vec<Vec<f64>>,
    pub rss: f64,
    pub df_resid: usize,
}

impl OlsFit {
    pub fn std_error(&self, j: usize) -> f64 {
        self.covariance[j][j].max(0.0).sqrt()
    }

    /// `β_j / se_j`, with `0/0` read as 0.
    pub fn t_ratio(&self, j: usize) -> f64 {
        ratio(self.coefficients[j], self.std_error(j))
    }
}

pub(crate) fn ratio(estimate: f64, se: f64) -> f64 {
    if se == 0.0 && estimate == 0.0 {
        0.0
    } else {
        estimate / se
    }
}

pub(crate) fn collinear(names: &[String], column: usize) -> MediationError {
    MediationError::Collinear {
        column: names[column].clone(),
        previous: names[..column].to_vec(),
    }
}

pub(crate) fn default_names(k: usize) -> Vec<String> {
    (0..k).map(|j| format!("column {j}")).collect()
}

/// OLS with covariance `s²(XᵀX)⁻¹`, `s² = RSS / (n - k)`.
pub fn ols_fit(y: &[f64], design: &Matrix) -> Result<OlsFit> {
    ols_fit_named(y, design, &default_names(design.cols()))
}

pub fn ols_fit_named(y: &[f64], design: &Matrix, names: &[String]) -> Result<OlsFit> {
    let (n, k) = (design.rows(), design.cols());
    assert_eq!(y.len(), n, "response length must match design rows");
    if n <= k {
        return Err(MediationError::InsufficientRows { rows: n, cols: k });
    }
    let qr = Qr::new(design).map_err(|e| collinear(names, e.column))?;
    let coefficients = qr.solve(y);
    let fitted = design.mul_vec(&coefficients);
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let df_resid = n - k;
    let s2 = rss / df_resid as f64;
    let g = qr.gram_inverse();
    let covariance = (0..k).map(|i| (0..k).map(|j| s2 * g[(i, j)]).collect()).collect();
    Ok(OlsFit {
        coefficients,
        residuals,
        covariance,
        rss,
        df_resid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_point_line() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        let y = [1.0, 3.0, 5.0, 7.0, 9.0];
        let design = Matrix::from_columns(&[&[1.0; 5], &x]);
        let fit = ols_fit(&y, &design).unwrap();
        assert!((fit.coefficients[0] - 1.0).abs() < 1e-12);
        assert!((fit.coefficients[1] - 2.0).abs() < 1e-12);
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn duplicated_column_names_offender() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.5];
        let design = Matrix::from_columns(&[&[1.0; 5], &x, &x]);
        let names: Vec<String> = ["1", "X", "X2"].iter().map(|s| s.to_string()).collect();
        match ols_fit_named(&[1.0, 2.0, 3.0, 4.0, 5.0], &design, &names) {
            Err(MediationError::Collinear { column, previous }) => {
                assert_eq!(column, "X2");
                assert_eq!(previous, vec!["1".to_string(), "X".to_string()]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn too_few_rows() {
        let design = Matrix::from_columns(&[&[1.0, 1.0], &[0.0, 1.0]]);
        assert!(matches!(
            ols_fit(&[1.0, 2.0], &design),
            Err(MediationError::InsufficientRows { rows: 2, cols: 2 })
        ));
    }
}
