//! Least absolute deviation regression.
//!
//! IRLS with ε-smoothed weights `1 / max(|r_i|, ε)` gets close to the L1
//! optimum; the result is then snapped to an interpolating basis and
//! finished with basis-exchange descent steps until the optimality
//! certificate (all directional derivatives nonnegative) holds.

use serde::{Deserialize, Serialize};

use crate::distributions::{std_normal_density, std_normal_quantile};
use crate::error::{MediationError, Result};
use crate::linalg::{solve_square, Matrix, Qr};

use super::ols::{collinear, default_names};

pub const IRLS_EPSILON: f64 = 1e-8;
pub const IRLS_MAX_ITER: usize = 200;
pub const IRLS_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadFit {
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Sum of absolute residuals.
    pub objective: f64,
    pub irls_iterations: usize,
    pub irls_converged: bool,
    pub exchange_steps: usize,
    /// True when the basis optimality conditions were verified.
    pub certified: bool,
}

fn residuals_of(y: &[f64], design: &Matrix, beta: &[f64]) -> Vec<f64> {
    let fitted = design.mul_vec(beta);
    y.iter().zip(&fitted).map(|(a, b)| a - b).collect()
}

fn l1(r: &[f64]) -> f64 {
    r.iter().map(|v| v.abs()).sum()
}

fn row(design: &Matrix, i: usize) -> Vec<f64> {
    (0..design.cols()).map(|j| design[(i, j)]).collect()
}

fn weighted_ls(y: &[f64], design: &Matrix, w: &[f64]) -> Option<Vec<f64>> {
    let sw: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let cols: Vec<Vec<f64>> = (0..design.cols())
        .map(|j| design.column(j).iter().zip(&sw).map(|(x, s)| x * s).collect())
        .collect();
    let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
    let wx = Matrix::from_columns(&refs);
    let wy: Vec<f64> = y.iter().zip(&sw).map(|(a, s)| a * s).collect();
    Qr::new(&wx).ok().map(|qr| qr.solve(&wy))
}

fn irls(y: &[f64], design: &Matrix, start: Vec<f64>) -> (Vec<f64>, usize, bool, f64) {
    let mut beta = start;
    let mut last_change = f64::INFINITY;
    for it in 1..=IRLS_MAX_ITER {
        let r = residuals_of(y, design, &beta);
        let w: Vec<f64> = r.iter().map(|v| 1.0 / v.abs().max(IRLS_EPSILON)).collect();
        let Some(next) = weighted_ls(y, design, &w) else {
            return (beta, it, false, last_change);
        };
        last_change = next
            .iter()
            .zip(&beta)
            .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
            .fold(0.0, f64::max);
        beta = next;
        if last_change < IRLS_TOLERANCE {
            return (beta, it, true, last_change);
        }
    }
    (beta, IRLS_MAX_ITER, false, last_change)
}

/// Picks `k` observations, smallest |residual| first, whose rows are
/// linearly independent.
fn initial_basis(design: &Matrix, r: &[f64]) -> Option<Vec<usize>> {
    let k = design.cols();
    let mut order: Vec<usize> = (0..r.len()).collect();
    order.sort_by(|&a, &b| r[a].abs().total_cmp(&r[b].abs()));
    // incremental Gram-Schmidt on candidate rows
    let mut basis = Vec::with_capacity(k);
    let mut ortho: Vec<Vec<f64>> = Vec::with_capacity(k);
    for i in order {
        let mut v = row(design, i);
        let norm0 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm0 == 0.0 {
            continue;
        }
        for q in &ortho {
            let d: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= d * b);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 * norm0 {
            v.iter_mut().for_each(|a| *a /= norm);
            ortho.push(v);
            basis.push(i);
            if basis.len() == k {
                return Some(basis);
            }
        }
    }
    None
}

fn basis_matrix(design: &Matrix, basis: &[usize]) -> Matrix {
    let k = design.cols();
    let mut a = Matrix::zeros(k, k);
    for (bi, &i) in basis.iter().enumerate() {
        for j in 0..k {
            a[(bi, j)] = design[(i, j)];
        }
    }
    a
}

enum Exchange {
    Optimal,
    Step,
    Stuck,
}

/// One basis-exchange step. Moves `beta` along the steepest admissible edge
/// and updates `basis`.
fn exchange_step(y: &[f64], design: &Matrix, basis: &mut [usize], beta: &mut Vec<f64>) -> Exchange {
    let (n, k) = (design.rows(), design.cols());
    let a = basis_matrix(design, basis);
    let r = residuals_of(y, design, beta);
    let scale = r.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
    let in_basis = |i: usize| basis.contains(&i);

    let mut best: Option<(f64, Vec<f64>, usize)> = None;
    for j in 0..k {
        let mut e = vec![0.0; k];
        e[j] = 1.0;
        let Some(dir) = solve_square(&a, &e) else {
            return Exchange::Stuck;
        };
        let xd: Vec<f64> = design.mul_vec(&dir);
        let mut slope_pos = 1.0; // basis row j leaves zero with |x_jᵀδ| = 1
        let mut slope_neg = 1.0;
        for i in (0..n).filter(|&i| !in_basis(i)) {
            if r[i].abs() <= 1e-13 * scale {
                slope_pos += xd[i].abs();
                slope_neg += xd[i].abs();
            } else {
                let s = r[i].signum();
                slope_pos -= s * xd[i];
                slope_neg += s * xd[i];
            }
        }
        for (slope, sign) in [(slope_pos, 1.0), (slope_neg, -1.0)] {
            if slope < -1e-12 && best.as_ref().is_none_or(|b| slope < b.0) {
                let d: Vec<f64> = dir.iter().map(|v| v * sign).collect();
                best = Some((slope, d, j));
            }
        }
    }
    let Some((slope0, dir, leaving)) = best else {
        return Exchange::Optimal;
    };

    // line search: minimize Σ|r_i - t x_iᵀδ| over t > 0 (weighted median)
    let xd = design.mul_vec(&dir);
    let mut breaks: Vec<(f64, f64, usize)> = (0..n)
        .filter(|&i| !in_basis(i) && xd[i] != 0.0)
        .filter_map(|i| {
            let t = r[i] / xd[i];
            (t > 0.0 && r[i].abs() > 1e-13 * scale).then_some((t, 2.0 * xd[i].abs(), i))
        })
        .collect();
    breaks.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut slope = slope0;
    for (t, inc, i) in breaks {
        slope += inc;
        if slope >= 0.0 {
            for (b, d) in beta.iter_mut().zip(&dir) {
                *b += t * d;
            }
            basis[leaving] = i;
            return Exchange::Step;
        }
    }
    // unbounded descent is impossible for L1 with full-rank design
    Exchange::Stuck
}

fn polish(y: &[f64], design: &Matrix, start: &[f64]) -> Option<(Vec<f64>, usize, bool)> {
    let r = residuals_of(y, design, start);
    let mut basis = initial_basis(design, &r)?;
    let a = basis_matrix(design, &basis);
    let yb: Vec<f64> = basis.iter().map(|&i| y[i]).collect();
    let mut beta = solve_square(&a, &yb)?;
    let max_steps = 20 * y.len() + 100;
    for step in 0..max_steps {
        match exchange_step(y, design, &mut basis, &mut beta) {
            Exchange::Optimal => {
                // re-solve on the final basis to clear accumulated drift
                let a = basis_matrix(design, &basis);
                let yb: Vec<f64> = basis.iter().map(|&i| y[i]).collect();
                let exact = solve_square(&a, &yb).unwrap_or(beta);
                return Some((exact, step, true));
            }
            Exchange::Step => {}
            Exchange::Stuck => return Some((beta, step, false)),
        }
    }
    Some((beta, max_steps, false))
}

/// Minimizes `Σ |y_i - x_iᵀβ|`.
pub fn lad_fit(y: &[f64], design: &Matrix) -> Result<LadFit> {
    lad_fit_named(y, design, &default_names(design.cols()))
}

pub fn lad_fit_named(y: &[f64], design: &Matrix, names: &[String]) -> Result<LadFit> {
    let (n, k) = (design.rows(), design.cols());
    assert_eq!(y.len(), n);
    if n <= k {
        return Err(MediationError::InsufficientRows { rows: n, cols: k });
    }
    let qr = Qr::new(design).map_err(|e| collinear(names, e.column))?;
    let start = qr.solve(y);
    let (irls_beta, irls_iterations, irls_converged, last_change) = irls(y, design, start);
    let irls_obj = l1(&residuals_of(y, design, &irls_beta));

    let (coefficients, exchange_steps, certified) = match polish(y, design, &irls_beta) {
        Some((beta, steps, cert)) => {
            let obj = l1(&residuals_of(y, design, &beta));
            if cert || obj <= irls_obj {
                (beta, steps, cert)
            } else {
                (irls_beta, steps, false)
            }
        }
        None => (irls_beta, 0, false),
    };
    if !certified && !irls_converged {
        return Err(MediationError::NonConvergence {
            iterations: irls_iterations,
            last_change,
        });
    }
    let residuals = residuals_of(y, design, &coefficients);
    Ok(LadFit {
        objective: l1(&residuals),
        coefficients,
        residuals,
        irls_iterations,
        irls_converged,
        exchange_steps,
        certified,
    })
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    // type-7 interpolation
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Kernel estimate of the residual density at zero: Gaussian kernel with a
/// Hall–Sheather bandwidth for the median mapped to the residual scale by
/// `min(sd, IQR/1.34)`. Returns `None` when the residuals have no spread.
pub fn residual_density_at_zero(residuals: &[f64]) -> Option<f64> {
    let n = residuals.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let z = std_normal_quantile(0.975).expect("valid probability");
    let phi0 = std_normal_density(0.0);
    // at the median qnorm(τ) = 0, so the Hall–Sheather factor reduces to 1.5 φ(0)²
    let h_prob = (nf.powf(-1.0 / 3.0) * z.powf(2.0 / 3.0) * (1.5 * phi0 * phi0).powf(1.0 / 3.0)).min(0.49);
    let spread = std_normal_quantile(0.5 + h_prob).ok()? - std_normal_quantile(0.5 - h_prob).ok()?;

    let mean = residuals.iter().sum::<f64>() / nf;
    let sd = (residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (nf - 1.0)).sqrt();
    let mut sorted = residuals.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let robust = sd.min(iqr / 1.34);
    let scale = if robust > 0.0 { robust } else { sd };
    if !(scale > 0.0) {
        return None;
    }
    let h = spread * scale;
    let density = residuals.iter().map(|r| std_normal_density(r / h)).sum::<f64>() / (nf * h);
    Some(density)
}

/// Asymptotic LAD standard errors `sqrt(diag((XᵀX)⁻¹)) / (2 f̂(0))`; zeros when
/// the residuals have no spread.
pub fn lad_std_errors(design: &Matrix, residuals: &[f64]) -> Result<Vec<f64>> {
    let qr = Qr::new(design).map_err(|e| collinear(&default_names(design.cols()), e.column))?;
    let g = qr.gram_inverse();
    let sparsity = match residual_density_at_zero(residuals) {
        Some(f0) if f0 > 0.0 => 1.0 / (2.0 * f0),
        _ => 0.0,
    };
    Ok((0..design.cols()).map(|j| sparsity * g[(j, j)].max(0.0).sqrt()).collect())
}
