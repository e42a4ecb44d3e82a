//! Orthogonal reduction of a no-covariate data matrix `(1, X, M, Y)`.
//!
//! A Householder QR of the four columns yields an orthogonal `Γ` with
//! `Γᵀ(1, X, M, Y)` upper triangular. After flipping row signs so the
//! diagonal is positive, the nonzero entries are the canonical coordinates
//!
//! ```text
//!   1 -> (√n, 0, 0, 0)    X -> (x1, x2, 0, 0)
//!   M -> (m1, m2, m3, 0)  Y -> (y1, y2, y3, y4)
//! ```
//!
//! from which every LSE estimate and test statistic follows in closed form.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{domain, MediationError, Result};
use crate::estimation::{sign, DataMatrix, ModelSpec};
use crate::linalg::{Matrix, Qr};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalCoords {
    pub x1: f64,
    pub x2: f64,
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub y1: f64,
    pub y2: f64,
    pub y3: f64,
    pub y4: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathEstimates {
    pub a_hat: f64,
    pub b_hat: f64,
    pub c_hat: f64,
    pub d_hat: f64,
}

/// A dataset seen through the scale-free statistics `r = |m2|/m3`,
/// `p = |y3|/y4`, `q = |y2|/y4` and the two sign contexts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryPoint {
    pub r: f64,
    pub p: f64,
    pub q: f64,
    pub n: usize,
    /// Sign of `â·b̂·d̂`.
    pub sign_abd: i8,
    /// Sign of `â·b̂·ĉ`.
    pub sign_abc: i8,
}

impl GeometryPoint {
    /// `F_a = (n - 2) r²`.
    pub fn f_a(&self) -> f64 {
        (self.n as f64 - 2.0) * self.r * self.r
    }

    /// `F_b = (n - 3) p²`.
    pub fn f_b(&self) -> f64 {
        (self.n as f64 - 3.0) * self.p * self.p
    }

    /// `|S| = {1/[(n-2)r²] + 1/[(n-3)p²]}^(-1/2)`.
    pub fn sobel_abs(&self) -> f64 {
        if self.r == 0.0 || self.p == 0.0 {
            return 0.0;
        }
        (1.0 / self.f_a() + 1.0 / self.f_b()).powf(-0.5)
    }
}

/// Reduces a fully observed `(Y, M, X)` dataset; controls are not supported.
pub fn canonical_reduce(ds: &Dataset, spec: &ModelSpec) -> Result<CanonicalCoords> {
    if !spec.controls.is_empty() {
        return domain("canonical reduction is defined only for the model without controls");
    }
    canonical_reduce_matrix(&DataMatrix::from_dataset(ds, spec)?)
}

pub fn canonical_reduce_matrix(data: &DataMatrix) -> Result<CanonicalCoords> {
    if !data.controls.is_empty() {
        return domain("canonical reduction is defined only for the model without controls");
    }
    let n = data.n();
    if n < 4 {
        return Err(MediationError::InsufficientRows { rows: n, cols: 4 });
    }
    let d = Matrix::from_columns(&[&data.intercept, &data.x, &data.m, &data.y]);
    let names = ["1", "X", "M", "Y"];
    let qr = Qr::new(&d).map_err(|e| MediationError::Collinear {
        column: names[e.column].to_string(),
        previous: names[..e.column].iter().map(|s| s.to_string()).collect(),
    })?;
    let mut r = qr.r();
    // reflect rows so the diagonal is positive
    for i in 0..4 {
        if r[(i, i)] < 0.0 {
            for j in i..4 {
                r[(i, j)] = -r[(i, j)];
            }
        }
    }
    Ok(CanonicalCoords {
        x1: r[(0, 1)],
        x2: r[(1, 1)],
        m1: r[(0, 2)],
        m2: r[(1, 2)],
        m3: r[(2, 2)],
        y1: r[(0, 3)],
        y2: r[(1, 3)],
        y3: r[(2, 3)],
        y4: r[(3, 3)],
        n,
    })
}

/// `â = m2/x2`, `b̂ = y3/m3`, `ĉ = y2/x2`, `d̂ = (m3 y2 - m2 y3)/(x2 m3)`.
pub fn coords_to_estimates(cc: &CanonicalCoords) -> PathEstimates {
    PathEstimates {
        a_hat: cc.m2 / cc.x2,
        b_hat: cc.y3 / cc.m3,
        c_hat: cc.y2 / cc.x2,
        d_hat: (cc.m3 * cc.y2 - cc.m2 * cc.y3) / (cc.x2 * cc.m3),
    }
}

pub fn geometry_point(cc: &CanonicalCoords) -> GeometryPoint {
    let est = coords_to_estimates(cc);
    GeometryPoint {
        r: cc.m2.abs() / cc.m3,
        p: cc.y3.abs() / cc.y4,
        q: cc.y2.abs() / cc.y4,
        n: cc.n,
        sign_abd: sign(est.a_hat * est.b_hat * est.d_hat) as i8,
        sign_abc: sign(est.a_hat * est.b_hat * est.c_hat) as i8,
    }
}

/// Canonical coordinates (with `x1 = m1 = y1 = 0`, `x2 = m3 = y4 = 1`)
/// whose geometry point is `pt`, signs included. Fails when the sign
/// context cannot occur at these `(r, p, q)`: `â·b̂·d̂ > 0` forces
/// `â·b̂·ĉ > 0` and `q > rp`, and `â·b̂·d̂ < 0` with `â·b̂·ĉ ≥ 0` forces
/// `q < rp`.
pub fn realize_coords(pt: &GeometryPoint) -> Result<CanonicalCoords> {
    if pt.n < 4 {
        return domain("a realizable point needs n ≥ 4");
    }
    if !(pt.r >= 0.0 && pt.p >= 0.0 && pt.q >= 0.0) {
        return domain("r, p and q must be nonnegative");
    }
    let y2 = if pt.sign_abc < 0 { -pt.q } else { pt.q };
    let cc = CanonicalCoords {
        x1: 0.0,
        x2: 1.0,
        m1: 0.0,
        m2: pt.r,
        m3: 1.0,
        y1: 0.0,
        y2,
        y3: pt.p,
        y4: 1.0,
        n: pt.n,
    };
    let got = geometry_point(&cc);
    if got.sign_abd != pt.sign_abd || got.sign_abc != pt.sign_abc {
        return domain(format!(
            "sign context (abd {}, abc {}) is not realizable at r = {}, p = {}, q = {}",
            pt.sign_abd, pt.sign_abc, pt.r, pt.p, pt.q
        ));
    }
    Ok(cc)
}

/// A concrete `n`-row dataset with an all-ones intercept whose canonical
/// coordinates are exactly `cc`.
///
/// Built as `H · D̃` with `D̃` the sparse canonical matrix and `H` the
/// Householder reflection sending `e1` to `1/√n`.
pub fn coords_to_data(cc: &CanonicalCoords) -> Result<DataMatrix> {
    let n = cc.n;
    if n < 4 {
        return domain("need n ≥ 4 rows");
    }
    let nf = n as f64;
    // D̃ columns scaled so the intercept column is √n e1
    let mut one = vec![0.0; n];
    one[0] = nf.sqrt();
    let mut x = vec![0.0; n];
    x[0] = cc.x1;
    x[1] = cc.x2;
    let mut m = vec![0.0; n];
    m[..3].copy_from_slice(&[cc.m1, cc.m2, cc.m3]);
    let mut y = vec![0.0; n];
    y[..4].copy_from_slice(&[cc.y1, cc.y2, cc.y3, cc.y4]);

    // H = I - 2 v vᵀ / (vᵀv), v = e1 - 1/√n
    let inv = 1.0 / nf.sqrt();
    let mut v = vec![-inv; n];
    v[0] += 1.0;
    let vv: f64 = v.iter().map(|a| a * a).sum();
    let reflect = |col: &[f64]| -> Vec<f64> {
        let s: f64 = v.iter().zip(col).map(|(a, b)| a * b).sum::<f64>() * 2.0 / vv;
        col.iter().zip(&v).map(|(c, a)| c - s * a).collect()
    };
    let mut intercept = reflect(&one);
    // exact ones up to rounding; snap to keep the intercept literal
    intercept.iter_mut().for_each(|v| *v = 1.0);
    Ok(DataMatrix {
        intercept,
        x: reflect(&x),
        m: reflect(&m),
        y: reflect(&y),
        controls: Vec::new(),
    })
}
