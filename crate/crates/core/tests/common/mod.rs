//! Independent oracles and data generators shared by the integration tests.
#![allow(dead_code)]

use mediation::distributions::{sample_inv_gamma_1_1, sample_std_normal, sample_uniform_int, sample_uniform_real, RngStream};
use mediation::DataMatrix;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::beta::beta_reg;

/// Upper tail of F(1, d2) via statrs' regularized incomplete beta.
pub fn f_upper_tail_oracle(x: f64, d2: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    // pick the form whose beta argument is computed without cancellation
    let t = x / (d2 + x);
    if t < 0.5 {
        1.0 - beta_reg(0.5, d2 / 2.0, t)
    } else {
        beta_reg(d2 / 2.0, 0.5, d2 / (d2 + x))
    }
}

/// λ with upper tail α, by plain bisection on the statrs tail.
pub fn f_critical_oracle(d2: u64, alpha: f64) -> f64 {
    let d2 = d2 as f64;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while f_upper_tail_oracle(hi, d2) > alpha {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f_upper_tail_oracle(mid, d2) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

pub fn normal_quantile_oracle(p: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().inverse_cdf(p)
}

pub fn two_sided_normal_oracle(z: f64) -> f64 {
    2.0 * Normal::new(0.0, 1.0).unwrap().cdf(-z.abs())
}

/// Gauss–Jordan inverse with partial pivoting.
pub fn invert(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..k).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, piv);
        let d = m[col][col];
        for v in m[col].iter_mut() {
            *v /= d;
        }
        for i in 0..k {
            if i != col {
                let f = m[i][col];
                let pivot_row = m[col].clone();
                for (v, p) in m[i].iter_mut().zip(pivot_row) {
                    *v -= f * p;
                }
            }
        }
    }
    m.into_iter().map(|r| r[k..].to_vec()).collect()
}

/// Normal-equations OLS: coefficients, standard errors, residual df.
pub struct OlsOracle {
    pub beta: Vec<f64>,
    pub se: Vec<f64>,
    pub df: usize,
}

pub fn ols_oracle(y: &[f64], cols: &[&[f64]]) -> OlsOracle {
    let k = cols.len();
    let n = y.len();
    let xtx: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| cols[i].iter().zip(cols[j]).map(|(a, b)| a * b).sum()).collect())
        .collect();
    let xty: Vec<f64> = (0..k).map(|i| cols[i].iter().zip(y).map(|(a, b)| a * b).sum()).collect();
    let inv = invert(&xtx);
    let beta: Vec<f64> = (0..k).map(|i| (0..k).map(|j| inv[i][j] * xty[j]).sum()).collect();
    let rss: f64 = (0..n)
        .map(|r| {
            let fit: f64 = (0..k).map(|j| beta[j] * cols[j][r]).sum();
            (y[r] - fit).powi(2)
        })
        .sum();
    let df = n - k;
    let s2 = rss / df as f64;
    let se = (0..k).map(|i| (s2 * inv[i][i]).sqrt()).collect();
    OlsOracle { beta, se, df }
}

/// Mediation paths by normal equations; `(a, b, d, c)` with F p-values
/// and the Sobel p-value.
pub struct PathOracle {
    pub a: f64,
    pub b: f64,
    pub d: f64,
    pub c: f64,
    pub f_a: f64,
    pub f_b: f64,
    pub f_d: f64,
    pub f_c: f64,
    pub p_a: f64,
    pub p_b: f64,
    pub p_d: f64,
    pub p_c: f64,
    pub sobel: f64,
    pub p_ab: f64,
}

pub fn path_oracle(dm: &DataMatrix) -> PathOracle {
    let one = &dm.intercept[..];
    let med = ols_oracle(&dm.m, &[one, &dm.x]);
    let out = ols_oracle(&dm.y, &[one, &dm.m, &dm.x]);
    let tot = ols_oracle(&dm.y, &[one, &dm.x]);
    let f = |b: f64, se: f64| (b / se).powi(2);
    let (f_a, f_b, f_d, f_c) = (
        f(med.beta[1], med.se[1]),
        f(out.beta[1], out.se[1]),
        f(out.beta[2], out.se[2]),
        f(tot.beta[1], tot.se[1]),
    );
    let (a, b) = (med.beta[1], out.beta[1]);
    let sobel = a * b / (a * a * out.se[1].powi(2) + b * b * med.se[1].powi(2)).sqrt();
    PathOracle {
        a,
        b,
        d: out.beta[2],
        c: tot.beta[1],
        f_a,
        f_b,
        f_d,
        f_c,
        p_a: f_upper_tail_oracle(f_a, med.df as f64),
        p_b: f_upper_tail_oracle(f_b, out.df as f64),
        p_d: f_upper_tail_oracle(f_d, out.df as f64),
        p_c: f_upper_tail_oracle(f_c, tot.df as f64),
        sobel,
        p_ab: two_sided_normal_oracle(sobel),
    }
}

/// Minimum L1 objective by enumerating every basis of `k` rows.
pub fn lad_bruteforce(y: &[f64], cols: &[&[f64]]) -> (Vec<f64>, f64) {
    fn combos(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            combos(n, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let n = y.len();
    let k = cols.len();
    let mut all = Vec::new();
    combos(n, k, 0, &mut Vec::new(), &mut all);
    let mut best = (Vec::new(), f64::INFINITY);
    for idx in all {
        let a: Vec<Vec<f64>> = idx.iter().map(|&r| cols.iter().map(|c| c[r]).collect()).collect();
        let inv = invert(&a);
        if !inv.iter().flatten().all(|v| v.is_finite() && v.abs() < 1e12) {
            continue;
        }
        let rhs: Vec<f64> = idx.iter().map(|&r| y[r]).collect();
        let beta: Vec<f64> = (0..k).map(|i| (0..k).map(|j| inv[i][j] * rhs[j]).sum()).collect();
        let obj: f64 = (0..n)
            .map(|r| (y[r] - (0..k).map(|j| beta[j] * cols[j][r]).sum::<f64>()).abs())
            .sum();
        if obj < best.1 {
            best = (beta, obj);
        }
    }
    best
}

/// A mediation dataset from the study's generating process with fixed `n`.
pub fn study_like(seed: u64, stream: u64, n: usize) -> DataMatrix {
    let mut rng = RngStream::new(seed, stream);
    let mut u = || sample_uniform_real(-1.0, 1.0, &mut rng).unwrap();
    let (im, iy, a, b, d) = (u(), u(), u(), u(), u());
    let sm = sample_inv_gamma_1_1(&mut rng).sqrt();
    let sy = sample_inv_gamma_1_1(&mut rng).sqrt();
    let x: Vec<f64> = (0..n).map(|_| sample_std_normal(&mut rng)).collect();
    let m: Vec<f64> = x.iter().map(|&xi| im + a * xi + sm * sample_std_normal(&mut rng)).collect();
    let y: Vec<f64> = x
        .iter()
        .zip(&m)
        .map(|(&xi, &mi)| iy + b * mi + d * xi + sy * sample_std_normal(&mut rng))
        .collect();
    DataMatrix::new(x, m, y).unwrap()
}

/// As [`study_like`] with `n` drawn uniformly from `[lo, hi]`.
pub fn study_like_n(seed: u64, stream: u64, lo: usize, hi: usize) -> DataMatrix {
    let mut rng = RngStream::new(seed ^ 0x9e37_79b9, stream);
    let n = sample_uniform_int(lo as i64, hi as i64, &mut rng).unwrap() as usize;
    study_like(seed, stream, n)
}

/// Random orthogonal matrix as a product of `n` Householder reflections,
/// returned as a function applying it to a vector.
pub fn random_orthogonal(seed: u64, n: usize) -> impl Fn(&[f64]) -> Vec<f64> {
    let mut rng = RngStream::new(seed, 7_777);
    let vs: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let v: Vec<f64> = (0..n).map(|_| sample_std_normal(&mut rng)).collect();
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            v.into_iter().map(|a| a / norm).collect()
        })
        .collect();
    move |x: &[f64]| {
        let mut out = x.to_vec();
        for v in &vs {
            let s = 2.0 * v.iter().zip(&out).map(|(a, b)| a * b).sum::<f64>();
            for (o, a) in out.iter_mut().zip(v) {
                *o -= s * a;
            }
        }
        out
    }
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
