//! Small dense linear algebra: column-major matrices and a Householder QR
//! factorization with a rank check. Designs here have at most a handful of
//! columns, so nothing is blocked or vectorized.

/// Relative tolerance on `|R_kk| / ||A_k||` below which column `k` is treated
/// as linearly dependent on the columns before it.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Column-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from equal-length columns.
    pub fn from_columns(columns: &[&[f64]]) -> Self {
        let cols = columns.len();
        let rows = columns.first().map_or(0, |c| c.len());
        let mut data = Vec::with_capacity(rows * cols);
        for c in columns {
            assert_eq!(c.len(), rows, "columns must have equal length");
            data.extend_from_slice(c);
        }
        Self { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn column_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        let mut out = vec![0.0; self.rows];
        for (j, &vj) in v.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.column(j)) {
                *o += a * vj;
            }
        }
        out
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let col = self.mul_vec(other.column(j));
            out.column_mut(j).copy_from_slice(&col);
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[j * self.rows + i]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[j * self.rows + i]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    // scaled to avoid overflow on large survey magnitudes
    let scale = a.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * a.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}

/// A column failed the rank check; `column` is its index in the input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankDeficient {
    pub column: usize,
}

/// Householder QR factorization `A = Q R` of a tall matrix.
///
/// The reflectors are stored below the diagonal of `factors` (LAPACK
/// `geqrf` layout); `R` lives on and above the diagonal.
#[derive(Debug, Clone)]
pub struct Qr {
    factors: Matrix,
    tau: Vec<f64>,
}

impl Qr {
    pub fn new(a: &Matrix) -> Result<Self, RankDeficient> {
        let (m, n) = (a.rows(), a.cols());
        assert!(m >= n, "QR requires rows >= cols");
        let col_norms: Vec<f64> = (0..n).map(|j| norm2(a.column(j))).collect();
        let mut f = a.clone();
        let mut tau = vec![0.0; n];

        for k in 0..n {
            let alpha = norm2(&f.column(k)[k..]);
            if alpha <= RANK_TOLERANCE * col_norms[k] || alpha == 0.0 {
                return Err(RankDeficient { column: k });
            }
            let x0 = f[(k, k)];
            // beta has the opposite sign of x0 so v0 = x0 - beta never cancels
            let beta = if x0 >= 0.0 { -alpha } else { alpha };
            let v0 = x0 - beta;
            {
                let col = f.column_mut(k);
                for v in &mut col[k + 1..] {
                    *v /= v0;
                }
                col[k] = beta;
            }
            tau[k] = (beta - x0) / beta;

            for j in k + 1..n {
                let mut s = f[(k, j)];
                for i in k + 1..m {
                    s += f[(i, k)] * f[(i, j)];
                }
                s *= tau[k];
                f[(k, j)] -= s;
                for i in k + 1..m {
                    let vik = f[(i, k)];
                    f[(i, j)] -= s * vik;
                }
            }
        }
        Ok(Self { factors: f, tau })
    }

    pub fn rows(&self) -> usize {
        self.factors.rows()
    }

    pub fn cols(&self) -> usize {
        self.factors.cols()
    }

    /// Upper-triangular factor, `cols x cols`.
    pub fn r(&self) -> Matrix {
        let n = self.cols();
        let mut r = Matrix::zeros(n, n);
        for j in 0..n {
            for i in 0..=j {
                r[(i, j)] = self.factors[(i, j)];
            }
        }
        r
    }

    /// Computes `Qᵀ y` for the full `rows x rows` orthogonal `Q`.
    pub fn qt_mul(&self, y: &[f64]) -> Vec<f64> {
        let (m, n) = (self.rows(), self.cols());
        assert_eq!(y.len(), m);
        let mut out = y.to_vec();
        for k in 0..n {
            let mut s = out[k];
            for i in k + 1..m {
                s += self.factors[(i, k)] * out[i];
            }
            s *= self.tau[k];
            out[k] -= s;
            for i in k + 1..m {
                out[i] -= s * self.factors[(i, k)];
            }
        }
        out
    }

    /// Least-squares coefficients `argmin ||A β - y||`.
    pub fn solve(&self, y: &[f64]) -> Vec<f64> {
        let qty = self.qt_mul(y);
        back_substitute(&self.factors, &qty[..self.cols()])
    }

    /// `(AᵀA)⁻¹ = R⁻¹ R⁻ᵀ`.
    pub fn gram_inverse(&self) -> Matrix {
        let n = self.cols();
        let mut rinv = Matrix::zeros(n, n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = back_substitute(&self.factors, &e);
            rinv.column_mut(j).copy_from_slice(&col);
        }
        rinv.mul(&rinv.transpose())
    }
}

/// Solves `R x = b` using the upper triangle of the leading square block.
fn back_substitute(r: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in i + 1..n {
            s -= r[(i, j)] * x[j];
        }
        x[i] = s / r[(i, i)];
    }
    x
}

/// Solves a small square system by Gaussian elimination with partial
/// pivoting. Returns `None` when a pivot underflows `RANK_TOLERANCE` relative
/// to the largest entry.
pub fn solve_square(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    assert_eq!(n, b.len());
    let scale = (0..n)
        .flat_map(|j| a.column(j).iter().copied())
        .fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return None;
    }
    let mut m = a.clone();
    let mut x = b.to_vec();
    for k in 0..n {
        let (piv, pval) = (k..n)
            .map(|i| (i, m[(i, k)].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))?;
        if pval <= RANK_TOLERANCE * scale {
            return None;
        }
        if piv != k {
            for j in 0..n {
                let t = m[(k, j)];
                m[(k, j)] = m[(piv, j)];
                m[(piv, j)] = t;
            }
            x.swap(k, piv);
        }
        for i in k + 1..n {
            let factor = m[(i, k)] / m[(k, k)];
            if factor == 0.0 {
                continue;
            }
            for j in k..n {
                let mkj = m[(k, j)];
                m[(i, j)] -= factor * mkj;
            }
            x[i] -= factor * x[k];
        }
    }
    Some(back_substitute(&m, &x))
}
