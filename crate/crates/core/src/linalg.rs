//! Dense complex linear algebra for the detectors.
//!
//! Only what zero-forcing needs: a row-major matrix, Householder QR, and
//! triangular inversion. Every routine reports its multiplications to a
//! [`MulCounter`].

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::complexity::MulCounter;
use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Relative singular-value cutoff below which a matrix is treated as rank
/// deficient.
pub const RANK_TOL: f64 = 1e-10;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

pub type CMatrix = Matrix<C64>;
pub type RMatrix = Matrix<f64>;

impl<T: Copy + Default> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::default(); rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} elements for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<T> {
        (0..self.rows).map(|r| self.data[r * self.cols + c]).collect()
    }

    /// Rows at `indices`, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &r in indices {
            data.extend_from_slice(self.row(r));
        }
        Matrix { rows: indices.len(), cols: self.cols, data }
    }

    /// Columns at `indices`, in the given order.
    pub fn select_cols(&self, indices: &[usize]) -> Self {
        Matrix::from_fn(self.rows, indices.len(), |r, c| self[(r, indices[c])])
    }

    pub fn map<U: Copy + Default>(&self, f: impl Fn(T) -> U) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f(x)).collect() }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (r, c): (usize, usize)) -> &T {
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        &mut self.data[r * self.cols + c]
    }
}

impl CMatrix {
    /// `self * x`.
    pub fn mul_vec(&self, x: &[C64], ops: &mut impl MulCounter) -> Vec<C64> {
        assert_eq!(x.len(), self.cols, "vector length must match column count");
        ops.add((self.rows * self.cols) as u64);
        (0..self.rows).map(|r| self.row(r).iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    /// Squared Euclidean norm of column `c`.
    pub fn column_norm_sqr(&self, c: usize, ops: &mut impl MulCounter) -> f64 {
        ops.add(self.rows as u64);
        (0..self.rows).map(|r| self[(r, c)].norm_sqr()).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// `sum_i conj(a_i) b_i`.
#[inline]
pub fn dot_conj(a: &[C64], b: &[C64], ops: &mut impl MulCounter) -> C64 {
    ops.add(a.len() as u64);
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[inline]
pub fn norm_sqr(a: &[C64], ops: &mut impl MulCounter) -> f64 {
    ops.add(a.len() as u64);
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Thin Householder QR of a tall matrix, `A = Q R` with `R` upper triangular.
///
/// `Q` is kept implicitly as the sequence of reflectors `I - 2 v v^H`.
#[derive(Debug, Clone)]
pub struct HouseholderQr {
    rows: usize,
    reflectors: Vec<Vec<C64>>,
    r: CMatrix,
}

impl HouseholderQr {
    pub fn new(a: &CMatrix, ops: &mut impl MulCounter) -> Result<Self> {
        let (m, n) = (a.rows(), a.cols());
        if m < n {
            return Err(Error::ZfInfeasible(format!("{m} antennas for {n} users")));
        }
        let mut cols: Vec<Vec<C64>> = (0..n).map(|c| a.column(c)).collect();
        let mut reflectors = Vec::with_capacity(n);
        for j in 0..n {
            let x = &cols[j][j..];
            let norm = norm_sqr(x, ops).sqrt();
            if norm == 0.0 {
                reflectors.push(Vec::new());
                continue;
            }
            let x0 = x[0];
            let phase = if x0 == C64::new(0.0, 0.0) {
                C64::new(1.0, 0.0)
            } else {
                x0 / x0.norm()
            };
            let alpha = -phase * norm;
            ops.add(2);
            let mut v = x.to_vec();
            v[0] -= alpha;
            let v_norm = (2.0 * norm * norm + 2.0 * x0.norm() * norm).sqrt();
            for z in v.iter_mut() {
                *z /= v_norm;
            }
            ops.add(v.len() as u64);
            cols[j][j] = alpha;
            for z in cols[j][j + 1..].iter_mut() {
                *z = C64::new(0.0, 0.0);
            }
            for col in cols[j + 1..].iter_mut() {
                reflect(&v, &mut col[j..], ops);
            }
            reflectors.push(v);
        }
        let r = CMatrix::from_fn(n, n, |i, c| if i <= c { cols[c][i] } else { C64::new(0.0, 0.0) });
        Ok(HouseholderQr { rows: m, reflectors, r })
    }

    pub fn r(&self) -> &CMatrix {
        &self.r
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// `y <- Q^H y` over the full length-`rows` vector.
    pub fn apply_qh(&self, y: &mut [C64], ops: &mut impl MulCounter) {
        debug_assert_eq!(y.len(), self.rows);
        for (j, v) in self.reflectors.iter().enumerate() {
            if !v.is_empty() {
                reflect(v, &mut y[j..], ops);
            }
        }
    }

    /// `y <- Q y` over the full length-`rows` vector.
    pub fn apply_q(&self, y: &mut [C64], ops: &mut impl MulCounter) {
        debug_assert_eq!(y.len(), self.rows);
        for (j, v) in self.reflectors.iter().enumerate().rev() {
            if !v.is_empty() {
                reflect(v, &mut y[j..], ops);
            }
        }
    }

    /// `R^{-1}`, failing when the relative singular-value bound of `R`
    /// falls below [`RANK_TOL`].
    pub fn checked_r_inverse(&self, ops: &mut impl MulCounter) -> Result<CMatrix> {
        let r = &self.r;
        let n = r.rows();
        let scale = r.frobenius_norm();
        ops.add((n * (n + 1) / 2) as u64);
        if n == 0 {
            return Ok(CMatrix::zeros(0, 0));
        }
        if (0..n).any(|i| r[(i, i)].norm() <= RANK_TOL * scale) {
            return Err(Error::ZfInfeasible("channel columns are linearly dependent".into()));
        }
        let inv = upper_triangular_inverse(r, ops);
        // sigma_min >= 1/||R^-1||_F and sigma_max <= ||R||_F
        let bound = 1.0 / (inv.frobenius_norm() * scale);
        ops.add((n * (n + 1) / 2) as u64);
        if !(bound >= RANK_TOL) {
            return Err(Error::ZfInfeasible(format!(
                "condition bound {bound:.3e} below cutoff {RANK_TOL:e}"
            )));
        }
        Ok(inv)
    }
}

/// `y <- (I - 2 v v^H) y` for unit `v`.
#[inline]
fn reflect(v: &[C64], y: &mut [C64], ops: &mut impl MulCounter) {
    let s = dot_conj(v, y, ops) * 2.0;
    ops.add(v.len() as u64);
    for (yi, vi) in y.iter_mut().zip(v) {
        *yi -= s * vi;
    }
}

/// Inverse of a nonsingular upper triangular matrix.
pub fn upper_triangular_inverse(r: &CMatrix, ops: &mut impl MulCounter) -> CMatrix {
    let n = r.rows();
    let mut inv = CMatrix::zeros(n, n);
    for c in 0..n {
        inv[(c, c)] = C64::new(1.0, 0.0) / r[(c, c)];
        ops.add(1);
        for i in (0..c).rev() {
            let mut acc = C64::new(0.0, 0.0);
            for l in i + 1..=c {
                acc += r[(i, l)] * inv[(l, c)];
            }
            inv[(i, c)] = -acc / r[(i, i)];
            ops.add((c - i + 1) as u64);
        }
    }
    inv
}

/// `U x` for upper triangular `U`, touching only the upper triangle.
pub fn upper_triangular_mul(u: &CMatrix, x: &[C64], ops: &mut impl MulCounter) -> Vec<C64> {
    let n = u.rows();
    ops.add((n * (n + 1) / 2) as u64);
    (0..n).map(|i| (i..n).map(|j| u[(i, j)] * x[j]).sum()).collect()
}

/// Zero-forcing filters for every column of a channel matrix at once.
///
/// With `H = Q R`, the pseudo-inverse is `R^{-1} Q^H`; row `k` is the ZF
/// receiver of user `k` and `[(H^H H)^{-1}]_{kk}` is the squared norm of row
/// `k` of `R^{-1}`.
#[derive(Debug, Clone)]
pub struct ZfBank {
    qr: HouseholderQr,
    r_inv: CMatrix,
    inv_gram_diag: Vec<f64>,
}

impl ZfBank {
    pub fn new(h: &CMatrix, ops: &mut impl MulCounter) -> Result<Self> {
        let qr = HouseholderQr::new(h, ops)?;
        let r_inv = qr.checked_r_inverse(ops)?;
        let n = r_inv.rows();
        ops.add((n * (n + 1) / 2) as u64);
        let inv_gram_diag = (0..n).map(|k| (k..n).map(|j| r_inv[(k, j)].norm_sqr()).sum()).collect();
        Ok(ZfBank { qr, r_inv, inv_gram_diag })
    }

    pub fn users(&self) -> usize {
        self.r_inv.rows()
    }

    /// ZF estimates `H^+ y` of all users.
    pub fn soft(&self, y: &[C64], ops: &mut impl MulCounter) -> Vec<C64> {
        let mut z = y.to_vec();
        self.qr.apply_qh(&mut z, ops);
        upper_triangular_mul(&self.r_inv, &z[..self.users()], ops)
    }

    /// ZF estimate of user `k` alone.
    pub fn soft_one(&self, y: &[C64], k: usize, ops: &mut impl MulCounter) -> C64 {
        let mut z = y.to_vec();
        self.qr.apply_qh(&mut z, ops);
        let n = self.users();
        ops.add((n - k) as u64);
        (k..n).map(|j| self.r_inv[(k, j)] * z[j]).sum()
    }

    /// `h_k^H P h_k = 1 / [(H^H H)^{-1}]_{kk}`, the post-processing SNR at unit `rho`.
    pub fn gain(&self, k: usize) -> f64 {
        1.0 / self.inv_gram_diag[k]
    }

    pub fn post_snr(&self, k: usize, rho: f64) -> f64 {
        rho * self.gain(k)
    }

    /// Row `k` of the pseudo-inverse.
    pub fn receiver_row(&self, k: usize, ops: &mut impl MulCounter) -> Vec<C64> {
        let n = self.users();
        let mut w = vec![C64::new(0.0, 0.0); self.qr.rows()];
        for j in k..n {
            w[j] = self.r_inv[(k, j)].conj();
        }
        self.qr.apply_q(&mut w, ops);
        w.iter().map(|z| z.conj()).collect()
    }
}
