//! Small dense linear algebra: row-major matrices, Cholesky variants,
//! triangular solves and a Jacobi eigenvalue routine.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim(format!(
                "buffer of length {} cannot hold {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::dim(format!(
                    "row {i} has width {} but row 0 has width {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn map<U: Real>(&self, f: impl Fn(T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `self * x`.
    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `selfᵀ * x`.
    pub fn matvec_t(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi != T::zero() {
                axpy(xi, self.row(i), &mut out);
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::dim(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a != T::zero() {
                    let (src, dst) = (other.row(k), i);
                    let row = out.row_mut(dst);
                    axpy(a, src, row);
                }
            }
        }
        Ok(out)
    }

    /// Returns `selfᵀ diag(w) self` (symmetric, `cols x cols`).
    pub fn weighted_gram(&self, w: &[T]) -> Self {
        debug_assert_eq!(w.len(), self.rows);
        let n = self.cols;
        let mut out = Self::zeros(n, n);
        for (i, &wi) in w.iter().enumerate() {
            if wi == T::zero() {
                continue;
            }
            let r = self.row(i);
            for a in 0..n {
                let s = wi * r[a];
                if s == T::zero() {
                    continue;
                }
                let dst = &mut out.data[a * n + a..(a + 1) * n];
                axpy(s, &r[a..], dst);
            }
        }
        out.symmetrize_from_upper();
        out
    }

    fn symmetrize_from_upper(&mut self) {
        let n = self.rows;
        for i in 0..n {
            for j in 0..i {
                self.data[i * n + j] = self.data[j * n + i];
            }
        }
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |m, &v| if v.abs() > m { v.abs() } else { m })
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in 0..i {
                if (self[(i, j)] - self[(j, i)]).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [T::zero(); 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (&x, &y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

/// `y += a * x`
#[inline]
pub fn axpy<T: Real>(a: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn norm_inf<T: Real>(x: &[T]) -> T {
    x.iter()
        .fold(T::zero(), |m, &v| if v.abs() > m { v.abs() } else { m })
}

/// Lower Cholesky factor `L` with `A = L Lᵀ`. Fails when a pivot is not
/// strictly positive.
pub fn cholesky<T: Real>(a: &Matrix<T>) -> Result<Matrix<T>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::dim("cholesky needs a square matrix"));
    }
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let s = a[(i, j)] - dot(&l.row(i)[..j], &l.row(j)[..j]);
            if i == j {
                if !(s > T::zero()) || !s.is_finite() {
                    return Err(Error::Numerical(format!(
                        "matrix not positive definite at pivot {i}"
                    )));
                }
                l[(i, i)] = s.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// Cholesky with escalating diagonal jitter. Returns the factor and the
/// jitter that was finally added.
pub fn cholesky_jittered<T: Real>(a: &Matrix<T>, initial: T) -> Result<(Matrix<T>, T)> {
    if let Ok(l) = cholesky(a) {
        return Ok((l, T::zero()));
    }
    let scale = (a.trace() / T::from_usize_lossy(a.rows().max(1))).max(T::one());
    let mut jitter = initial.max(T::epsilon() * scale);
    for _ in 0..12 {
        let mut b = a.clone();
        for i in 0..b.rows() {
            b[(i, i)] += jitter;
        }
        if let Ok(l) = cholesky(&b) {
            return Ok((l, jitter));
        }
        jitter *= T::lit(10.0);
    }
    Err(Error::Numerical(
        "cholesky failed even with diagonal jitter".into(),
    ))
}

/// Solves `L y = b` in place for lower-triangular `L`.
pub fn forward_solve<T: Real>(l: &Matrix<T>, b: &mut [T]) {
    for i in 0..l.rows() {
        let s = b[i] - dot(&l.row(i)[..i], &b[..i]);
        b[i] = s / l[(i, i)];
    }
}

/// Solves `Lᵀ x = y` in place for lower-triangular `L`.
pub fn backward_solve_t<T: Real>(l: &Matrix<T>, y: &mut [T]) {
    let n = l.rows();
    for i in (0..n).rev() {
        let xi = y[i] / l[(i, i)];
        y[i] = xi;
        let row = l.row(i);
        for k in 0..i {
            y[k] -= row[k] * xi;
        }
    }
}

/// Solves `L Lᵀ x = b` in place.
pub fn chol_solve<T: Real>(l: &Matrix<T>, b: &mut [T]) {
    forward_solve(l, b);
    backward_solve_t(l, b);
}

/// Inverse of a lower-triangular matrix.
pub fn lower_inverse<T: Real>(l: &Matrix<T>) -> Matrix<T> {
    let n = l.rows();
    let mut inv = Matrix::zeros(n, n);
    let mut e = vec![T::zero(); n];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = T::zero());
        e[j] = T::one();
        forward_solve(l, &mut e);
        for i in j..n {
            inv[(i, j)] = e[i];
        }
    }
    inv
}

/// Pivoted (incomplete) Cholesky: returns `L` (`n x r`, rows in the original
/// order) such that `A ≈ L Lᵀ`. Stops once the largest remaining diagonal
/// falls below `rel_tol * max_i A_ii`.
pub fn pivoted_cholesky<T: Real>(a: &Matrix<T>, rel_tol: T) -> Matrix<T> {
    let n = a.rows();
    let mut diag: Vec<T> = (0..n).map(|i| a[(i, i)]).collect();
    let max_diag = diag.iter().fold(T::zero(), |m, &v| m.max(v));
    let stop = rel_tol * max_diag;
    // columns stored as rows of `cols` for contiguous access
    let mut cols: Vec<Vec<T>> = Vec::new();
    let mut used = vec![false; n];
    while cols.len() < n {
        let (mut piv, mut best) = (usize::MAX, T::neg_infinity());
        for i in 0..n {
            if !used[i] && diag[i] > best {
                best = diag[i];
                piv = i;
            }
        }
        if piv == usize::MAX || !(best > stop) || best <= T::zero() {
            break;
        }
        used[piv] = true;
        let root = best.sqrt();
        let mut col = vec![T::zero(); n];
        for i in 0..n {
            if used[i] && i != piv {
                continue;
            }
            let mut s = a[(i, piv)];
            for c in &cols {
                s -= c[i] * c[piv];
            }
            col[i] = s / root;
        }
        col[piv] = root;
        for i in 0..n {
            if !used[i] {
                diag[i] -= col[i] * col[i];
            }
        }
        diag[piv] = T::zero();
        cols.push(col);
    }
    let r = cols.len();
    Matrix::from_fn(n, r, |i, j| cols[j][i])
}

/// Solves a general square system by Gaussian elimination with partial
/// pivoting. Returns `None` for (numerically) singular matrices.
pub fn solve_dense<T: Real>(a: &Matrix<T>, b: &[T]) -> Option<Vec<T>> {
    let n = a.rows();
    let mut m = a.clone();
    let mut x = b.to_vec();
    let scale = m.max_abs().max(T::min_positive_value());
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if m[(r, col)].abs() > m[(piv, col)].abs() {
                piv = r;
            }
        }
        if m[(piv, col)].abs() <= scale * T::lit(1e-12) {
            return None;
        }
        if piv != col {
            for j in 0..n {
                let t = m[(col, j)];
                m[(col, j)] = m[(piv, j)];
                m[(piv, j)] = t;
            }
            x.swap(col, piv);
        }
        let p = m[(col, col)];
        for r in col + 1..n {
            let f = m[(r, col)] / p;
            if f == T::zero() {
                continue;
            }
            for j in col..n {
                let v = m[(col, j)];
                m[(r, j)] -= f * v;
            }
            let xc = x[col];
            x[r] -= f * xc;
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in i + 1..n {
            s -= m[(i, j)] * x[j];
        }
        x[i] = s / m[(i, i)];
    }
    Some(x)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues<T: Real>(a: &Matrix<T>) -> Vec<T> {
    let n = a.rows();
    let mut m = a.clone();
    for _sweep in 0..100 {
        let mut off = T::zero();
        for i in 0..n {
            for j in 0..i {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        let total: T = m.as_slice().iter().map(|&v| v * v).sum();
        if off <= T::epsilon() * T::epsilon() * total {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<T> = (0..n).map(|i| m[(i, i)]).collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    ev
}
