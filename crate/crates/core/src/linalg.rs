//! Small dense linear algebra. Every matrix in the crate is row-major.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_diag(diag: &[S]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds from a row-major buffer.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<S>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "buffer of length {} cannot fill {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds from nested rows; all rows must share one length.
    pub fn from_rows<R: AsRef<[S]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n * m);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != m {
                return Err(Error::ShapeMismatch(format!(
                    "row {i} has {} entries, expected {m}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: n, cols: m, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [S] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<S> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<S>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (l, &a) in a_row.iter().enumerate() {
                if a == S::zero() {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(l)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn mat_vec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(self.cols, v.len(), "mat_vec dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        }
    }

    pub fn scale(&self, c: S) -> Self {
        self.map(|x| x * c)
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> S {
        self.data.iter().map(|&x| x * x).sum::<S>().sqrt()
    }

    pub fn max_abs(&self) -> S {
        self.data.iter().fold(S::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn trace(&self) -> S {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn diagonal(&self) -> Vec<S> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn is_lower_triangular(&self) -> bool {
        (0..self.rows).all(|i| ((i + 1)..self.cols).all(|j| self[(i, j)] == S::zero()))
    }

    /// Symmetric to within `tol` relative to the largest entry.
    pub fn is_symmetric(&self, tol: S) -> bool {
        if !self.is_square() {
            return false;
        }
        let scale = self.max_abs().max(S::one());
        (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol * scale))
    }

    /// `(A + A') / 2`.
    pub fn symmetrized(&self) -> Self {
        let half = S::lit(0.5);
        Self::from_fn(self.rows, self.cols, |i, j| half * (self[(i, j)] + self[(j, i)]))
    }

    /// `self * B * self'`.
    pub fn sandwich(&self, b: &Self) -> Self {
        self.matmul(b).matmul(&self.transpose())
    }

    pub fn cast<T: Scalar>(&self) -> Matrix<T> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| T::lit(x.to_f64_lossy())).collect(),
        }
    }

    /// Integer power by repeated squaring.
    pub fn pow(&self, mut e: usize) -> Self {
        assert!(self.is_square());
        let mut base = self.clone();
        let mut acc = Self::identity(self.rows);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.matmul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.matmul(&base);
            }
        }
        acc
    }
}

impl<S> Index<(usize, usize)> for Matrix<S> {
    type Output = S;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> IndexMut<(usize, usize)> for Matrix<S> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

/// Lower Cholesky factor `C` with `C C' = sigma` and a strictly positive diagonal.
///
/// Only the lower triangle of `sigma` is read. A pivot at or below
/// `1e-12 * max(diag(sigma))` is reported as `NotPositiveDefinite`.
pub fn cholesky_lower<S: Scalar>(sigma: &Matrix<S>) -> Result<Matrix<S>> {
    if !sigma.is_square() {
        return Err(Error::ShapeMismatch("Cholesky input must be square".into()));
    }
    let n = sigma.nrows();
    let max_diag = sigma.diagonal().into_iter().fold(S::zero(), |m, d| m.max(d));
    let floor = S::lit(1e-12) * max_diag;
    let mut c = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = sigma[(j, j)];
        for l in 0..j {
            d -= c[(j, l)] * c[(j, l)];
        }
        if !(d > floor) || max_diag <= S::zero() {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let djj = d.sqrt();
        c[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = sigma[(i, j)];
            for l in 0..j {
                s -= c[(i, l)] * c[(j, l)];
            }
            c[(i, j)] = s / djj;
        }
    }
    Ok(c)
}

/// Solves `L L' x = b` in place given the lower Cholesky factor.
pub fn cholesky_solve_in_place<S: Scalar>(l: &Matrix<S>, b: &mut [S]) {
    let n = l.nrows();
    debug_assert_eq!(b.len(), n);
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * b[k];
        }
        b[i] = s / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * b[k];
        }
        b[i] = s / l[(i, i)];
    }
}

/// Forward substitution `L y = b` in place.
pub fn forward_substitute_in_place<S: Scalar>(l: &Matrix<S>, b: &mut [S]) {
    for i in 0..l.nrows() {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * b[k];
        }
        b[i] = s / l[(i, i)];
    }
}

/// Solves a symmetric positive definite system. Failure means the system is
/// numerically singular.
pub fn solve_spd<S: Scalar>(a: &Matrix<S>, b: &[S]) -> Result<Vec<S>> {
    let l = cholesky_lower(a).map_err(|_| Error::SingularSystem)?;
    let mut x = b.to_vec();
    cholesky_solve_in_place(&l, &mut x);
    Ok(x)
}

/// Solves a general square system by Gaussian elimination with partial pivoting.
pub fn solve<S: Scalar>(a: &Matrix<S>, b: &[S]) -> Result<Vec<S>> {
    if !a.is_square() || a.nrows() != b.len() {
        return Err(Error::ShapeMismatch("solve needs square A and matching b".into()));
    }
    let n = a.nrows();
    let mut m = a.clone();
    let mut x = b.to_vec();
    let scale = m.max_abs();
    let tiny = S::epsilon() * S::from_usize_lossy(n) * scale;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&r1, &r2| {
                m[(r1, col)]
                    .abs()
                    .partial_cmp(&m[(r2, col)].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(col);
        if !(m[(piv, col)].abs() > tiny) {
            return Err(Error::SingularSystem);
        }
        if piv != col {
            for j in 0..n {
                let t = m[(col, j)];
                m[(col, j)] = m[(piv, j)];
                m[(piv, j)] = t;
            }
            x.swap(col, piv);
        }
        let d = m[(col, col)];
        for r in (col + 1)..n {
            let f = m[(r, col)] / d;
            if f == S::zero() {
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
        for j in (i + 1)..n {
            s -= m[(i, j)] * x[j];
        }
        x[i] = s / m[(i, i)];
    }
    Ok(x)
}

/// Inverse of a general square matrix, column by column.
pub fn inverse<S: Scalar>(a: &Matrix<S>) -> Result<Matrix<S>> {
    let n = a.nrows();
    let mut inv = Matrix::zeros(n, n);
    let mut e = vec![S::zero(); n];
    for j in 0..n {
        e.iter_mut().for_each(|x| *x = S::zero());
        e[j] = S::one();
        let col = solve(a, &e)?;
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    Ok(inv)
}

/// Spectral radius from Gelfand's formula, `rho = lim ||A^(2^m)||^(2^-m)`,
/// evaluated by 60 normalized squarings.
pub fn spectral_radius<S: Scalar>(a: &Matrix<S>) -> S {
    assert!(a.is_square());
    let mut b = a.clone();
    let mut log_scale = S::zero();
    let mut weight = S::one();
    for _ in 0..60 {
        let n = b.frobenius_norm();
        if n == S::zero() || !n.is_finite() {
            return if n == S::zero() { S::zero() } else { S::nan() };
        }
        b = b.scale(n.recip());
        log_scale += weight * n.ln();
        weight *= S::lit(0.5);
        b = b.matmul(&b);
    }
    let n = b.frobenius_norm();
    if n == S::zero() {
        return S::zero();
    }
    (log_scale + weight * n.ln()).exp()
}

/// Householder QR of a tall matrix, kept in compact form for projections.
#[derive(Debug, Clone)]
pub struct HouseholderQr<S> {
    qr: Matrix<S>,
    betas: Vec<S>,
}

impl<S: Scalar> HouseholderQr<S> {
    /// Factorizes `w` (rows >= cols). Reports `SingularDesign` when a column is
    /// numerically dependent on the previous ones.
    pub fn new(w: &Matrix<S>) -> Result<Self> {
        let (m, n) = (w.nrows(), w.ncols());
        if m < n {
            return Err(Error::SampleTooShort {
                needed: n,
                available: m,
            });
        }
        let mut qr = w.clone();
        let mut betas = Vec::with_capacity(n);
        let col_scale = w.max_abs().max(S::min_positive_value());
        for k in 0..n {
            let norm = (k..m).map(|i| qr[(i, k)] * qr[(i, k)]).sum::<S>().sqrt();
            if norm <= S::lit(1e-12) * col_scale * S::from_usize_lossy(m).sqrt() {
                return Err(Error::SingularDesign);
            }
            let alpha = if qr[(k, k)] > S::zero() { -norm } else { norm };
            // v = x - alpha e1, stored in place with v_k in the diagonal slot
            qr[(k, k)] -= alpha;
            let vtv = (k..m).map(|i| qr[(i, k)] * qr[(i, k)]).sum::<S>();
            let beta = S::lit(2.0) / vtv;
            for j in (k + 1)..n {
                let dot = (k..m).map(|i| qr[(i, k)] * qr[(i, j)]).sum::<S>();
                let f = beta * dot;
                for i in k..m {
                    let v = qr[(i, k)];
                    qr[(i, j)] -= f * v;
                }
            }
            betas.push(beta);
        }
        Ok(Self { qr, betas })
    }

    fn apply_reflector(&self, k: usize, x: &mut [S]) {
        let m = self.qr.nrows();
        let dot = (k..m).map(|i| self.qr[(i, k)] * x[i]).sum::<S>();
        let f = self.betas[k] * dot;
        for i in k..m {
            x[i] -= f * self.qr[(i, k)];
        }
    }

    /// Residual of `v` after projecting on the column space: `(I - Q Q') v`.
    pub fn project_out(&self, v: &[S]) -> Vec<S> {
        let n = self.betas.len();
        let mut x = v.to_vec();
        for k in 0..n {
            self.apply_reflector(k, &mut x);
        }
        for xi in x.iter_mut().take(n) {
            *xi = S::zero();
        }
        for k in (0..n).rev() {
            self.apply_reflector(k, &mut x);
        }
        x
    }
}

pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn cholesky_identity() {
        let c = cholesky_lower(&Matrix::<f64>::identity(3)).unwrap();
        assert_eq!(c, Matrix::identity(3));
    }

    #[test]
    fn cholesky_hand_example() {
        let c = cholesky_lower(&m(&[&[4.0, 2.0], &[2.0, 2.0]])).unwrap();
        assert_eq!(c, m(&[&[2.0, 0.0], &[1.0, 1.0]]));
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let err = cholesky_lower(&m(&[&[1.0, 2.0], &[2.0, 1.0]])).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { pivot: 1 }));
    }

    #[test]
    fn cholesky_in_f32() {
        let s: Matrix<f32> = Matrix::from_rows(&[[4.0f32, 2.0], [2.0, 2.0]]).unwrap();
        let c = cholesky_lower(&s).unwrap();
        assert!((c[(1, 0)] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn solve_matches_known_solution() {
        let a = m(&[&[0.0, 2.0, 1.0], &[1.0, 1.0, 0.0], &[3.0, 0.0, 1.0]]);
        let x = [1.0, -2.0, 0.5];
        let b = a.mat_vec(&x);
        let got = solve(&a, &b).unwrap();
        for (g, e) in got.iter().zip(x) {
            assert!((g - e).abs() < 1e-12);
        }
    }

    #[test]
    fn spectral_radius_of_triangular() {
        let a = m(&[&[0.2, 0.0], &[-0.764, 0.985]]);
        assert!((spectral_radius(&a) - 0.985).abs() < 1e-9);
        let rot = m(&[&[0.0, -0.9], &[0.9, 0.0]]);
        assert!((spectral_radius(&rot) - 0.9).abs() < 1e-9);
        assert_eq!(spectral_radius(&Matrix::<f64>::zeros(2, 2)), 0.0);
        // nilpotent
        assert!(spectral_radius(&m(&[&[0.0, 5.0], &[0.0, 0.0]])) < 1e-9);
    }

    #[test]
    fn householder_projection_annihilates_columns() {
        let w = Matrix::from_fn(12, 3, |i, j| {
            ((i * 7 + j * 3) % 5) as f64 + if j == 0 { 1.0 } else { 0.1 * i as f64 }
        });
        let qr = HouseholderQr::new(&w).unwrap();
        let v: Vec<f64> = (0..12).map(|i| (i as f64).sin()).collect();
        let r = qr.project_out(&v);
        for j in 0..3 {
            assert!(dot(&w.column(j), &r).abs() < 1e-10);
        }
    }

    #[test]
    fn householder_detects_collinearity() {
        let w = Matrix::from_fn(10, 2, |i, _| i as f64);
        assert_eq!(HouseholderQr::new(&w).unwrap_err(), Error::SingularDesign);
    }

    #[test]
    fn pow_matches_repeated_product() {
        let a = m(&[&[0.7, 0.1], &[0.4, 0.6]]);
        let p = a.pow(5);
        let mut q = Matrix::identity(2);
        for _ in 0..5 {
            q = q.matmul(&a);
        }
        assert!(p.sub(&q).max_abs() < 1e-14);
    }
}
