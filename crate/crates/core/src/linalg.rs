//! Dense row-major linear algebra over `f64`.
//!
//! Products go through `matrixmultiply::dgemm` with explicit strides, so
//! transposed operands are never materialized. The ridge solve factors the
//! regularized Gram matrix with an unpivoted Cholesky decomposition and
//! applies two triangular solves; no inverse is ever formed.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut};

/// Column block width used when filling the upper triangle of a Gram matrix.
const GRAM_BLOCK: usize = 128;

/// Rows × columns, displayed as `RxC`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape(pub usize, pub usize);

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.0, self.1)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("{op}: incompatible shapes {left} and {right}")]
    DimensionMismatch {
        op: &'static str,
        left: Shape,
        right: Shape,
    },
    #[error("buffer of length {len} cannot hold a {shape} matrix")]
    BufferLength { shape: Shape, len: usize },
    #[error("expected a square matrix, got {0}")]
    NotSquare(Shape),
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("regularization must be finite and non-negative, got {0}")]
    InvalidLambda(f64),
}

/// Dense row-major matrix of `f64`.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut list = f.debug_list();
        for r in 0..self.rows {
            list.entry(&self.row(r));
        }
        list.finish()
    }
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if rows.checked_mul(cols) != Some(data.len()) {
            return Err(LinalgError::BufferLength {
                shape: Shape(rows, cols),
                len: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(LinalgError::DimensionMismatch {
                    op: "from_rows",
                    left: Shape(1, cols),
                    right: Shape(1, r.len()),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
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
    pub fn shape(&self) -> Shape {
        Shape(self.rows, self.cols)
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        // chunks_exact(0) panics, and a 0-column matrix still has rows
        (0..self.rows).map(move |r| self.row(r))
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn map_in_place(&mut self, f: impl Fn(f64) -> f64) {
        for v in &mut self.data {
            *v = f(*v);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Copies the first `n` rows.
    pub fn head_rows(&self, n: usize) -> Matrix {
        let n = n.min(self.rows);
        Matrix {
            rows: n,
            cols: self.cols,
            data: self.data[..n * self.cols].to_vec(),
        }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

/// Strided view handed to `dgemm`.
#[derive(Clone, Copy)]
struct Operand<'a> {
    data: &'a [f64],
    offset: usize,
    row_stride: isize,
    col_stride: isize,
}

impl<'a> Operand<'a> {
    fn plain(m: &'a Matrix) -> Self {
        Self {
            data: &m.data,
            offset: 0,
            row_stride: m.cols as isize,
            col_stride: 1,
        }
    }

    fn transposed(m: &'a Matrix) -> Self {
        Self {
            data: &m.data,
            offset: 0,
            row_stride: 1,
            col_stride: m.cols as isize,
        }
    }
}

/// `out[c_offset..] = a (m×k) · b (k×n)`, writing into a row-major buffer with
/// row stride `ldc`. Callers guarantee every addressed element is in bounds.
#[allow(clippy::too_many_arguments)]
fn gemm_into(
    m: usize,
    k: usize,
    n: usize,
    a: Operand<'_>,
    b: Operand<'_>,
    out: &mut [f64],
    c_offset: usize,
    ldc: usize,
) {
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        for r in 0..m {
            out[c_offset + r * ldc..c_offset + r * ldc + n].fill(0.0);
        }
        return;
    }
    let last_a = a.offset as isize + (m as isize - 1) * a.row_stride + (k as isize - 1) * a.col_stride;
    let last_b = b.offset as isize + (k as isize - 1) * b.row_stride + (n as isize - 1) * b.col_stride;
    let last_c = c_offset + (m - 1) * ldc + n - 1;
    assert!((last_a as usize) < a.data.len());
    assert!((last_b as usize) < b.data.len());
    assert!(last_c < out.len());
    // SAFETY: the asserts above bound the largest offset dgemm touches in
    // each operand; all strides are non-negative.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.data.as_ptr().add(a.offset),
            a.row_stride,
            a.col_stride,
            b.data.as_ptr().add(b.offset),
            b.row_stride,
            b.col_stride,
            0.0,
            out.as_mut_ptr().add(c_offset),
            ldc as isize,
            1,
        );
    }
}

fn mismatch(op: &'static str, a: &Matrix, b: &Matrix) -> LinalgError {
    LinalgError::DimensionMismatch {
        op,
        left: a.shape(),
        right: b.shape(),
    }
}

/// `a · b`.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix, LinalgError> {
    if a.cols != b.rows {
        return Err(mismatch("matmul", a, b));
    }
    let mut out = Matrix::zeros(a.rows, b.cols);
    gemm_into(
        a.rows,
        a.cols,
        b.cols,
        Operand::plain(a),
        Operand::plain(b),
        &mut out.data,
        0,
        b.cols,
    );
    Ok(out)
}

/// `aᵀ · b`.
pub fn matmul_tn(a: &Matrix, b: &Matrix) -> Result<Matrix, LinalgError> {
    if a.rows != b.rows {
        return Err(mismatch("matmul_tn", a, b));
    }
    let mut out = Matrix::zeros(a.cols, b.cols);
    gemm_into(
        a.cols,
        a.rows,
        b.cols,
        Operand::transposed(a),
        Operand::plain(b),
        &mut out.data,
        0,
        b.cols,
    );
    Ok(out)
}

/// `a · bᵀ`.
pub fn matmul_nt(a: &Matrix, b: &Matrix) -> Result<Matrix, LinalgError> {
    if a.cols != b.cols {
        return Err(mismatch("matmul_nt", a, b));
    }
    let mut out = Matrix::zeros(a.rows, b.rows);
    gemm_into(
        a.rows,
        a.cols,
        b.rows,
        Operand::plain(a),
        Operand::transposed(b),
        &mut out.data,
        0,
        b.rows,
    );
    Ok(out)
}

/// `hᵀ · h`, exactly symmetric as stored.
///
/// Only blocks on or above the diagonal are multiplied; the lower triangle is
/// then copied from the upper one.
pub fn gram(h: &Matrix) -> Matrix {
    let (n, j) = (h.rows, h.cols);
    let mut out = Matrix::zeros(j, j);
    for r0 in (0..j).step_by(GRAM_BLOCK) {
        let rw = GRAM_BLOCK.min(j - r0);
        for c0 in (r0..j).step_by(GRAM_BLOCK) {
            let cw = GRAM_BLOCK.min(j - c0);
            let a = Operand {
                offset: r0,
                ..Operand::transposed(h)
            };
            let b = Operand {
                offset: c0,
                ..Operand::plain(h)
            };
            gemm_into(rw, n, cw, a, b, &mut out.data, r0 * j + c0, j);
        }
    }
    for r in 1..j {
        for c in 0..r {
            out.data[r * j + c] = out.data[c * j + r];
        }
    }
    out
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
/// Only the lower triangle of `a` is read.
fn cholesky_factor(a: &Matrix) -> Result<Matrix, LinalgError> {
    let n = a.rows;
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let li = &l.data[i * n..i * n + j];
            let lj = &l.data[j * n..j * n + j];
            let s = a.data[i * n + j] - dot(li, lj);
            if i == j {
                if !s.is_finite() || s <= 0.0 {
                    return Err(LinalgError::NotPositiveDefinite { pivot: i });
                }
                l.data[i * n + i] = libm::sqrt(s);
            } else {
                l.data[i * n + j] = s / l.data[j * n + j];
            }
        }
    }
    Ok(l)
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `a · z = b` for symmetric positive definite `a`.
pub fn cholesky_solve(a: &Matrix, b: &Matrix) -> Result<Matrix, LinalgError> {
    if a.rows != a.cols {
        return Err(LinalgError::NotSquare(a.shape()));
    }
    if a.rows != b.rows {
        return Err(mismatch("cholesky_solve", a, b));
    }
    let l = cholesky_factor(a)?;
    let (n, k) = (b.rows, b.cols);
    let mut z = b.clone();

    // forward: L y = b, one row of right-hand sides at a time
    for i in 0..n {
        let (done, rest) = z.data.split_at_mut(i * k);
        let zi = &mut rest[..k];
        for p in 0..i {
            let lip = l.data[i * n + p];
            let zp = &done[p * k..(p + 1) * k];
            for (dst, src) in zi.iter_mut().zip(zp) {
                *dst -= lip * src;
            }
        }
        let d = l.data[i * n + i];
        for v in zi.iter_mut() {
            *v /= d;
        }
    }
    // backward: Lᵀ z = y
    for i in (0..n).rev() {
        let (head, tail) = z.data.split_at_mut((i + 1) * k);
        let zi = &mut head[i * k..];
        for p in i + 1..n {
            let lpi = l.data[p * n + i];
            let zp = &tail[(p - i - 1) * k..(p - i) * k];
            for (dst, src) in zi.iter_mut().zip(zp) {
                *dst -= lpi * src;
            }
        }
        let d = l.data[i * n + i];
        for v in zi.iter_mut() {
            *v /= d;
        }
    }
    Ok(z)
}

/// Closed-form ridge regression: solves `(hᵀh + λI) W = hᵀy`.
pub fn ridge_solve(h: &Matrix, y: &Matrix, lambda: f64) -> Result<Matrix, LinalgError> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(LinalgError::InvalidLambda(lambda));
    }
    if h.rows != y.rows {
        return Err(mismatch("ridge_solve", h, y));
    }
    let mut g = gram(h);
    let j = g.cols;
    for i in 0..j {
        g.data[i * j + i] += lambda;
    }
    let rhs = matmul_tn(h, y)?;
    cholesky_solve(&g, &rhs)
}

pub fn frobenius_norm(a: &Matrix) -> f64 {
    libm::sqrt(a.data.iter().map(|v| v * v).sum())
}

/// `acc + alpha · delta`.
pub fn add_scaled(acc: &Matrix, delta: &Matrix, alpha: f64) -> Result<Matrix, LinalgError> {
    let mut out = acc.clone();
    add_scaled_in_place(&mut out, delta, alpha)?;
    Ok(out)
}

/// `acc += alpha · delta`.
pub fn add_scaled_in_place(acc: &mut Matrix, delta: &Matrix, alpha: f64) -> Result<(), LinalgError> {
    if acc.shape() != delta.shape() {
        return Err(mismatch("add_scaled", acc, delta));
    }
    for (a, d) in acc.data.iter_mut().zip(&delta.data) {
        *a += alpha * d;
    }
    Ok(())
}
