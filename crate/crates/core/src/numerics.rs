//! Dense real matrices and the linear-algebra primitives the factorization
//! code is written against.
//!
//! [`Matrix`] wraps an `ndarray::Array2<f64>`. Constructors validate that
//! every entry is finite; the arithmetic helpers assume conformable shapes
//! and panic otherwise (a shape error there is a programming error, not a
//! data error). Operations whose contract includes error reporting return
//! [`Result`].

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Range, Sub};

use ndarray::{s, Array2, Axis};

use crate::error::{PsdmfError, Result};

/// Condition estimate above which [`solve_spd`] adds a ridge.
pub const DEFAULT_COND_THRESHOLD: f64 = 1e12;

/// Relative ridge size: `eps = RIDGE_SCALE * trace(A) / rows(A)`.
pub const RIDGE_SCALE: f64 = 1e-10;

#[derive(Clone, PartialEq)]
pub struct Matrix {
    data: Array2<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix{:?} ", self.shape())?;
        f.debug_list().entries(self.data.rows()).finish()
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            data: Array2::zeros((rows, cols)),
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            data: Array2::from_elem((rows, cols), value),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            data: Array2::eye(n),
        }
    }

    pub fn diag(values: &[f64]) -> Self {
        Self {
            data: Array2::from_diag(&ndarray::arr1(values)),
        }
    }

    /// Builds a matrix from row-major entries, rejecting non-finite values.
    pub fn from_vec(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(PsdmfError::invalid(format!(
                "{} entries cannot fill a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        let data = Array2::from_shape_vec((rows, cols), entries)
            .map_err(|e| PsdmfError::invalid(e.to_string()))?;
        Self::from_array(data)
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut entries = Vec::with_capacity(n_rows * n_cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n_cols {
                return Err(PsdmfError::invalid(format!(
                    "row {i} has {} entries, expected {n_cols}",
                    row.len()
                )));
            }
            entries.extend_from_slice(row);
        }
        Self::from_vec(n_rows, n_cols, entries)
    }

    pub fn from_array(data: Array2<f64>) -> Result<Self> {
        let m = Self { data };
        m.ensure_finite("matrix construction")?;
        Ok(m)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        Self {
            data: Array2::from_shape_fn((rows, cols), |(i, j)| f(i, j)),
        }
    }

    pub(crate) fn wrap(data: Array2<f64>) -> Self {
        Self { data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows(), self.cols())
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_array(self) -> Array2<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.data.row(i).to_vec()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.data.column(j).to_vec()
    }

    /// Row-major copy of the entries.
    pub fn to_vec(&self) -> Vec<f64> {
        self.data.iter().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.data.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn ensure_finite(&self, context: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(PsdmfError::NonFinite {
                context: context.to_string(),
            })
        }
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sum(&self) -> f64 {
        self.data.sum()
    }

    pub fn matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(
            self.cols(),
            rhs.rows(),
            "matmul shape mismatch {:?} x {:?}",
            self.shape(),
            rhs.shape()
        );
        Self::wrap(self.data.dot(&rhs.data))
    }

    /// `selfᵀ · rhs` without materializing the transpose.
    pub fn tr_matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.rows(), rhs.rows(), "tr_matmul shape mismatch");
        Self::wrap(self.data.t().dot(&rhs.data))
    }

    /// `self · rhsᵀ` without materializing the transpose.
    pub fn matmul_tr(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols(), rhs.cols(), "matmul_tr shape mismatch");
        Self::wrap(self.data.dot(&rhs.data.t()))
    }

    pub fn t(&self) -> Matrix {
        Self::wrap(self.data.t().to_owned())
    }

    /// `selfᵀ · self`, symmetrized so the result is exactly symmetric.
    pub fn gram(&self) -> Matrix {
        symmetrize(self.tr_matmul(self))
    }

    /// `self · selfᵀ`, exactly symmetric.
    pub fn outer_gram(&self) -> Matrix {
        symmetrize(self.matmul_tr(self))
    }

    pub fn scale(&self, factor: f64) -> Matrix {
        Self::wrap(&self.data * factor)
    }

    pub fn hadamard(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.shape(), rhs.shape(), "hadamard shape mismatch");
        Self::wrap(&self.data * &rhs.data)
    }

    pub fn div_elem(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.shape(), rhs.shape(), "div_elem shape mismatch");
        Self::wrap(&self.data / &rhs.data)
    }

    pub fn sqrt_elem(&self) -> Matrix {
        Self::wrap(self.data.mapv(f64::sqrt))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Self::wrap(self.data.mapv(f))
    }

    pub fn add_assign(&mut self, rhs: &Matrix) {
        assert_eq!(self.shape(), rhs.shape(), "add shape mismatch");
        self.data += &rhs.data;
    }

    pub fn scaled_add_assign(&mut self, alpha: f64, rhs: &Matrix) {
        assert_eq!(self.shape(), rhs.shape(), "add shape mismatch");
        self.data.scaled_add(alpha, &rhs.data);
    }

    /// Stacks blocks side by side; all blocks must share a row count.
    pub fn hcat(blocks: &[&Matrix]) -> Result<Matrix> {
        concat(blocks, Axis(1), "hcat")
    }

    /// Stacks blocks vertically; all blocks must share a column count.
    pub fn vcat(blocks: &[&Matrix]) -> Result<Matrix> {
        concat(blocks, Axis(0), "vcat")
    }

    pub fn row_block(&self, range: Range<usize>) -> Matrix {
        Self::wrap(self.data.slice(s![range, ..]).to_owned())
    }

    pub fn col_block(&self, range: Range<usize>) -> Matrix {
        Self::wrap(self.data.slice(s![.., range]).to_owned())
    }

    pub fn block(&self, rows: Range<usize>, cols: Range<usize>) -> Matrix {
        Self::wrap(self.data.slice(s![rows, cols]).to_owned())
    }

    /// Copies the given columns, in order, into a new matrix.
    pub fn select_columns(&self, indices: &[usize]) -> Matrix {
        Self::wrap(self.data.select(Axis(1), indices))
    }

    pub fn set_col_block(&mut self, start: usize, block: &Matrix) {
        assert_eq!(self.rows(), block.rows());
        self.data
            .slice_mut(s![.., start..start + block.cols()])
            .assign(&block.data);
    }

    pub fn set_row_block(&mut self, start: usize, block: &Matrix) {
        assert_eq!(self.cols(), block.cols());
        self.data
            .slice_mut(s![start..start + block.rows(), ..])
            .assign(&block.data);
    }

    pub fn trace(&self) -> f64 {
        self.data.diag().sum()
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius_norm(self)
    }

    pub fn row_norms(&self) -> Vec<f64> {
        self.data
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect()
    }
}

fn symmetrize(m: Matrix) -> Matrix {
    let sym = (&m.data + &m.data.t()) * 0.5;
    Matrix::wrap(sym)
}

fn concat(blocks: &[&Matrix], axis: Axis, op: &'static str) -> Result<Matrix> {
    let first = blocks
        .first()
        .ok_or_else(|| PsdmfError::invalid(format!("{op} of zero blocks")))?;
    for b in &blocks[1..] {
        let mismatch = match axis {
            Axis(1) => b.rows() != first.rows(),
            _ => b.cols() != first.cols(),
        };
        if mismatch {
            return Err(PsdmfError::ShapeMismatch {
                op,
                left: first.shape(),
                right: b.shape(),
            });
        }
    }
    let views: Vec<_> = blocks.iter().map(|b| b.data.view()).collect();
    let data =
        ndarray::concatenate(axis, &views).map_err(|e| PsdmfError::invalid(e.to_string()))?;
    Ok(Matrix::wrap(data))
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.data[idx]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut f64 {
        &mut self.data[idx]
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.shape(), rhs.shape(), "add shape mismatch");
        Matrix::wrap(&self.data + &rhs.data)
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.shape(), rhs.shape(), "sub shape mismatch");
        Matrix::wrap(&self.data - &rhs.data)
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        self.matmul(rhs)
    }
}

impl Mul<f64> for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: f64) -> Matrix {
        self.scale(rhs)
    }
}

/// Positive part: negative entries replaced by zero.
pub fn split_pos(h: &Matrix) -> Result<Matrix> {
    h.ensure_finite("split_pos input")?;
    Ok(h.map(|v| (v.abs() + v) * 0.5))
}

/// Negative part, stored as magnitudes: positive entries replaced by zero and
/// negative entries by their absolute value.
pub fn split_neg(h: &Matrix) -> Result<Matrix> {
    h.ensure_finite("split_neg input")?;
    Ok(h.map(|v| (v.abs() - v) * 0.5))
}

pub fn frobenius_norm(h: &Matrix) -> f64 {
    h.frobenius_norm_sq().sqrt()
}

/// Sum over rows of each row's Euclidean norm.
pub fn l21_norm(w: &Matrix) -> f64 {
    w.row_norms().into_iter().sum()
}

/// `tr(V·L·Vᵀ)` computed as the sum of `(V·L) ⊙ V`, never forming the
/// square product.
pub fn trace_vlvt(v: &Matrix, l: &Matrix) -> Result<f64> {
    if v.cols() != l.rows() || l.rows() != l.cols() {
        return Err(PsdmfError::ShapeMismatch {
            op: "trace_vlvt",
            left: v.shape(),
            right: l.shape(),
        });
    }
    let vl = v.matmul(l);
    Ok(vl.data.iter().zip(v.data.iter()).map(|(a, b)| a * b).sum())
}

#[derive(Clone, Debug)]
pub struct SpdSolution {
    pub x: Matrix,
    /// True when a ridge was added to the system matrix.
    pub regularized: bool,
    /// The ridge that was added (0 when unregularized).
    pub ridge: f64,
}

/// Solves `A·X = B` for symmetric positive (semi-)definite `A` by Cholesky.
///
/// If the factorization fails or the condition estimate exceeds
/// [`DEFAULT_COND_THRESHOLD`], solves `(A + εI)·X = B` instead with
/// `ε = 1e-10 · trace(A) / rows(A)`, growing ε tenfold until the
/// factorization succeeds.
pub fn solve_spd(a: &Matrix, b: &Matrix) -> Result<SpdSolution> {
    solve_spd_with(a, b, DEFAULT_COND_THRESHOLD)
}

pub fn solve_spd_with(a: &Matrix, b: &Matrix, cond_threshold: f64) -> Result<SpdSolution> {
    let n = a.rows();
    if n != a.cols() || b.rows() != n {
        return Err(PsdmfError::ShapeMismatch {
            op: "solve_spd",
            left: a.shape(),
            right: b.shape(),
        });
    }
    a.ensure_finite("solve_spd system matrix")?;
    b.ensure_finite("solve_spd right-hand side")?;
    if n == 0 {
        return Ok(SpdSolution {
            x: b.clone(),
            regularized: false,
            ridge: 0.0,
        });
    }
    let scale = a.data.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            if (a[(i, j)] - a[(j, i)]).abs() > 1e-9 * scale {
                return Err(PsdmfError::NotSymmetric {
                    context: "solve_spd",
                });
            }
        }
    }

    if let Some(chol) = cholesky(&a.data) {
        if condition_estimate(&chol) <= cond_threshold {
            return Ok(SpdSolution {
                x: Matrix::wrap(cholesky_solve(&chol, &b.data)),
                regularized: false,
                ridge: 0.0,
            });
        }
    }

    let mean_diag = a.trace() / n as f64;
    let mut ridge = if mean_diag > 0.0 {
        RIDGE_SCALE * mean_diag
    } else {
        RIDGE_SCALE
    };
    for _ in 0..24 {
        let mut shifted = a.data.clone();
        shifted.diag_mut().mapv_inplace(|d| d + ridge);
        if let Some(chol) = cholesky(&shifted) {
            let x = Matrix::wrap(cholesky_solve(&chol, &b.data));
            x.ensure_finite("solve_spd solution")?;
            return Ok(SpdSolution {
                x,
                regularized: true,
                ridge,
            });
        }
        ridge *= 10.0;
    }
    Err(PsdmfError::Invariant(
        "solve_spd: system matrix is not positive semi-definite".into(),
    ))
}

/// Lower-triangular Cholesky factor, or `None` on a non-positive pivot.
fn cholesky(a: &Array2<f64>) -> Option<Array2<f64>> {
    let n = a.nrows();
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !d.is_finite() || d <= 0.0 {
            return None;
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Some(l)
}

/// `(max Lᵢᵢ / min Lᵢᵢ)²`, a cheap lower estimate of cond₂(A).
fn condition_estimate(l: &Array2<f64>) -> f64 {
    let (lo, hi) = l
        .diag()
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &d| {
            (lo.min(d), hi.max(d))
        });
    (hi / lo).powi(2)
}

fn cholesky_solve(l: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let n = l.nrows();
    let mut x = b.clone();
    for c in 0..x.ncols() {
        // forward: L y = b
        for i in 0..n {
            let mut s = x[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
        // backward: Lᵀ x = y
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for k in (i + 1)..n {
                s -= l[(k, i)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    x
}
