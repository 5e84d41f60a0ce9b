//! Dense real matrices at desk scale, a cyclic Jacobi eigensolver and the
//! structured (Hankel / Toeplitz) builders the kernels are assembled from.

mod csv;
mod eigen;
mod structured;

pub use self::csv::{read_matrix_csv, write_matrix_csv, write_sequence_csv};
pub use self::eigen::{
    singular_numbers, sym_eigen, sym_eigen_with, SpectralDecomposition, DEFAULT_EIG_TOL,
    DEFAULT_MAX_SWEEPS,
};
pub use self::structured::{
    hankel_cross, hankel_square, HankelOperator, HankelProduct, HankelSquare, ToeplitzOperator,
};

use crate::error::{Error, Result};
use std::ops::{Index, IndexMut};

/// Largest dimension accepted by the eigensolver.
pub const MAX_DIM: usize = 512;

/// Dense row-major real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: data.len() });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        check_same_shape(self, other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect();
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }

    /// Leading `rows x cols` block.
    pub fn block(&self, row0: usize, col0: usize, rows: usize, cols: usize) -> Matrix {
        Matrix::from_fn(rows, cols, |i, j| self[(row0 + i, col0 + j)])
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

fn check_same_shape(a: &Matrix, b: &Matrix) -> Result<()> {
    if a.rows != b.rows {
        return Err(Error::DimensionMismatch { expected: a.rows, found: b.rows });
    }
    if a.cols != b.cols {
        return Err(Error::DimensionMismatch { expected: a.cols, found: b.cols });
    }
    Ok(())
}

/// Square matrix with `a(i,j) == a(j,i)` bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(Matrix);

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix(Matrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(Matrix::identity(n))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Matrix::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        SymMatrix(m)
    }

    /// Evaluates `f` on the upper triangle and mirrors it.
    pub fn from_upper_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        SymMatrix(m)
    }

    /// Accepts `m` if it is symmetric to within `tol * max|m|` and replaces
    /// each mirrored pair by its average.
    pub fn try_from_matrix(m: Matrix, tol: f64) -> Result<Self> {
        if m.rows != m.cols {
            return Err(Error::DimensionMismatch { expected: m.rows, found: m.cols });
        }
        let scale = m.max_abs().max(f64::MIN_POSITIVE);
        let n = m.rows;
        let mut out = m;
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (out[(i, j)], out[(j, i)]);
                let asym = (a - b).abs();
                if asym > tol * scale {
                    return Err(Error::NotSymmetric { row: i, col: j, asymmetry: asym });
                }
                let avg = 0.5 * (a + b);
                out[(i, j)] = avg;
                out[(j, i)] = avg;
            }
        }
        Ok(SymMatrix(out))
    }

    /// `(m + mᵗ) / 2`, for products whose symmetry is only up to rounding.
    pub fn symmetric_part(m: &Matrix) -> Result<Self> {
        if m.rows != m.cols {
            return Err(Error::DimensionMismatch { expected: m.rows, found: m.cols });
        }
        Ok(SymMatrix::from_upper_fn(m.rows, |i, j| 0.5 * (m[(i, j)] + m[(j, i)])))
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    /// Sets both `(i,j)` and `(j,i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.0[(i, j)] = v;
        self.0[(j, i)] = v;
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        SymMatrix(self.0.scale(s))
    }

    /// Principal submatrix on `indices` (0-based).
    pub fn principal(&self, indices: &[usize]) -> SymMatrix {
        SymMatrix::from_upper_fn(indices.len(), |i, j| self.get(indices[i], indices[j]))
    }

    /// Principal block on the contiguous range `start..start+len`.
    pub fn window(&self, start: usize, len: usize) -> SymMatrix {
        SymMatrix::from_upper_fn(len, |i, j| self.get(start + i, start + j))
    }
}

impl std::ops::Deref for SymMatrix {
    type Target = Matrix;
    fn deref(&self) -> &Matrix {
        &self.0
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch { expected: a.cols, found: b.rows });
    }
    let mut out = Matrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for k in 0..a.cols {
            let aik = a[(i, k)];
            if aik == 0.0 {
                continue;
            }
            let brow = b.row(k);
            let orow = &mut out.data[i * b.cols..(i + 1) * b.cols];
            for (o, bv) in orow.iter_mut().zip(brow) {
                *o += aik * bv;
            }
        }
    }
    Ok(out)
}

/// Which entries [`max_abs_diff`] compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffMask {
    All,
    OffDiagonal,
}

pub fn max_abs_diff(a: &Matrix, b: &Matrix, mask: DiffMask) -> Result<f64> {
    check_same_shape(a, b)?;
    let mut worst = 0.0f64;
    for i in 0..a.rows {
        for j in 0..a.cols {
            if mask == DiffMask::OffDiagonal && i == j {
                continue;
            }
            worst = worst.max((a[(i, j)] - b[(i, j)]).abs());
        }
    }
    Ok(worst)
}

/// Largest `max_j |a_{d}(j) - a_{d}(j')|` over the diagonals `d = i - j` of
/// a square matrix; zero exactly when the matrix is Toeplitz.
pub fn diagonal_constancy_residual(a: &Matrix) -> f64 {
    let n = a.rows.min(a.cols);
    let mut worst = 0.0f64;
    for d in -(n as i64 - 1)..(n as i64) {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            let j = i as i64 - d;
            if j < 0 || j >= n as i64 {
                continue;
            }
            let v = a[(i, j as usize)];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if hi >= lo {
            worst = worst.max(hi - lo);
        }
    }
    worst
}

/// Mean of each diagonal `d = i - j` for `d = 0..n`.
pub fn diagonal_means(a: &Matrix) -> Vec<f64> {
    let n = a.rows.min(a.cols);
    (0..n)
        .map(|d| {
            let vals: Vec<f64> = (d..n).map(|i| a[(i, i - d)]).collect();
            vals.iter().sum::<f64>() / vals.len() as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_small() {
        let a = Matrix::from_row_major(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = Matrix::from_row_major(2, 1, vec![1.0, -1.0]).unwrap();
        let c = matmul(&a, &b).unwrap();
        assert_eq!(c.as_slice(), &[-1.0, -1.0]);
        assert!(matmul(&b, &b).is_err());
    }

    #[test]
    fn max_abs_diff_self_is_zero() {
        let a = SymMatrix::from_upper_fn(5, |i, j| (i * 7 + j) as f64 * 0.3);
        assert_eq!(max_abs_diff(&a, &a, DiffMask::All).unwrap(), 0.0);
        let b = SymMatrix::identity(4);
        assert!(max_abs_diff(&a, &b, DiffMask::All).is_err());
    }

    #[test]
    fn off_diagonal_mask_ignores_diagonal() {
        let a = SymMatrix::from_diagonal(&[1.0, 2.0]);
        let b = SymMatrix::zeros(2);
        assert_eq!(max_abs_diff(&a, &b, DiffMask::OffDiagonal).unwrap(), 0.0);
        assert_eq!(max_abs_diff(&a, &b, DiffMask::All).unwrap(), 2.0);
    }

    #[test]
    fn rejects_asymmetric_input() {
        let m = Matrix::from_row_major(2, 2, vec![0.0, 1.0, -1.0, 0.0]).unwrap();
        assert!(matches!(SymMatrix::try_from_matrix(m, 1e-12), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn toeplitz_residual_detects_variation() {
        let t = Matrix::from_fn(4, 4, |i, j| (i as f64 - j as f64).powi(2));
        assert_eq!(diagonal_constancy_residual(&t), 0.0);
        let h = Matrix::from_fn(4, 4, |i, j| (i + j) as f64);
        assert!(diagonal_constancy_residual(&h) > 1.0);
    }
}
