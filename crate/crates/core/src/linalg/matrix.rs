use std::fmt;
use std::ops::{Index, IndexMut};

use num_traits::Zero;

use crate::error::{QbdError, Result};
use crate::scalar::{Real, Scalar};

/// Dense row-major matrix with at least one row and one column.
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    /// Builds a matrix from row-major data, rejecting empty shapes and
    /// non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(QbdError::DimensionMismatch(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(QbdError::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|x| !x.finite()) {
            return Err(QbdError::NonFinite { row: k / cols, col: k % cols });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        if let Some(i) = rows.iter().position(|r| r.as_ref().len() != ncols) {
            return Err(QbdError::DimensionMismatch(format!(
                "ragged rows: row {i} has {} entries, row 0 has {ncols}",
                rows[i].as_ref().len()
            )));
        }
        let data = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Self::new(nrows, ncols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix");
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![T::one(); n])
    }

    pub fn from_diagonal(d: &[T]) -> Self {
        let n = d.len();
        let mut m = Self::zeros(n, n);
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    pub fn row_vector(v: &[T]) -> Result<Self> {
        Self::new(1, v.len(), v.to_vec())
    }

    pub fn col_vector(v: &[T]) -> Result<Self> {
        Self::new(v.len(), 1, v.to_vec())
    }

    pub fn ones_col(n: usize) -> Self {
        Self { rows: n, cols: 1, data: vec![T::one(); n] }
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
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut out = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.push(self[(i, j)]);
            }
        }
        Self { rows: self.cols, cols: self.rows, data: out }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|x| x * c)
    }

    pub fn neg(&self) -> Self {
        self.map(|x| -x)
    }

    fn check_same_shape(&self, other: &Self, op: &str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(QbdError::DimensionMismatch(format!(
                "{op}: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "add")?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "sub")?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(QbdError::DimensionMismatch(format!(
                "matmul: {}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = vec![T::zero(); self.rows * other.cols];
        for i in 0..self.rows {
            let orow = &mut out[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.is_zero() {
                    continue;
                }
                for (o, &b) in orow.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(Self { rows: self.rows, cols: other.cols, data: out })
    }

    /// `self - s * I`.
    pub fn sub_scaled_identity(&self, s: T) -> Self {
        assert!(self.is_square(), "sub_scaled_identity on non-square matrix");
        let mut m = self.clone();
        for i in 0..self.rows {
            m[(i, i)] -= s;
        }
        m
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T::Real {
        self.data.iter().fold(T::Real::zero(), |m, x| {
            let a = x.modulus();
            if a > m {
                a
            } else {
                m
            }
        })
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> T::Real {
        (0..self.rows)
            .map(|i| self.row(i).iter().fold(T::Real::zero(), |acc, x| acc + x.modulus()))
            .fold(T::Real::zero(), |m, r| if r > m { r } else { m })
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.rows).map(|i| self.row(i).iter().fold(T::zero(), |a, &b| a + b)).collect()
    }

    /// Sum of all entries.
    pub fn sum(&self) -> T {
        self.data.iter().fold(T::zero(), |a, &b| a + b)
    }

    /// Converts a real matrix into another field with the same real type.
    pub fn lift<U: Scalar<Real = T>>(&self) -> Matrix<U>
    where
        T: Real,
    {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| U::from_real(x)).collect() }
    }

    /// Entrywise real parts.
    pub fn re(&self) -> Matrix<T::Real> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x.re()).collect() }
    }

    /// Replaces column `j` with `col` (an n x 1 matrix).
    pub fn with_column(&self, j: usize, col: &Self) -> Result<Self> {
        if col.shape() != (self.rows, 1) || j >= self.cols {
            return Err(QbdError::DimensionMismatch(format!(
                "with_column: column {j} of {}x{} replaced by {}x{}",
                self.rows, self.cols, col.rows, col.cols
            )));
        }
        let mut m = self.clone();
        for i in 0..self.rows {
            m[(i, j)] = col.data[i];
        }
        Ok(m)
    }
}

/// Infinity norm of `a - b`.
pub fn inf_norm_diff<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<T::Real> {
    Ok(a.sub(b)?.inf_norm())
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix{}x{}[", self.rows, self.cols)?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{:?}", self.data[i * self.cols + j])?;
            }
        }
        write!(f, "]")
    }
}
