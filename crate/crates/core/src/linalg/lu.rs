//! LU factorization with partial pivoting for small dense blocks.

use num_traits::Zero;

use super::Matrix;
use crate::error::{QbdError, Result};
use crate::scalar::{Real, Scalar};

/// Packed `PA = LU` factorization.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    n: usize,
    lu: Vec<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    /// Factorizes `a`. A pivot smaller than `PIVOT_RTOL * max|a|` is
    /// reported as [`QbdError::SingularMatrix`].
    pub fn factor(a: &Matrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(QbdError::DimensionMismatch(format!(
                "LU of non-square {}x{} matrix",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let scale = a.max_abs();
        let tol = <T::Real as Real>::PIVOT_RTOL * scale;
        let mut lu = a.as_slice().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();

        for k in 0..n {
            let (p, pmag) = (k..n)
                .map(|i| (i, lu[i * n + k].modulus()))
                .fold((k, T::Real::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if scale.is_zero() || pmag <= tol {
                return Err(QbdError::SingularMatrix(format!(
                    "pivot {pmag:e} at column {k} of {n}x{n} block (max entry {scale:e})"
                )));
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                if f.is_zero() {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[k * n + j];
                    lu[i * n + j] -= f * u;
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    /// Solves `A X = B`.
    pub fn solve(&self, b: &Matrix<T>) -> Result<Matrix<T>> {
        let n = self.n;
        if b.rows() != n {
            return Err(QbdError::DimensionMismatch(format!(
                "solve: {n}x{n} system with {}x{} right-hand side",
                b.rows(),
                b.cols()
            )));
        }
        let m = b.cols();
        let mut x = vec![T::zero(); n * m];
        for (i, &pi) in self.perm.iter().enumerate() {
            x[i * m..(i + 1) * m].copy_from_slice(b.row(pi));
        }
        // forward substitution, unit lower triangle
        for i in 0..n {
            for k in 0..i {
                let l = self.lu[i * n + k];
                if l.is_zero() {
                    continue;
                }
                for j in 0..m {
                    let v = x[k * m + j];
                    x[i * m + j] -= l * v;
                }
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let u = self.lu[i * n + k];
                if u.is_zero() {
                    continue;
                }
                for j in 0..m {
                    let v = x[k * m + j];
                    x[i * m + j] -= u * v;
                }
            }
            let d = self.lu[i * n + i];
            for j in 0..m {
                x[i * m + j] /= d;
            }
        }
        Matrix::new(n, m, x)
    }
}

/// Solves `A X = B`.
pub fn lu_solve<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    Lu::factor(a)?.solve(b)
}

/// Solves `X A = B` by transposition.
pub fn lu_solve_right<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    Ok(lu_solve(&a.transpose(), &b.transpose())?.transpose())
}

pub fn inverse<T: Scalar>(a: &Matrix<T>) -> Result<Matrix<T>> {
    lu_solve(a, &Matrix::identity(a.rows()))
}
