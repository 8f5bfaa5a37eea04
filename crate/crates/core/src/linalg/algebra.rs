//! The arithmetic the level recursions are written against.
//!
//! Three carriers implement [`BlockAlgebra`]:
//! plain matrices (values only), [`DerivBundle`]s (values plus θ-partials)
//! and [`SDual`] pairs (values plus the derivative with respect to the
//! transform variable `s`). `SDual<DerivBundle<T>>` carries the mixed
//! θ/s derivatives needed for sensitivities of expected passage times.

use super::lu::{lu_solve, lu_solve_right};
use super::{DerivBundle, Matrix};
use crate::error::Result;
use crate::scalar::Scalar;

pub trait BlockAlgebra: Clone + Send + Sync + Sized {
    type Field: Scalar;

    /// The plain matrix this element represents.
    fn value(&self) -> &Matrix<Self::Field>;
    fn add(&self, other: &Self) -> Result<Self>;
    fn sub(&self, other: &Self) -> Result<Self>;
    fn mul(&self, other: &Self) -> Result<Self>;
    fn neg(&self) -> Self;
    /// `self⁻¹ · b`
    fn solve_left(&self, b: &Self) -> Result<Self>;
    /// `b · self⁻¹`
    fn solve_right(&self, b: &Self) -> Result<Self>;
    /// `self − s·I`, where `s` is the transform variable.
    fn sub_transform_variable(&self, s: Self::Field) -> Self;
    /// Embeds a matrix that does not depend on θ or s, shaped like `self`'s
    /// derivative structure.
    fn constant_like(&self, m: Matrix<Self::Field>) -> Self;
}

impl<T: Scalar> BlockAlgebra for Matrix<T> {
    type Field = T;

    fn value(&self) -> &Matrix<T> {
        self
    }
    fn add(&self, other: &Self) -> Result<Self> {
        Matrix::add(self, other)
    }
    fn sub(&self, other: &Self) -> Result<Self> {
        Matrix::sub(self, other)
    }
    fn mul(&self, other: &Self) -> Result<Self> {
        self.matmul(other)
    }
    fn neg(&self) -> Self {
        Matrix::neg(self)
    }
    fn solve_left(&self, b: &Self) -> Result<Self> {
        lu_solve(self, b)
    }
    fn solve_right(&self, b: &Self) -> Result<Self> {
        lu_solve_right(self, b)
    }
    fn sub_transform_variable(&self, s: T) -> Self {
        self.sub_scaled_identity(s)
    }
    fn constant_like(&self, m: Matrix<T>) -> Self {
        m
    }
}

impl<T: Scalar> BlockAlgebra for DerivBundle<T> {
    type Field = T;

    fn value(&self) -> &Matrix<T> {
        DerivBundle::value(self)
    }
    fn add(&self, other: &Self) -> Result<Self> {
        DerivBundle::add(self, other)
    }
    fn sub(&self, other: &Self) -> Result<Self> {
        DerivBundle::sub(self, other)
    }
    fn mul(&self, other: &Self) -> Result<Self> {
        DerivBundle::mul(self, other)
    }
    fn neg(&self) -> Self {
        DerivBundle::neg(self)
    }
    fn solve_left(&self, b: &Self) -> Result<Self> {
        DerivBundle::solve_left(self, b)
    }
    fn solve_right(&self, b: &Self) -> Result<Self> {
        DerivBundle::solve_right(self, b)
    }
    fn sub_transform_variable(&self, s: T) -> Self {
        // s does not depend on θ: only the value shifts
        let shifted = self.value().sub_scaled_identity(s);
        DerivBundle::new(shifted, self.partials().to_vec(), self.params().clone()).expect("shape preserved")
    }
    fn constant_like(&self, m: Matrix<T>) -> Self {
        DerivBundle::constant(m, self.params().clone())
    }
}

/// A value together with its derivative in the transform variable `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct SDual<A> {
    pub value: A,
    pub ds: A,
}

impl<A: BlockAlgebra> SDual<A> {
    /// Lifts `a` as a quantity independent of `s`.
    pub fn constant(a: A) -> Self {
        let z = Matrix::zeros(a.value().rows(), a.value().cols());
        let ds = a.constant_like(z);
        Self { value: a, ds }
    }
}

impl<A: BlockAlgebra> BlockAlgebra for SDual<A> {
    type Field = A::Field;

    fn value(&self) -> &Matrix<A::Field> {
        self.value.value()
    }
    fn add(&self, other: &Self) -> Result<Self> {
        Ok(Self { value: self.value.add(&other.value)?, ds: self.ds.add(&other.ds)? })
    }
    fn sub(&self, other: &Self) -> Result<Self> {
        Ok(Self { value: self.value.sub(&other.value)?, ds: self.ds.sub(&other.ds)? })
    }
    fn mul(&self, other: &Self) -> Result<Self> {
        let value = self.value.mul(&other.value)?;
        let ds = self.ds.mul(&other.value)?.add(&self.value.mul(&other.ds)?)?;
        Ok(Self { value, ds })
    }
    fn neg(&self) -> Self {
        Self { value: self.value.neg(), ds: self.ds.neg() }
    }
    fn solve_left(&self, b: &Self) -> Result<Self> {
        let x = self.value.solve_left(&b.value)?;
        let ds = self.value.solve_left(&b.ds.sub(&self.ds.mul(&x)?)?)?;
        Ok(Self { value: x, ds })
    }
    fn solve_right(&self, b: &Self) -> Result<Self> {
        let x = self.value.solve_right(&b.value)?;
        let ds = self.value.solve_right(&b.ds.sub(&x.mul(&self.ds)?)?)?;
        Ok(Self { value: x, ds })
    }
    fn sub_transform_variable(&self, s: A::Field) -> Self {
        // d/ds (V − sI) = V' − I
        let n = self.value().rows();
        let id = self.ds.constant_like(Matrix::identity(n));
        Self {
            value: self.value.sub_transform_variable(s),
            ds: self.ds.sub(&id).expect("square block"),
        }
    }
    fn constant_like(&self, m: Matrix<A::Field>) -> Self {
        SDual::constant(self.value.constant_like(m))
    }
}
