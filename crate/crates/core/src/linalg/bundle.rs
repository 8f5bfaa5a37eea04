//! Matrices carrying their partial derivatives.
//!
//! A [`DerivBundle`] pairs a value `A(θ)` with the list `[∂A/∂θ₁, …, ∂A/∂θ_k]`.
//! Products and inverses propagate the partials by the product rule and by
//! `∂(A⁻¹) = −A⁻¹ ∂A A⁻¹`, which is everything the level recursions need.

use std::sync::Arc;

use super::lu::Lu;
use super::Matrix;
use crate::error::{QbdError, Result};
use crate::scalar::{Real, Scalar};

/// Ordered parameter names shared between bundles of one computation.
pub type ParamNames = Arc<[String]>;

pub fn param_names<S: AsRef<str>>(names: &[S]) -> ParamNames {
    names.iter().map(|s| s.as_ref().to_string()).collect::<Vec<_>>().into()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivBundle<T> {
    value: Matrix<T>,
    partials: Vec<Matrix<T>>,
    params: ParamNames,
}

impl<T: Scalar> DerivBundle<T> {
    pub fn new(value: Matrix<T>, partials: Vec<Matrix<T>>, params: ParamNames) -> Result<Self> {
        if partials.len() != params.len() {
            return Err(QbdError::DimensionMismatch(format!(
                "{} partials for {} parameters",
                partials.len(),
                params.len()
            )));
        }
        if let Some(p) = partials.iter().position(|p| p.shape() != value.shape()) {
            return Err(QbdError::DimensionMismatch(format!(
                "partial `{}` is {}x{}, value is {}x{}",
                params[p],
                partials[p].rows(),
                partials[p].cols(),
                value.rows(),
                value.cols()
            )));
        }
        Ok(Self { value, partials, params })
    }

    /// A bundle whose partials are all zero.
    pub fn constant(value: Matrix<T>, params: ParamNames) -> Self {
        let z = Matrix::zeros(value.rows(), value.cols());
        Self { partials: vec![z; params.len()], value, params }
    }

    pub fn value(&self) -> &Matrix<T> {
        &self.value
    }

    pub fn partials(&self) -> &[Matrix<T>] {
        &self.partials
    }

    pub fn partial(&self, i: usize) -> &Matrix<T> {
        &self.partials[i]
    }

    pub fn params(&self) -> &ParamNames {
        &self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn into_parts(self) -> (Matrix<T>, Vec<Matrix<T>>) {
        (self.value, self.partials)
    }

    fn check_params(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.params, &other.params) || self.params == other.params {
            Ok(())
        } else {
            Err(QbdError::ParamMismatch)
        }
    }

    fn zip_with(
        &self,
        other: &Self,
        f: impl Fn(&Matrix<T>, &Matrix<T>) -> Result<Matrix<T>>,
    ) -> Result<Self> {
        self.check_params(other)?;
        let value = f(&self.value, &other.value)?;
        let partials = self
            .partials
            .iter()
            .zip(&other.partials)
            .map(|(a, b)| f(a, b))
            .collect::<Result<_>>()?;
        Ok(Self { value, partials, params: self.params.clone() })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.sub(b))
    }

    pub fn neg(&self) -> Self {
        Self {
            value: self.value.neg(),
            partials: self.partials.iter().map(Matrix::neg).collect(),
            params: self.params.clone(),
        }
    }

    /// Product rule: `∂(XY) = ∂X·Y + X·∂Y`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_params(other)?;
        let value = self.value.matmul(&other.value)?;
        let partials = self
            .partials
            .iter()
            .zip(&other.partials)
            .map(|(dx, dy)| dx.matmul(&other.value)?.add(&self.value.matmul(dy)?))
            .collect::<Result<_>>()?;
        Ok(Self { value, partials, params: self.params.clone() })
    }

    /// `∂(X⁻¹) = −X⁻¹·∂X·X⁻¹`.
    pub fn inv(&self) -> Result<Self> {
        let lu = Lu::factor(&self.value)?;
        let inv = lu.solve(&Matrix::identity(self.value.rows()))?;
        let partials = self
            .partials
            .iter()
            .map(|d| Ok(inv.matmul(d)?.matmul(&inv)?.neg()))
            .collect::<Result<_>>()?;
        Ok(Self { value: inv, partials, params: self.params.clone() })
    }

    /// `X = self⁻¹ · b` with `∂X = self⁻¹ (∂b − ∂self · X)`.
    pub fn solve_left(&self, b: &Self) -> Result<Self> {
        self.check_params(b)?;
        let lu = Lu::factor(&self.value)?;
        let x = lu.solve(&b.value)?;
        let partials = self
            .partials
            .iter()
            .zip(&b.partials)
            .map(|(da, db)| lu.solve(&db.sub(&da.matmul(&x)?)?))
            .collect::<Result<_>>()?;
        Ok(Self { value: x, partials, params: self.params.clone() })
    }

    /// `X = b · self⁻¹` with `∂X = (∂b − X · ∂self) self⁻¹`.
    pub fn solve_right(&self, b: &Self) -> Result<Self> {
        self.check_params(b)?;
        let lu = Lu::factor(&self.value.transpose())?;
        let solve_t = |rhs: &Matrix<T>| -> Result<Matrix<T>> { Ok(lu.solve(&rhs.transpose())?.transpose()) };
        let x = solve_t(&b.value)?;
        let partials = self
            .partials
            .iter()
            .zip(&b.partials)
            .map(|(da, db)| solve_t(&db.sub(&x.matmul(da)?)?))
            .collect::<Result<_>>()?;
        Ok(Self { value: x, partials, params: self.params.clone() })
    }

    pub fn map_all(&self, f: impl Fn(&Matrix<T>) -> Matrix<T>) -> Self {
        Self {
            value: f(&self.value),
            partials: self.partials.iter().map(&f).collect(),
            params: self.params.clone(),
        }
    }

    pub fn lift<U: Scalar<Real = T>>(&self) -> DerivBundle<U>
    where
        T: Real,
    {
        DerivBundle {
            value: self.value.lift(),
            partials: self.partials.iter().map(Matrix::lift).collect(),
            params: self.params.clone(),
        }
    }
}

/// Product of two bundles.
pub fn bundle_mul<T: Scalar>(x: &DerivBundle<T>, y: &DerivBundle<T>) -> Result<DerivBundle<T>> {
    x.mul(y)
}

/// Inverse of a bundle.
pub fn bundle_inv<T: Scalar>(x: &DerivBundle<T>) -> Result<DerivBundle<T>> {
    x.inv()
}
