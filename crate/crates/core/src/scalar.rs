//! Scalar fields the solvers run over.
//!
//! Every recursion is written once against [`Scalar`], so the same code path
//! evaluates transforms at real abscissas (`f64`, `f32`) and at the complex
//! abscissas needed by Laplace inversion (`Complex<f64>`, `Complex<f32>`).

use std::fmt::{Debug, Display, LowerExp};

use num_complex::Complex;
use num_traits::{Float, FromPrimitive, NumAssign};

/// Real floating point types usable as model coefficients.
pub trait Real:
    Scalar<Real = Self> + Float + FromPrimitive + Display + LowerExp + Default + PartialOrd
{
    /// Relative pivot magnitude below which an LU factorization is declared singular.
    const PIVOT_RTOL: Self;
    /// Tolerance for generator identities (row sums, nonnegativity).
    const GENERATOR_TOL: Self;

    fn from_f64_lossy(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).unwrap_or_else(Self::nan)
    }

    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

/// A field element: real or complex floating point.
pub trait Scalar:
    Copy + PartialEq + Debug + Send + Sync + 'static + NumAssign + std::ops::Neg<Output = Self>
{
    type Real: Real;

    fn from_real(r: Self::Real) -> Self;
    fn re(self) -> Self::Real;
    fn im(self) -> Self::Real;
    /// Absolute value (complex modulus).
    fn modulus(self) -> Self::Real;
    fn finite(self) -> bool;

    fn lit(x: f64) -> Self {
        Self::from_real(Self::Real::from_f64_lossy(x))
    }
}

macro_rules! impl_real {
    ($t:ty, $pivot:expr, $gen:expr) => {
        impl Scalar for $t {
            type Real = $t;

            #[inline]
            fn from_real(r: $t) -> $t {
                r
            }
            #[inline]
            fn re(self) -> $t {
                self
            }
            #[inline]
            fn im(self) -> $t {
                0.0
            }
            #[inline]
            fn modulus(self) -> $t {
                self.abs()
            }
            #[inline]
            fn finite(self) -> bool {
                <$t>::is_finite(self)
            }
        }

        impl Real for $t {
            const PIVOT_RTOL: $t = $pivot;
            const GENERATOR_TOL: $t = $gen;
        }

    };
}

impl_real!(f64, 1e-12, 1e-10);
impl_real!(f32, 1e-6, 1e-4);

impl<R: Real> Scalar for Complex<R> {
    type Real = R;

    #[inline]
    fn from_real(r: R) -> Self {
        Complex::new(r, R::zero())
    }
    #[inline]
    fn re(self) -> R {
        self.re
    }
    #[inline]
    fn im(self) -> R {
        self.im
    }
    #[inline]
    fn modulus(self) -> R {
        self.norm()
    }
    #[inline]
    fn finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}
