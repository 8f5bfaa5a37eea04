//! Level-dependent quasi-birth-and-death (QBD) processes.
//!
//! A continuous-time Markov chain on states `(level, phase)` whose generator
//! is block tridiagonal in the level, with blocks that may change from level
//! to level. This crate computes
//!
//! * the stationary distribution ([`stationary`]),
//! * first-passage transforms between levels with a taboo clock, and the
//!   expected taboo time ([`passage`]),
//! * the transient distribution through Laplace inversion ([`transient`]),
//!
//! together with exact derivatives of each of them with respect to model
//! parameters. All solvers are generic over the scalar field; the aliases
//! below fix the usual choices.

pub mod error;
pub mod io;
pub mod levels;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod passage;
pub mod scalar;
pub mod stationary;
pub mod transient;

pub use num_complex::Complex;

pub use error::{QbdError, Result};
pub use linalg::{BlockAlgebra, DerivBundle, Matrix, SDual};
pub use model::{BlockSet, Diagnostic, LevelVector, ParamQbdModel, QbdModel};
pub use passage::{PassageResult, TabooSet};
pub use scalar::{Real, Scalar};
pub use transient::{InversionConfig, TransientQuery};

pub type C64 = Complex<f64>;
pub type C32 = Complex<f32>;

pub type MatrixF64 = Matrix<f64>;
pub type MatrixF32 = Matrix<f32>;
pub type MatrixC64 = Matrix<C64>;
pub type MatrixC32 = Matrix<C32>;

pub type DerivBundleF64 = DerivBundle<f64>;
pub type DerivBundleC64 = DerivBundle<C64>;

pub type QbdModelF64 = QbdModel<f64>;
pub type QbdModelF32 = QbdModel<f32>;
pub type QbdModelC64 = QbdModel<C64>;
pub type ParamQbdModelF64 = ParamQbdModel<f64>;
pub type ParamQbdModelC64 = ParamQbdModel<C64>;

pub type LevelVectorF64 = LevelVector<f64>;
pub type LevelVectorC64 = LevelVector<C64>;
