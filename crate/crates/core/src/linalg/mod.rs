//! Dense small-matrix arithmetic and derivative propagation.

mod algebra;
mod bundle;
mod lu;
mod matrix;

pub use algebra::{BlockAlgebra, SDual};
pub use bundle::{bundle_inv, bundle_mul, param_names, DerivBundle, ParamNames};
pub use lu::{inverse, lu_solve, lu_solve_right, Lu};
pub use matrix::{inf_norm_diff, Matrix};
