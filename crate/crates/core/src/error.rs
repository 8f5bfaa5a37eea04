use thiserror::Error;

use crate::model::Diagnostic;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum QbdError {
    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("derivative bundles carry different parameter lists")]
    ParamMismatch,

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("invalid rate `{name}`: {value} (rates must be positive and finite)")]
    InvalidRate { name: String, value: f64 },

    #[error("invalid phase generator: {0}")]
    InvalidSubgenerator(String),

    #[error("invalid perturbation: {0}")]
    InvalidPerturbation(String),

    #[error("model failed validation: {}", join_diagnostics(.0))]
    InvalidModel(Vec<Diagnostic>),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("transform evaluator failed: {0}")]
    EvaluatorFailure(String),

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl QbdError {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            QbdError::SingularMatrix(_)
                | QbdError::SingularSystem(_)
                | QbdError::NoConvergence(_)
                | QbdError::EvaluatorFailure(_)
        )
    }
}

fn join_diagnostics(d: &[Diagnostic]) -> String {
    d.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = QbdError> = std::result::Result<T, E>;
