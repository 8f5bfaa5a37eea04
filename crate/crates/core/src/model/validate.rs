use std::collections::VecDeque;
use std::fmt;


use super::{BlockSet, ParamQbdModel, QbdModel};
use crate::scalar::Real;

/// One violated generator property, located by block and entry.
#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    NonFinite { block: String, row: usize, col: usize },
    NegativeRate { block: String, row: usize, col: usize, value: f64 },
    RowSum { level: usize, phase: usize, sum: f64 },
    PartialRowSum { param: String, level: usize, phase: usize, sum: f64 },
    Reducible { unreachable: usize, total: usize },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::NonFinite { block, row, col } => write!(f, "{block}: non-finite entry at ({row},{col})"),
            Diagnostic::NegativeRate { block, row, col, value } => {
                write!(f, "{block}: negative rate {value} at ({row},{col})")
            }
            Diagnostic::RowSum { level, phase, sum } => {
                write!(f, "row sum {sum} != 0 at state ({level},{phase})")
            }
            Diagnostic::PartialRowSum { param, level, phase, sum } => {
                write!(f, "partial `{param}`: row sum {sum} != 0 at state ({level},{phase})")
            }
            Diagnostic::Reducible { unreachable, total } => {
                write!(f, "chain is not irreducible: {unreachable} of {total} states not mutually reachable")
            }
        }
    }
}

fn row_sum_diagnostics<T: Real>(phases: &[usize], blocks: &BlockSet<T>, mut emit: impl FnMut(usize, usize, T)) {
    let n = phases.len() - 1;
    for l in 0..=n {
        for i in 0..phases[l] {
            let mut s = blocks.diag[l].row(i).iter().fold(T::zero(), |a, &b| a + b);
            if l < n {
                s = blocks.up[l].row(i).iter().fold(s, |a, &b| a + b);
            }
            if l > 0 {
                s = blocks.down[l - 1].row(i).iter().fold(s, |a, &b| a + b);
            }
            if !(s.abs() <= T::GENERATOR_TOL) {
                emit(l, i, s);
            }
        }
    }
}

/// Checks every generator invariant; an empty list means the model is valid.
pub fn validate<T: Real>(model: &QbdModel<T>) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let phases = model.phases();
    let n = model.top_level();
    let blocks = model.blocks();

    let mut check_block = |name: String, b: &crate::linalg::Matrix<T>, skip_diagonal: bool| {
        for i in 0..b.rows() {
            for j in 0..b.cols() {
                let v = b[(i, j)];
                if !v.finite() {
                    out.push(Diagnostic::NonFinite { block: name.clone(), row: i, col: j });
                } else if !(skip_diagonal && i == j) && v < T::zero() {
                    out.push(Diagnostic::NegativeRate {
                        block: name.clone(),
                        row: i,
                        col: j,
                        value: v.to_f64_lossy(),
                    });
                }
            }
        }
    };
    for l in 0..=n {
        check_block(format!("Q[{l},{l}]"), model.diag(l), true);
    }
    for l in 0..n {
        check_block(format!("Q[{l},{}]", l + 1), model.up(l), false);
        check_block(format!("Q[{},{l}]", l + 1), model.down(l + 1), false);
    }

    row_sum_diagnostics(phases, blocks, |level, phase, s| {
        out.push(Diagnostic::RowSum { level, phase, sum: s.to_f64_lossy() })
    });

    let unreachable = unreachable_states(model);
    if unreachable > 0 {
        out.push(Diagnostic::Reducible { unreachable, total: model.num_states() });
    }
    out
}

/// Validates the base model plus the zero-row-sum law of every partial.
pub fn validate_param<T: Real>(model: &ParamQbdModel<T>) -> Vec<Diagnostic> {
    let mut out = validate(model.base());
    for (name, p) in model.params().iter().zip(model.partials()) {
        row_sum_diagnostics(model.base().phases(), p, |level, phase, s| {
            out.push(Diagnostic::PartialRowSum { param: name.clone(), level, phase, sum: s.to_f64_lossy() })
        });
    }
    out
}

/// Number of states outside the strongly connected class of state (0,0).
fn unreachable_states<T: Real>(model: &QbdModel<T>) -> usize {
    let q = model.assemble();
    let n = q.rows();
    let reach = |forward: bool| -> Vec<bool> {
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                let rate = if forward { q[(u, v)] } else { q[(v, u)] };
                if v != u && !seen[v] && rate > T::zero() {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    };
    let fwd = reach(true);
    let bwd = reach(false);
    fwd.iter().zip(&bwd).filter(|(a, b)| !(**a && **b)).count()
}
