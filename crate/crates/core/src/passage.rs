//! First-passage transforms between levels with a taboo clock.
//!
//! `W^{n,n'}_𝒜(s)[i,j] = E[exp(−s·T_𝒜); first arrival at level n' is in phase j]`
//! for a start in `(n, i)`, where `T_𝒜` is the time spent in the levels of
//! `𝒜` before the passage ends. Downward passages multiply the one-step
//! `G` matrices and upward passages the one-step `H` matrices.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{QbdError, Result};
use crate::levels::{self, LevelBlocks, LevelFamily};
use crate::linalg::{BlockAlgebra, DerivBundle, Matrix, SDual};
use crate::model::{ParamQbdModel, QbdModel};
use crate::scalar::Scalar;

/// Levels whose occupation time is clocked by the transform variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TabooSet {
    levels: BTreeSet<usize>,
}

impl TabooSet {
    pub fn new(levels: impl IntoIterator<Item = usize>, top_level: usize) -> Result<Self> {
        let levels: BTreeSet<usize> = levels.into_iter().collect();
        if let Some(&bad) = levels.iter().find(|&&l| l > top_level) {
            return Err(QbdError::InvalidArgument(format!("taboo level {bad} above top level {top_level}")));
        }
        Ok(Self { levels })
    }

    /// Every level `0..=top_level`.
    pub fn all(top_level: usize) -> Self {
        Self { levels: (0..=top_level).collect() }
    }

    /// Inclusive range `lo..=hi`.
    pub fn range(lo: usize, hi: usize, top_level: usize) -> Result<Self> {
        Self::new(lo..=hi, top_level)
    }

    pub fn contains(&self, level: usize) -> bool {
        self.levels.contains(&level)
    }

    pub fn levels(&self) -> impl Iterator<Item = usize> + '_ {
        self.levels.iter().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }
}

impl fmt::Display for TabooSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v: Vec<String> = self.levels.iter().map(|l| l.to_string()).collect();
        write!(f, "{{{}}}", v.join(","))
    }
}

/// A passage transform with optional moment and sensitivity payloads.
#[derive(Debug, Clone, PartialEq)]
pub struct PassageResult<T> {
    pub from_level: usize,
    pub to_level: usize,
    pub taboo: TabooSet,
    pub s: T,
    pub matrix: Matrix<T>,
    pub moment1: Option<Matrix<T>>,
    pub sensitivities: Option<DerivBundle<T>>,
}

fn check_levels(top: usize, from: usize, to: usize) -> Result<()> {
    if from == to {
        return Err(QbdError::InvalidArgument(format!("passage needs distinct levels, got {from} -> {to}")));
    }
    if from > top || to > top {
        return Err(QbdError::InvalidArgument(format!("passage {from} -> {to} outside levels 0..={top}")));
    }
    Ok(())
}

fn passage_in<A: BlockAlgebra>(b: &LevelBlocks<A>, from: usize, to: usize) -> Result<A> {
    if from > to {
        let steps = levels::g_steps_down_to(b, to + 1)?;
        levels::chain_product(&steps, from, to)
    } else {
        let steps = levels::h_steps_up_to(b, to - 1)?;
        levels::chain_product(&steps, from, to)
    }
}

/// `G_𝒜^{n,n−1}(s)` for `n = 1..N`.
pub fn g_step_family<T: Scalar>(model: &QbdModel<T>, taboo: &TabooSet, s: T) -> Result<LevelFamily<Matrix<T>>> {
    levels::g_steps(&LevelBlocks::from_model(model).shifted(s, |n| taboo.contains(n)))
}

/// `H_𝒜^{n,n+1}(s)` for `n = 0..N−1`.
pub fn h_step_family<T: Scalar>(model: &QbdModel<T>, taboo: &TabooSet, s: T) -> Result<LevelFamily<Matrix<T>>> {
    levels::h_steps(&LevelBlocks::from_model(model).shifted(s, |n| taboo.contains(n)))
}

pub fn passage_transform<T: Scalar>(
    model: &QbdModel<T>,
    from: usize,
    to: usize,
    taboo: &TabooSet,
    s: T,
) -> Result<PassageResult<T>> {
    check_levels(model.top_level(), from, to)?;
    let b = LevelBlocks::from_model(model).shifted(s, |n| taboo.contains(n));
    let matrix = passage_in(&b, from, to)?;
    Ok(PassageResult {
        from_level: from,
        to_level: to,
        taboo: taboo.clone(),
        s,
        matrix,
        moment1: None,
        sensitivities: None,
    })
}

/// Expected time spent in the taboo levels during the passage, restricted to
/// paths that end in each target phase: `−∂W/∂s` at `s = 0`.
pub fn passage_moment1<T: Scalar>(model: &QbdModel<T>, from: usize, to: usize, taboo: &TabooSet) -> Result<Matrix<T>> {
    check_levels(model.top_level(), from, to)?;
    let b = LevelBlocks::from_model(model).map(|m| SDual::constant(m.clone())).shifted(T::zero(), |n| taboo.contains(n));
    Ok(passage_in(&b, from, to)?.ds.neg())
}

/// `W` at `s` with its θ-partials.
pub fn passage_sensitivity<T: Scalar>(
    pm: &ParamQbdModel<T>,
    from: usize,
    to: usize,
    taboo: &TabooSet,
    s: T,
) -> Result<DerivBundle<T>> {
    check_levels(pm.base().top_level(), from, to)?;
    let b = LevelBlocks::from_param_model(pm).shifted(s, |n| taboo.contains(n));
    passage_in(&b, from, to)
}

/// The first moment matrix with its θ-partials.
pub fn passage_moment1_sensitivity<T: Scalar>(
    pm: &ParamQbdModel<T>,
    from: usize,
    to: usize,
    taboo: &TabooSet,
) -> Result<DerivBundle<T>> {
    check_levels(pm.base().top_level(), from, to)?;
    let b = LevelBlocks::from_param_model(pm)
        .map(|m| SDual::constant(m.clone()))
        .shifted(T::zero(), |n| taboo.contains(n));
    Ok(passage_in(&b, from, to)?.ds.neg())
}

impl<T: Scalar> PassageResult<T> {
    /// Attaches the first moment (computed at `s = 0`).
    pub fn with_moment1(mut self, model: &QbdModel<T>) -> Result<Self> {
        self.moment1 = Some(passage_moment1(model, self.from_level, self.to_level, &self.taboo)?);
        Ok(self)
    }

    /// Attaches the θ-partials of the transform at this result's `s`.
    pub fn with_sensitivities(mut self, pm: &ParamQbdModel<T>) -> Result<Self> {
        self.sensitivities = Some(passage_sensitivity(pm, self.from_level, self.to_level, &self.taboo, self.s)?);
        Ok(self)
    }
}
