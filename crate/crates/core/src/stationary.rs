//! Stationary distribution by the `R̂` recursion, anchored at the top level.
//!
//! `π_n = π_{n+1} R̂^{(n)}` down to level 0, with `π_N` solving the censored
//! balance equations at level `N` plus normalization. The balance system is
//! rank deficient by one; its last column is replaced by the normalization
//! vector `1 + Σ_n R̂^{(N−1)}⋯R̂^{(n)} 1`. Differentiating this square system
//! (including the replaced column) gives `∂π_N`.

use num_traits::{One, Zero};

use crate::error::{QbdError, Result};
use crate::levels::{self, LevelBlocks, LevelFamily};
use crate::linalg::{inf_norm_diff, BlockAlgebra, DerivBundle, Matrix, ParamNames};
use crate::model::{LevelVector, ParamQbdModel, QbdModel};
use crate::scalar::{Real, Scalar};

/// `R̂^{(n)}(s)` for `n = 0..N−1`; `R̂^{(n)}` is `m_{n+1} × m_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RhatFamily<T> {
    pub s: T,
    pub matrices: LevelFamily<Matrix<T>>,
}

impl<T> RhatFamily<T> {
    pub fn at(&self, n: usize) -> &Matrix<T> {
        self.matrices.at(n)
    }
}

pub fn rhat_family<T: Scalar>(model: &QbdModel<T>, s: T) -> Result<RhatFamily<T>> {
    let b = LevelBlocks::from_model(model).shifted(s, |_| true);
    Ok(RhatFamily { s, matrices: levels::rhat(&b)? })
}

/// Per-level row vectors of the stationary distribution, in any carrier.
fn stationary_rows<A: BlockAlgebra>(b: &LevelBlocks<A>) -> Result<Vec<A>> {
    let n = b.top_level();
    let rh = levels::rhat(b)?;
    let boundary = rh.at(n - 1).mul(b.up(n - 1))?.add(b.diag(n))?;
    let p_top = boundary.value().rows();
    let ones = |p: usize| boundary.constant_like(Matrix::ones_col(p));

    let mut prod = rh.at(n - 1).clone();
    let mut norm = ones(p_top).add(&prod.mul(&ones(prod.value().cols()))?)?;
    for k in (0..n - 1).rev() {
        prod = prod.mul(rh.at(k))?;
        norm = norm.add(&prod.mul(&ones(prod.value().cols()))?)?;
    }

    let last = p_top - 1;
    let mut keep = Matrix::identity(p_top);
    keep[(last, last)] = A::Field::zero();
    let mut select = Matrix::zeros(1, p_top);
    select[(0, last)] = A::Field::one();
    let system = boundary
        .mul(&boundary.constant_like(keep))?
        .add(&norm.mul(&boundary.constant_like(select.clone()))?)?;
    let top = system
        .solve_right(&boundary.constant_like(select))
        .map_err(|e| match e {
            QbdError::SingularMatrix(m) => QbdError::SingularMatrix(format!("boundary system at level {n}: {m}")),
            e => e,
        })?;

    let mut rows = vec![top];
    for k in (0..n).rev() {
        let next = rows.last().unwrap().mul(rh.at(k))?;
        rows.push(next);
    }
    rows.reverse();
    Ok(rows)
}

fn row_values<T: Scalar>(m: &Matrix<T>) -> Vec<T> {
    m.as_slice().to_vec()
}

pub fn stationary_distribution<T: Scalar>(model: &QbdModel<T>) -> Result<LevelVector<T>> {
    let rows = stationary_rows(&LevelBlocks::from_model(model))?;
    Ok(LevelVector::new(rows.iter().map(row_values).collect()))
}

/// `π` together with `∂π/∂θᵢ` for every parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct StationarySensitivity<T> {
    pub pi: LevelVector<T>,
    pub params: ParamNames,
    pub partials: Vec<LevelVector<T>>,
}

impl<T: Scalar> StationarySensitivity<T> {
    pub fn partial(&self, name: &str) -> Option<&LevelVector<T>> {
        self.params.iter().position(|p| p == name).map(|i| &self.partials[i])
    }
}

pub fn stationary_sensitivity<T: Scalar>(pm: &ParamQbdModel<T>) -> Result<StationarySensitivity<T>> {
    let rows: Vec<DerivBundle<T>> = stationary_rows(&LevelBlocks::from_param_model(pm))?;
    let pi = LevelVector::new(rows.iter().map(|r| row_values(r.value())).collect());
    let partials = (0..pm.num_params())
        .map(|i| LevelVector::new(rows.iter().map(|r| row_values(r.partial(i))).collect()))
        .collect();
    Ok(StationarySensitivity { pi, params: pm.params().clone(), partials })
}

/// Outcome of [`find_truncation_level`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation<R> {
    pub level: usize,
    pub gap: R,
}

/// Default probe levels for truncation level `l`: `0..=min(5, l − 2)`.
pub fn default_probes(l: usize) -> Vec<usize> {
    (0..=5.min(l.saturating_sub(2))).collect()
}

/// Distance between the models truncated at `l` and `l − 1`, over the probe
/// levels `n < l − 1` both define.
///
/// Compares `R̂^{(n)}`, the rate matrices `R̃^{(n+1)}(0)` built downward from
/// the truncation level, and the stationary segments `π_n`. The `R̂` matrices
/// are built upward from level 0 and agree exactly for nested truncations, so
/// the `π_n` term is what detects probability mass lost above the cut.
pub fn truncation_gap<R: Real>(upper: &QbdModel<R>, lower: &QbdModel<R>, probes: &[usize]) -> Result<R> {
    let l = upper.top_level();
    let rh_u = levels::rhat(&LevelBlocks::from_model(upper))?;
    let rh_l = levels::rhat(&LevelBlocks::from_model(lower))?;
    let rt_u = levels::rtilde(&LevelBlocks::from_model(upper))?;
    let rt_l = levels::rtilde(&LevelBlocks::from_model(lower))?;
    let pi_u = stationary_distribution(upper)?;
    let pi_l = stationary_distribution(lower)?;
    let mut gap = R::zero();
    for &n in probes.iter().filter(|&&n| n + 1 < l) {
        let a = inf_norm_diff(rh_u.at(n), rh_l.at(n))?;
        let b = inf_norm_diff(rt_u.at(n + 1), rt_l.at(n + 1))?;
        let c = pi_u
            .segment(n)
            .iter()
            .zip(pi_l.segment(n))
            .fold(R::zero(), |acc, (x, y)| acc.max((*x - *y).abs()));
        gap = gap.max(a).max(b).max(c);
    }
    Ok(gap)
}

/// Smallest `L ≤ l_max` whose truncation gap against `L − 1` is below `eps`.
///
/// `probes = None` uses [`default_probes`]; explicit probes are restricted
/// to `n < L − 1` and levels with no surviving probe are skipped.
pub fn find_truncation_level<R: Real>(
    family: impl Fn(usize) -> Result<QbdModel<R>>,
    eps: R,
    probes: Option<&[usize]>,
    l_max: usize,
) -> Result<Truncation<R>> {
    if !(eps > R::zero()) {
        return Err(QbdError::InvalidArgument(format!("tolerance must be positive, got {eps}")));
    }
    let mut prev = family(1)?;
    let mut last_gap = None;
    for l in 2..=l_max {
        let cur = family(l)?;
        let active: Vec<usize> = match probes {
            Some(p) => p.iter().copied().filter(|&n| n + 1 < l).collect(),
            None => default_probes(l),
        };
        if !active.is_empty() {
            let gap = truncation_gap(&cur, &prev, &active)?;
            if gap < eps {
                return Ok(Truncation { level: l, gap });
            }
            last_gap = Some(gap);
        }
        prev = cur;
    }
    Err(QbdError::NoConvergence(match last_gap {
        Some(g) => format!("truncation gap {g:e} still >= {eps:e} at level cap {l_max}"),
        None => format!("no admissible truncation level up to {l_max}"),
    }))
}
