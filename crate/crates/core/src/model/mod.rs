//! Level-dependent QBD models.
//!
//! States are `(level, phase)` pairs with 0-based, level-local phase indices.
//! Flattened vectors and assembled generators use level-major order:
//! `(0,0), (0,1), …, (1,0), …, (N, m_N)`.

mod builders;
mod validate;

use std::fmt;

pub use builders::{build_mmpp_queue, build_perturbed, build_two_class, close_rows};
pub use validate::{validate, validate_param, Diagnostic};

use crate::error::{QbdError, Result};
use crate::linalg::{Matrix, ParamNames};
use crate::scalar::{Real, Scalar};

/// Diagonal, upward and downward blocks of a block-tridiagonal matrix.
///
/// `diag[n] = Q^{[n,n]}` for `n = 0..=N`, `up[n] = Q^{[n,n+1]}` for
/// `n = 0..N` and `down[n-1] = Q^{[n,n-1]}` for `n = 1..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSet<T> {
    pub diag: Vec<Matrix<T>>,
    pub up: Vec<Matrix<T>>,
    pub down: Vec<Matrix<T>>,
}

impl<T: Scalar> BlockSet<T> {
    pub fn zeros(phases: &[usize]) -> Self {
        let n = phases.len() - 1;
        Self {
            diag: phases.iter().map(|&p| Matrix::zeros(p, p)).collect(),
            up: (0..n).map(|l| Matrix::zeros(phases[l], phases[l + 1])).collect(),
            down: (1..=n).map(|l| Matrix::zeros(phases[l], phases[l - 1])).collect(),
        }
    }

    /// Checks that every block has the shape implied by `phases`.
    pub fn check_shapes(&self, phases: &[usize]) -> Result<()> {
        let n = phases.len().saturating_sub(1);
        let bad = |what: String| Err(QbdError::DimensionMismatch(what));
        if self.diag.len() != n + 1 || self.up.len() != n || self.down.len() != n {
            return bad(format!(
                "expected {} diag, {n} up and {n} down blocks, got {}, {}, {}",
                n + 1,
                self.diag.len(),
                self.up.len(),
                self.down.len()
            ));
        }
        for (l, b) in self.diag.iter().enumerate() {
            if b.shape() != (phases[l], phases[l]) {
                return bad(format!("diag[{l}] is {}x{}, expected {}x{}", b.rows(), b.cols(), phases[l], phases[l]));
            }
        }
        for (l, b) in self.up.iter().enumerate() {
            if b.shape() != (phases[l], phases[l + 1]) {
                return bad(format!("up[{l}] is {}x{}, expected {}x{}", b.rows(), b.cols(), phases[l], phases[l + 1]));
            }
        }
        for (i, b) in self.down.iter().enumerate() {
            let l = i + 1;
            if b.shape() != (phases[l], phases[l - 1]) {
                return bad(format!("down[{i}] is {}x{}, expected {}x{}", b.rows(), b.cols(), phases[l], phases[l - 1]));
            }
        }
        Ok(())
    }

    /// Entrywise `self + c * other`.
    pub fn axpy(&self, c: T, other: &Self) -> Result<Self> {
        let zip = |a: &[Matrix<T>], b: &[Matrix<T>]| -> Result<Vec<Matrix<T>>> {
            a.iter().zip(b).map(|(x, y)| x.add(&y.scale(c))).collect()
        };
        Ok(Self { diag: zip(&self.diag, &other.diag)?, up: zip(&self.up, &other.up)?, down: zip(&self.down, &other.down)? })
    }

    pub fn map(&self, f: impl Fn(&Matrix<T>) -> Matrix<T>) -> Self {
        Self {
            diag: self.diag.iter().map(&f).collect(),
            up: self.up.iter().map(&f).collect(),
            down: self.down.iter().map(&f).collect(),
        }
    }

    pub fn lift<U: Scalar<Real = T>>(&self) -> BlockSet<U>
    where
        T: Real,
    {
        BlockSet {
            diag: self.diag.iter().map(Matrix::lift).collect(),
            up: self.up.iter().map(Matrix::lift).collect(),
            down: self.down.iter().map(Matrix::lift).collect(),
        }
    }

    /// Places the blocks into a dense square matrix in level-major order.
    pub fn assemble(&self, phases: &[usize]) -> Matrix<T> {
        let offsets = state_offsets(phases);
        let total = *offsets.last().unwrap();
        let mut q = Matrix::zeros(total, total);
        let mut place = |r0: usize, c0: usize, b: &Matrix<T>| {
            for i in 0..b.rows() {
                for j in 0..b.cols() {
                    q[(r0 + i, c0 + j)] = b[(i, j)];
                }
            }
        };
        for (l, b) in self.diag.iter().enumerate() {
            place(offsets[l], offsets[l], b);
        }
        for (l, b) in self.up.iter().enumerate() {
            place(offsets[l], offsets[l + 1], b);
        }
        for (i, b) in self.down.iter().enumerate() {
            place(offsets[i + 1], offsets[i], b);
        }
        q
    }
}

/// Cumulative state offsets: `offsets[n]` is the flat index of `(n, 0)`;
/// the last entry is the total state count.
pub fn state_offsets(phases: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(phases.len() + 1);
    let mut acc = 0;
    out.push(0);
    for &p in phases {
        acc += p;
        out.push(acc);
    }
    out
}

/// A level-dependent QBD generator bounded above by level `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct QbdModel<T> {
    phases: Vec<usize>,
    blocks: BlockSet<T>,
}

impl<T: Scalar> QbdModel<T> {
    /// Checks the block structure only; generator properties are reported
    /// by [`validate`].
    pub fn new(phases: Vec<usize>, blocks: BlockSet<T>) -> Result<Self> {
        if phases.len() < 2 {
            return Err(QbdError::DimensionMismatch(format!(
                "a model needs at least two levels (N >= 1), got {}",
                phases.len()
            )));
        }
        if let Some(l) = phases.iter().position(|&p| p == 0) {
            return Err(QbdError::DimensionMismatch(format!("level {l} has no phases")));
        }
        blocks.check_shapes(&phases)?;
        Ok(Self { phases, blocks })
    }

    /// Index of the top level, `N`.
    pub fn top_level(&self) -> usize {
        self.phases.len() - 1
    }

    pub fn phases(&self) -> &[usize] {
        &self.phases
    }

    pub fn phase_count(&self, level: usize) -> usize {
        self.phases[level]
    }

    pub fn num_states(&self) -> usize {
        self.phases.iter().sum()
    }

    pub fn blocks(&self) -> &BlockSet<T> {
        &self.blocks
    }

    /// `Q^{[n,n]}`
    pub fn diag(&self, n: usize) -> &Matrix<T> {
        &self.blocks.diag[n]
    }

    /// `Q^{[n,n+1]}`
    pub fn up(&self, n: usize) -> &Matrix<T> {
        &self.blocks.up[n]
    }

    /// `Q^{[n,n-1]}`
    pub fn down(&self, n: usize) -> &Matrix<T> {
        &self.blocks.down[n - 1]
    }

    pub fn assemble(&self) -> Matrix<T> {
        self.blocks.assemble(&self.phases)
    }

    pub fn lift<U: Scalar<Real = T>>(&self) -> QbdModel<U>
    where
        T: Real,
    {
        QbdModel { phases: self.phases.clone(), blocks: self.blocks.lift() }
    }

    /// The model with every rate multiplied by `c`.
    pub fn scaled(&self, c: T) -> Self {
        Self { phases: self.phases.clone(), blocks: self.blocks.map(|b| b.scale(c)) }
    }
}

impl<T: Real> QbdModel<T> {
    /// Model with top level `level`, built from this one.
    ///
    /// For `level <= N` the levels above are cut off and the rates leaving
    /// the new top level upward are removed from its diagonal. For
    /// `level > N` the top level's pattern is repeated: every level `n >= N`
    /// moves down through `Q^{[N,N-1]}` and up through `Q^{[N-1,N]}`, which
    /// requires those two levels to have equal phase counts.
    pub fn level_continuation(&self, level: usize) -> Result<Self> {
        let n = self.top_level();
        if level == 0 {
            return Err(QbdError::InvalidArgument("continuation needs at least two levels".into()));
        }
        let drop_up = |d: &Matrix<T>, up: &Matrix<T>| -> Matrix<T> {
            let mut d = d.clone();
            for (i, r) in up.row_sums().into_iter().enumerate() {
                d[(i, i)] += r;
            }
            d
        };
        if level <= n {
            let phases = self.phases[..=level].to_vec();
            let mut diag = self.blocks.diag[..=level].to_vec();
            if level < n {
                diag[level] = drop_up(&diag[level], self.up(level));
            }
            let blocks = BlockSet {
                diag,
                up: self.blocks.up[..level].to_vec(),
                down: self.blocks.down[..level].to_vec(),
            };
            return QbdModel::new(phases, blocks);
        }
        if self.phases[n] != self.phases[n - 1] {
            return Err(QbdError::InvalidArgument(format!(
                "cannot continue beyond level {n}: levels {} and {n} have {} and {} phases",
                n - 1,
                self.phases[n - 1],
                self.phases[n]
            )));
        }
        let rep_up = self.up(n - 1).clone();
        let rep_down = self.down(n).clone();
        // interior diagonal: top-level diagonal minus the outgoing upward rates
        let mut rep_diag = self.diag(n).clone();
        for (i, r) in rep_up.row_sums().into_iter().enumerate() {
            rep_diag[(i, i)] -= r;
        }
        let mut phases = self.phases.clone();
        let mut blocks = self.blocks.clone();
        blocks.diag[n] = rep_diag.clone();
        for _ in n..level {
            phases.push(self.phases[n]);
            blocks.up.push(rep_up.clone());
            blocks.down.push(rep_down.clone());
            blocks.diag.push(rep_diag.clone());
        }
        blocks.diag[level] = self.diag(n).clone();
        QbdModel::new(phases, blocks)
    }
}

/// A model `Q(θ)` evaluated at a parameter point, with its partial blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamQbdModel<T> {
    base: QbdModel<T>,
    params: ParamNames,
    partials: Vec<BlockSet<T>>,
}

impl<T: Scalar> ParamQbdModel<T> {
    pub fn new(base: QbdModel<T>, params: ParamNames, partials: Vec<BlockSet<T>>) -> Result<Self> {
        if params.len() != partials.len() {
            return Err(QbdError::DimensionMismatch(format!(
                "{} parameter names for {} partial block sets",
                params.len(),
                partials.len()
            )));
        }
        for (name, p) in params.iter().zip(&partials) {
            p.check_shapes(base.phases())
                .map_err(|e| QbdError::DimensionMismatch(format!("partial `{name}`: {e}")))?;
        }
        Ok(Self { base, params, partials })
    }

    pub fn base(&self) -> &QbdModel<T> {
        &self.base
    }

    pub fn params(&self) -> &ParamNames {
        &self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn partials(&self) -> &[BlockSet<T>] {
        &self.partials
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p == name)
    }

    /// `Q + h ∂Q/∂θᵢ`, the first-order move along parameter `i`.
    pub fn linear_step(&self, i: usize, h: T) -> Result<QbdModel<T>> {
        QbdModel::new(self.base.phases.clone(), self.base.blocks.axpy(h, &self.partials[i])?)
    }

    /// Dense `∂Q/∂θᵢ`.
    pub fn assemble_partial(&self, i: usize) -> Matrix<T> {
        self.partials[i].assemble(self.base.phases())
    }

    pub fn lift<U: Scalar<Real = T>>(&self) -> ParamQbdModel<U>
    where
        T: Real,
    {
        ParamQbdModel {
            base: self.base.lift(),
            params: self.params.clone(),
            partials: self.partials.iter().map(BlockSet::lift).collect(),
        }
    }
}

/// A row vector partitioned by level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelVector<T> {
    segments: Vec<Vec<T>>,
}

impl<T: Scalar> LevelVector<T> {
    pub fn new(segments: Vec<Vec<T>>) -> Self {
        Self { segments }
    }

    pub fn from_flat(phases: &[usize], flat: &[T]) -> Result<Self> {
        let offs = state_offsets(phases);
        if flat.len() != *offs.last().unwrap() {
            return Err(QbdError::DimensionMismatch(format!(
                "{} values for {} states",
                flat.len(),
                offs.last().unwrap()
            )));
        }
        Ok(Self { segments: offs.windows(2).map(|w| flat[w[0]..w[1]].to_vec()).collect() })
    }

    pub fn segments(&self) -> &[Vec<T>] {
        &self.segments
    }

    pub fn segment(&self, level: usize) -> &[T] {
        &self.segments[level]
    }

    pub fn num_levels(&self) -> usize {
        self.segments.len()
    }

    pub fn phases(&self) -> Vec<usize> {
        self.segments.iter().map(Vec::len).collect()
    }

    pub fn flatten(&self) -> Vec<T> {
        self.segments.iter().flatten().copied().collect()
    }

    pub fn total(&self) -> T {
        self.segments.iter().flatten().fold(T::zero(), |a, &b| a + b)
    }

    /// Iterates `(level, phase, value)` in level-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        self.segments
            .iter()
            .enumerate()
            .flat_map(|(n, s)| s.iter().enumerate().map(move |(j, &v)| (n, j, v)))
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { segments: self.segments.iter().map(|s| s.iter().map(|&x| f(x)).collect()).collect() }
    }

    pub fn re(&self) -> LevelVector<T::Real> {
        LevelVector { segments: self.segments.iter().map(|s| s.iter().map(|x| x.re()).collect()).collect() }
    }
}

impl<T: Scalar + fmt::Display> fmt::Display for LevelVector<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, s) in self.segments.iter().enumerate() {
            if n > 0 {
                write!(f, " | ")?;
            }
            for (j, v) in s.iter().enumerate() {
                if j > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{v}")?;
            }
        }
        Ok(())
    }
}

/// Dense generator of a model (level-major state order).
pub fn assemble_full_generator<T: Scalar>(model: &QbdModel<T>) -> Matrix<T> {
    model.assemble()
}
