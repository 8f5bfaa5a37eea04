//! Level-by-level matrix recursions shared by all solvers.
//!
//! Every function here works on a [`LevelBlocks`] whose diagonal blocks
//! have already been shifted by the transform variable (`Q^{[n,n]} − sI`
//! on the levels where time is being clocked), so the same code produces
//! values, θ-partials and s-derivatives depending on the carrier type.

use crate::error::Result;
use crate::linalg::{BlockAlgebra, DerivBundle, Matrix};
use crate::model::{BlockSet, ParamQbdModel, QbdModel};
use crate::scalar::Scalar;

/// Block-tridiagonal generator with entries in a [`BlockAlgebra`].
#[derive(Debug, Clone)]
pub struct LevelBlocks<A> {
    diag: Vec<A>,
    up: Vec<A>,
    down: Vec<A>,
}

impl<A: BlockAlgebra> LevelBlocks<A> {
    pub fn new(diag: Vec<A>, up: Vec<A>, down: Vec<A>) -> Self {
        debug_assert!(diag.len() == up.len() + 1 && up.len() == down.len());
        Self { diag, up, down }
    }

    pub fn top_level(&self) -> usize {
        self.diag.len() - 1
    }

    pub fn diag(&self, n: usize) -> &A {
        &self.diag[n]
    }

    pub fn up(&self, n: usize) -> &A {
        &self.up[n]
    }

    pub fn down(&self, n: usize) -> &A {
        &self.down[n - 1]
    }

    /// Subtracts `s·I` from the diagonal block of every level with `clocked(n)`.
    pub fn shifted(&self, s: A::Field, clocked: impl Fn(usize) -> bool) -> Self {
        let diag = self
            .diag
            .iter()
            .enumerate()
            .map(|(n, d)| if clocked(n) { d.sub_transform_variable(s) } else { d.clone() })
            .collect();
        Self { diag, up: self.up.clone(), down: self.down.clone() }
    }

    pub fn map<B: BlockAlgebra>(&self, f: impl Fn(&A) -> B) -> LevelBlocks<B> {
        LevelBlocks {
            diag: self.diag.iter().map(&f).collect(),
            up: self.up.iter().map(&f).collect(),
            down: self.down.iter().map(&f).collect(),
        }
    }
}

impl<T: Scalar> LevelBlocks<Matrix<T>> {
    pub fn from_blocks(b: &BlockSet<T>) -> Self {
        Self { diag: b.diag.clone(), up: b.up.clone(), down: b.down.clone() }
    }

    pub fn from_model(m: &QbdModel<T>) -> Self {
        Self::from_blocks(m.blocks())
    }
}

impl<T: Scalar> LevelBlocks<DerivBundle<T>> {
    pub fn from_param_model(pm: &ParamQbdModel<T>) -> Self {
        let base = pm.base().blocks();
        let pick = |sel: fn(&BlockSet<T>) -> &Vec<Matrix<T>>| -> Vec<DerivBundle<T>> {
            sel(base)
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let parts = pm.partials().iter().map(|p| sel(p)[i].clone()).collect();
                    DerivBundle::new(v.clone(), parts, pm.params().clone()).expect("shapes checked at construction")
                })
                .collect()
        };
        Self { diag: pick(|b| &b.diag), up: pick(|b| &b.up), down: pick(|b| &b.down) }
    }
}

/// Matrices indexed by level, starting at `first`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelFamily<A> {
    first: usize,
    items: Vec<A>,
}

impl<A> LevelFamily<A> {
    pub fn new(first: usize, items: Vec<A>) -> Self {
        Self { first, items }
    }

    pub fn first_level(&self) -> usize {
        self.first
    }

    pub fn last_level(&self) -> usize {
        self.first + self.items.len() - 1
    }

    pub fn at(&self, n: usize) -> &A {
        assert!(n >= self.first && n <= self.last_level(), "level {n} outside family");
        &self.items[n - self.first]
    }

    pub fn get(&self, n: usize) -> Option<&A> {
        n.checked_sub(self.first).and_then(|i| self.items.get(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &A)> {
        self.items.iter().enumerate().map(move |(i, a)| (self.first + i, a))
    }

    pub fn into_items(self) -> Vec<A> {
        self.items
    }

    pub fn map<B>(&self, f: impl Fn(&A) -> B) -> LevelFamily<B> {
        LevelFamily { first: self.first, items: self.items.iter().map(f).collect() }
    }
}

/// `R̂^{(n)}` for `n = 0..N−1`, built upward from level 0.
pub fn rhat<A: BlockAlgebra>(b: &LevelBlocks<A>) -> Result<LevelFamily<A>> {
    let n_top = b.top_level();
    let mut items: Vec<A> = Vec::with_capacity(n_top);
    items.push(b.diag(0).solve_right(b.down(1))?.neg());
    for n in 1..n_top {
        let inner = items[n - 1].mul(b.up(n - 1))?.add(b.diag(n))?;
        items.push(inner.solve_right(b.down(n + 1))?.neg());
    }
    Ok(LevelFamily::new(0, items))
}

/// `R̃^{(n)}` for `n = 1..N`, built downward from level `N`.
pub fn rtilde<A: BlockAlgebra>(b: &LevelBlocks<A>) -> Result<LevelFamily<A>> {
    let n_top = b.top_level();
    let mut rev: Vec<A> = Vec::with_capacity(n_top);
    rev.push(b.diag(n_top).solve_right(b.up(n_top - 1))?.neg());
    for n in (1..n_top).rev() {
        let prev = rev.last().unwrap();
        let inner = b.diag(n).add(&prev.mul(b.down(n + 1))?)?;
        rev.push(inner.solve_right(b.up(n - 1))?.neg());
    }
    rev.reverse();
    Ok(LevelFamily::new(1, rev))
}

/// One-step downward passage matrices `G^{n,n−1}` for `n = 1..N`.
pub fn g_steps<A: BlockAlgebra>(b: &LevelBlocks<A>) -> Result<LevelFamily<A>> {
    g_steps_down_to(b, 1)
}

/// `G^{n,n−1}` for `n = lowest..N` only.
pub fn g_steps_down_to<A: BlockAlgebra>(b: &LevelBlocks<A>, lowest: usize) -> Result<LevelFamily<A>> {
    let n_top = b.top_level();
    assert!(lowest >= 1 && lowest <= n_top);
    let mut rev: Vec<A> = Vec::with_capacity(n_top + 1 - lowest);
    rev.push(b.diag(n_top).solve_left(b.down(n_top))?.neg());
    for n in (lowest..n_top).rev() {
        let prev = rev.last().unwrap();
        let inner = b.diag(n).add(&b.up(n).mul(prev)?)?;
        rev.push(inner.solve_left(b.down(n))?.neg());
    }
    rev.reverse();
    Ok(LevelFamily::new(lowest, rev))
}

/// One-step upward passage matrices `H^{n,n+1}` for `n = 0..N−1`.
pub fn h_steps<A: BlockAlgebra>(b: &LevelBlocks<A>) -> Result<LevelFamily<A>> {
    h_steps_up_to(b, b.top_level() - 1)
}

/// `H^{n,n+1}` for `n = 0..=highest` only.
pub fn h_steps_up_to<A: BlockAlgebra>(b: &LevelBlocks<A>, highest: usize) -> Result<LevelFamily<A>> {
    let n_top = b.top_level();
    assert!(highest < n_top);
    let mut items: Vec<A> = Vec::with_capacity(highest + 1);
    items.push(b.diag(0).solve_left(b.up(0))?.neg());
    for n in 1..=highest {
        let inner = b.diag(n).add(&b.down(n).mul(&items[n - 1])?)?;
        items.push(inner.solve_left(b.up(n))?.neg());
    }
    Ok(LevelFamily::new(0, items))
}

/// Ordered product of step matrices between `from` and `to`
/// (`G` steps when descending, `H` steps when ascending).
pub fn chain_product<A: BlockAlgebra>(steps: &LevelFamily<A>, from: usize, to: usize) -> Result<A> {
    let mut acc = steps.at(from).clone();
    if from > to {
        for n in (to + 1..from).rev() {
            acc = acc.mul(steps.at(n))?;
        }
    } else {
        for n in from + 1..to {
            acc = acc.mul(steps.at(n))?;
        }
    }
    Ok(acc)
}

/// Matrix whose inverse gives the expected discounted time in level `n`
/// per visit: `(Q^{[n,n]} − sI) + R̂^{(n−1)} Q^{[n−1,n]} + R̃^{(n+1)} Q^{[n+1,n]}`.
pub fn level_kernel<A: BlockAlgebra>(
    b: &LevelBlocks<A>,
    rhat: &LevelFamily<A>,
    rtilde: &LevelFamily<A>,
    n: usize,
) -> Result<A> {
    let mut k = b.diag(n).clone();
    if n > 0 {
        k = k.add(&rhat.at(n - 1).mul(b.up(n - 1))?)?;
    }
    if n < b.top_level() {
        k = k.add(&rtilde.at(n + 1).mul(b.down(n + 1))?)?;
    }
    Ok(k)
}
