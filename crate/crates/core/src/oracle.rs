//! Brute-force references on the assembled generator.
//!
//! Everything here works on the dense `|S| × |S|` matrix with nalgebra's
//! elimination and exponential, never touching the level recursions, so
//! agreement with the solvers is independent evidence.

use nalgebra::DMatrix;

use crate::error::{QbdError, Result};
use crate::linalg::Matrix;
use crate::model::{state_offsets, QbdModel};
use crate::passage::TabooSet;

fn to_dense(m: &Matrix<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

fn from_dense(d: &DMatrix<f64>) -> Matrix<f64> {
    let data = (0..d.nrows()).flat_map(|i| (0..d.ncols()).map(move |j| d[(i, j)])).collect();
    Matrix::new(d.nrows(), d.ncols(), data).expect("finite dense result")
}

/// LU solve that treats tiny relative pivots as singular.
fn solve_dense(a: DMatrix<f64>, b: DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let scale = a.amax();
    let lu = a.lu();
    let u = lu.u();
    let min_pivot = u.diagonal().iter().fold(f64::INFINITY, |m, x| m.min(x.abs()));
    if !(scale > 0.0) || min_pivot <= 1e-12 * scale {
        return Err(QbdError::SingularSystem(format!("{what}: pivot {min_pivot:e} relative to scale {scale:e}")));
    }
    lu.solve(&b).ok_or_else(|| QbdError::SingularSystem(what.to_string()))
}

/// Normalized left null vector of an irreducible generator.
pub fn direct_stationary(q: &Matrix<f64>) -> Result<Vec<f64>> {
    let n = q.rows();
    if n == 0 || q.cols() != n {
        return Err(QbdError::DimensionMismatch(format!("generator is {}x{}", q.rows(), q.cols())));
    }
    let mut a = to_dense(q).transpose();
    a.row_mut(n - 1).fill(1.0);
    let mut b = DMatrix::zeros(n, 1);
    b[(n - 1, 0)] = 1.0;
    let x = solve_dense(a, b, "stationary null space has dimension above one")?;
    Ok(x.iter().copied().collect())
}

/// `p0·exp(Qt)` by a Poisson-weighted sum of powers of `I + Q/Λ`.
pub fn uniformization(q: &Matrix<f64>, p0: &[f64], t: f64) -> Result<Vec<f64>> {
    let n = q.rows();
    if p0.len() != n || q.cols() != n {
        return Err(QbdError::DimensionMismatch(format!("p0 has {} entries for a {n}x{n} generator", p0.len())));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(QbdError::InvalidArgument(format!("time must be nonnegative, got {t}")));
    }
    let max_rate = (0..n).map(|i| q[(i, i)].abs()).fold(0.0, f64::max);
    if t == 0.0 || max_rate == 0.0 {
        return Ok(p0.to_vec());
    }
    let lambda = 1.05 * max_rate;
    let mut p = DMatrix::identity(n, n);
    p += to_dense(q) / lambda;
    let pt = p.transpose();

    let chunks = (lambda * t / 400.0).ceil().max(1.0) as usize;
    let dt = t / chunks as f64;
    let tail = 1e-12 / chunks as f64;
    let mut v = DMatrix::from_column_slice(n, 1, p0);
    for _ in 0..chunks {
        let lt = lambda * dt;
        let mut weight = (-lt).exp();
        let mut mass = weight;
        let mut term = v.clone();
        let mut acc = &term * weight;
        let mut k = 0usize;
        while 1.0 - mass > tail && k < 100_000 {
            k += 1;
            term = &pt * term;
            weight *= lt / k as f64;
            mass += weight;
            acc += &term * weight;
        }
        v = acc;
    }
    Ok(v.iter().copied().collect())
}

/// `p0·exp(Qt)` by nalgebra's scaling-and-squaring exponential.
pub fn expm_transient(q: &Matrix<f64>, p0: &[f64], t: f64) -> Result<Vec<f64>> {
    let n = q.rows();
    if p0.len() != n {
        return Err(QbdError::DimensionMismatch(format!("p0 has {} entries for {n} states", p0.len())));
    }
    let e = (to_dense(q) * t).exp();
    let row = DMatrix::from_row_slice(1, n, p0) * e;
    Ok(row.iter().copied().collect())
}

/// Passage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Moment {
    Transform,
    First,
}

/// The transient part of a passage problem on the dense generator.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorbingSlice {
    /// Generator restricted to the states not yet absorbed.
    pub t: Matrix<f64>,
    /// Rates from those states into the phases of the target level.
    pub exit: Matrix<f64>,
    /// Whether each kept state belongs to a taboo level.
    pub clocked: Vec<bool>,
    /// Flat indices (within the slice) of the start level's phases.
    pub start_rows: Vec<usize>,
}

impl AbsorbingSlice {
    pub fn new(model: &QbdModel<f64>, from: usize, to: usize, taboo: &TabooSet) -> Result<Self> {
        let top = model.top_level();
        if from == to || from > top || to > top {
            return Err(QbdError::InvalidArgument(format!("passage {from} -> {to} on levels 0..={top}")));
        }
        let kept: Vec<usize> = if from > to { (to + 1..=top).collect() } else { (0..to).collect() };
        let q = model.assemble();
        let offsets = state_offsets(model.phases());
        let states: Vec<(usize, usize)> = kept.iter().flat_map(|&l| (offsets[l]..offsets[l + 1]).map(move |g| (l, g))).collect();
        let k = states.len();
        let target: Vec<usize> = (offsets[to]..offsets[to + 1]).collect();

        let mut t = Matrix::zeros(k, k);
        let mut exit = Matrix::zeros(k, target.len());
        for (i, &(_, gi)) in states.iter().enumerate() {
            for (j, &(_, gj)) in states.iter().enumerate() {
                t[(i, j)] = q[(gi, gj)];
            }
            for (j, &gj) in target.iter().enumerate() {
                exit[(i, j)] = q[(gi, gj)];
            }
        }
        let clocked = states.iter().map(|&(l, _)| taboo.contains(l)).collect();
        let start_rows = states.iter().enumerate().filter(|(_, &(l, _))| l == from).map(|(i, _)| i).collect();
        Ok(Self { t, exit, clocked, start_rows })
    }

    fn mask(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.clocked.len(), self.clocked.len(), |i, j| if i == j && self.clocked[i] { 1.0 } else { 0.0 })
    }

    fn start_block(&self, full: &DMatrix<f64>) -> Matrix<f64> {
        let rows = DMatrix::from_fn(self.start_rows.len(), full.ncols(), |i, j| full[(self.start_rows[i], j)]);
        from_dense(&rows)
    }

    /// `(s·D_𝒜 − T)⁻¹ · exit` restricted to the start level.
    pub fn transform(&self, s: f64) -> Result<Matrix<f64>> {
        let a = self.mask() * s - to_dense(&self.t);
        let full = solve_dense(a, to_dense(&self.exit), "passage resolvent")?;
        Ok(self.start_block(&full))
    }

    /// `(−T)⁻¹ · D_𝒜 · (−T)⁻¹ · exit` restricted to the start level.
    pub fn moment1(&self) -> Result<Matrix<f64>> {
        let neg_t = -to_dense(&self.t);
        let g0 = solve_dense(neg_t.clone(), to_dense(&self.exit), "passage resolvent")?;
        let full = solve_dense(neg_t, self.mask() * g0, "occupancy resolvent")?;
        Ok(self.start_block(&full))
    }
}

pub fn absorbing_passage(
    model: &QbdModel<f64>,
    from: usize,
    to: usize,
    taboo: &TabooSet,
    s: f64,
    moment: Moment,
) -> Result<Matrix<f64>> {
    let slice = AbsorbingSlice::new(model, from, to, taboo)?;
    match moment {
        Moment::Transform => slice.transform(s),
        Moment::First => slice.moment1(),
    }
}

/// Probability that the embedded jump chain of a single-phase model reaches
/// level `to` from `from` without visiting any level in `avoid`, by
/// Gauss-Seidel sweeps over the hitting equations.
pub fn jump_chain_passage(model: &QbdModel<f64>, from: usize, to: usize, avoid: &TabooSet) -> Result<f64> {
    if model.phases().iter().any(|&p| p != 1) {
        return Err(QbdError::InvalidArgument("jump-chain passage needs one phase per level".into()));
    }
    let top = model.top_level();
    let (lo, hi) = if from > to { (to, top) } else { (0, to) };
    let mut h = vec![0.0; top + 1];
    h[to] = 1.0;
    let free: Vec<usize> = (lo..=hi).filter(|&n| n != to && !avoid.contains(n)).collect();
    for _ in 0..1_000_000 {
        let mut change: f64 = 0.0;
        for &n in &free {
            let up = if n < top && n < hi { model.up(n)[(0, 0)] } else { 0.0 };
            let down = if n > lo { model.down(n)[(0, 0)] } else { 0.0 };
            let up_all = if n < top { model.up(n)[(0, 0)] } else { 0.0 };
            let down_all = if n > 0 { model.down(n)[(0, 0)] } else { 0.0 };
            let total = up_all + down_all;
            let next = (up * if up > 0.0 { h[n + 1] } else { 0.0 } + down * if down > 0.0 { h[n - 1] } else { 0.0 }) / total;
            change = change.max((next - h[n]).abs());
            h[n] = next;
        }
        if change < 1e-16 {
            return Ok(h[from]);
        }
    }
    Err(QbdError::NoConvergence("jump-chain sweeps did not settle".into()))
}

/// Central differences `(map(θ + h eᵢ) − map(θ − h eᵢ)) / 2h`, one array per parameter.
pub fn finite_difference(
    map: impl Fn(&[f64]) -> Result<Vec<f64>>,
    theta: &[f64],
    h: f64,
) -> Result<Vec<Vec<f64>>> {
    (0..theta.len())
        .map(|i| {
            let mut plus = theta.to_vec();
            let mut minus = theta.to_vec();
            plus[i] += h;
            minus[i] -= h;
            let (a, b) = (map(&plus)?, map(&minus)?);
            if a.len() != b.len() {
                return Err(QbdError::DimensionMismatch("map output length changed with θ".into()));
            }
            Ok(a.iter().zip(&b).map(|(x, y)| (x - y) / (2.0 * h)).collect())
        })
        .collect()
}
