#![allow(dead_code)]

use qbd_core::model::{build_mmpp_queue, build_perturbed, build_two_class, close_rows};
use qbd_core::{BlockSet, LevelVector, Matrix, ParamQbdModel, QbdModel};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

fn rate(rng: &mut StdRng) -> f64 {
    rng.gen_range(0.1..5.0)
}

/// Irreducible model with `N ≤ max_top` and at most `max_phases` phases per
/// level; level-crossing blocks are dense so every level pair communicates.
pub fn random_model(rng: &mut StdRng, max_top: usize, max_phases: usize) -> QbdModel<f64> {
    let top = rng.gen_range(1..=max_top);
    let phases: Vec<usize> = (0..=top).map(|_| rng.gen_range(1..=max_phases)).collect();
    let mut b = BlockSet::zeros(&phases);
    for l in 0..=top {
        let p = phases[l];
        for i in 0..p {
            for j in 0..p {
                if i != j && rng.gen_bool(0.7) {
                    b.diag[l][(i, j)] = rate(rng);
                }
            }
        }
    }
    for l in 0..top {
        for i in 0..phases[l] {
            for j in 0..phases[l + 1] {
                b.up[l][(i, j)] = rate(rng);
            }
        }
        for i in 0..phases[l + 1] {
            for j in 0..phases[l] {
                b.down[l][(i, j)] = rate(rng);
            }
        }
    }
    QbdModel::new(phases, close_rows(b)).unwrap()
}

/// Single-phase birth-death chain with random rates.
pub fn random_birth_death(rng: &mut StdRng, max_top: usize) -> QbdModel<f64> {
    let top = rng.gen_range(1..=max_top);
    let phases = vec![1; top + 1];
    let mut b = BlockSet::zeros(&phases);
    for l in 0..top {
        b.up[l][(0, 0)] = rate(rng);
        b.down[l][(0, 0)] = rate(rng);
    }
    QbdModel::new(phases, close_rows(b)).unwrap()
}

/// The three builder families, each a map from a parameter vector to a model.
#[derive(Debug, Clone)]
pub enum Family {
    Mmpp { t: Matrix<f64>, n: usize },
    TwoClass { n: usize },
    Perturbed { base: QbdModel<f64>, directions: Vec<BlockSet<f64>> },
}

impl Family {
    pub fn build(&self, theta: &[f64]) -> ParamQbdModel<f64> {
        match self {
            Family::Mmpp { t, n } => {
                let k = t.rows();
                build_mmpp_queue(t, &theta[..k], &theta[k..], *n).unwrap()
            }
            Family::TwoClass { n } => build_two_class(theta[0], theta[1], theta[2], theta[3], *n).unwrap(),
            Family::Perturbed { base, directions } => build_perturbed(base, directions, theta).unwrap(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Mmpp { .. } => "mmpp-queue",
            Family::TwoClass { .. } => "two-class",
            Family::Perturbed { .. } => "perturbed",
        }
    }

    pub fn random_theta(&self, rng: &mut StdRng) -> Vec<f64> {
        match self {
            Family::Mmpp { t, .. } => (0..2 * t.rows()).map(|_| rate(rng)).collect(),
            Family::TwoClass { .. } => (0..4).map(|_| rate(rng)).collect(),
            Family::Perturbed { directions, .. } => directions.iter().map(|_| rng.gen_range(0.1..0.5)).collect(),
        }
    }
}

/// Random generator on `k` phases with all off-diagonal rates positive.
pub fn random_phase_generator(rng: &mut StdRng, k: usize) -> Matrix<f64> {
    let mut t = Matrix::zeros(k, k);
    for i in 0..k {
        let mut s = 0.0;
        for j in 0..k {
            if i != j {
                t[(i, j)] = rate(rng);
                s += t[(i, j)];
            }
        }
        t[(i, i)] = -s;
    }
    t
}

/// Generator difference with nonnegative off-diagonal entries.
pub fn random_direction(rng: &mut StdRng, phases: &[usize]) -> BlockSet<f64> {
    let template = QbdModel::new(phases.to_vec(), BlockSet::zeros(phases)).unwrap();
    let mut b = template.blocks().clone();
    for (l, &p) in phases.iter().enumerate() {
        for i in 0..p {
            for j in 0..p {
                if i != j && rng.gen_bool(0.5) {
                    b.diag[l][(i, j)] = rng.gen_range(0.0..2.0);
                }
            }
        }
    }
    for l in 0..phases.len() - 1 {
        for i in 0..phases[l] {
            for j in 0..phases[l + 1] {
                if rng.gen_bool(0.5) {
                    b.up[l][(i, j)] = rng.gen_range(0.0..2.0);
                }
            }
        }
    }
    close_rows(b)
}

/// One instance of each builder family with small dimensions.
pub fn families(rng: &mut StdRng) -> Vec<Family> {
    let k = rng.gen_range(1..=3);
    let base = random_model(rng, 4, 3);
    let directions = (0..2).map(|_| random_direction(rng, base.phases())).collect();
    vec![
        Family::Mmpp { t: random_phase_generator(rng, k), n: rng.gen_range(2..=5) },
        Family::TwoClass { n: rng.gen_range(1..=4) },
        Family::Perturbed { base, directions },
    ]
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// `‖a − b‖∞ / max(‖b‖∞, 1e-3)`: relative error against a reference, with
/// an absolute floor for references that are zero or nearly so.
pub fn rel_err(a: &[f64], reference: &[f64]) -> f64 {
    max_abs_diff(a, reference) / max_abs(reference).max(1e-3)
}

pub fn flat(v: &LevelVector<f64>) -> Vec<f64> {
    v.flatten()
}

pub fn mm12() -> QbdModel<f64> {
    let m = |x: f64| Matrix::from_rows(&[[x]]).unwrap();
    QbdModel::new(
        vec![1, 1, 1],
        BlockSet { diag: vec![m(-1.0), m(-3.0), m(-2.0)], up: vec![m(1.0), m(1.0)], down: vec![m(2.0), m(2.0)] },
    )
    .unwrap()
}

/// M/M/1/2 with level-independent service and partials for `lambda`, `mu`.
pub fn mm12_param(lambda: f64, mu: f64) -> ParamQbdModel<f64> {
    let m = |x: f64| Matrix::from_rows(&[[x]]).unwrap();
    let base = QbdModel::new(
        vec![1, 1, 1],
        BlockSet {
            diag: vec![m(-lambda), m(-lambda - mu), m(-mu)],
            up: vec![m(lambda), m(lambda)],
            down: vec![m(mu), m(mu)],
        },
    )
    .unwrap();
    let dl = BlockSet { diag: vec![m(-1.0), m(-1.0), m(0.0)], up: vec![m(1.0), m(1.0)], down: vec![m(0.0), m(0.0)] };
    let dm = BlockSet { diag: vec![m(0.0), m(-1.0), m(-1.0)], up: vec![m(0.0), m(0.0)], down: vec![m(1.0), m(1.0)] };
    ParamQbdModel::new(base, qbd_core::linalg::param_names(&["lambda", "mu"]), vec![dl, dm]).unwrap()
}

/// Levels relabeled `n ↦ N − n`.
pub fn reflect(model: &QbdModel<f64>) -> QbdModel<f64> {
    let top = model.top_level();
    let phases: Vec<usize> = model.phases().iter().rev().copied().collect();
    let b = model.blocks();
    let diag = b.diag.iter().rev().cloned().collect();
    let up = (0..top).map(|n| model.down(top - n).clone()).collect();
    let down = (1..=top).map(|n| model.up(top - n).clone()).collect();
    QbdModel::new(phases, BlockSet { diag, up, down }).unwrap()
}
