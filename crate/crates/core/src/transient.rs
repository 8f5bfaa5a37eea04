//! Transient level/phase distribution through its Laplace transform.
//!
//! `f̃_n(s) = ∫ e^{−st} P(X(t) = n, φ(t) = ·) dt` is assembled level by level:
//! the discounted probability of reaching level `n` from the start (a `G` or
//! `H` chain with the full taboo clock) times the discounted time spent in
//! `n` per entrance, the inverse of a level kernel built from `R̂(s)` and
//! `R̃(s)`. Time-domain values come from Euler-accelerated Fourier-series
//! inversion on a Bromwich contour.

use num_complex::Complex;

use crate::error::{QbdError, Result};
use crate::levels::{self, LevelBlocks, LevelFamily};
use crate::linalg::{BlockAlgebra, DerivBundle, Matrix, ParamNames};
use crate::model::{LevelVector, ParamQbdModel, QbdModel};
use crate::scalar::{Real, Scalar};

/// Start level, start phase distribution and evaluation times.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientQuery<R> {
    pub n0: usize,
    pub alpha: Vec<R>,
    pub times: Vec<R>,
}

impl<R: Real> TransientQuery<R> {
    pub fn new(n0: usize, alpha: Vec<R>, times: Vec<R>) -> Result<Self> {
        if alpha.iter().any(|&a| !a.finite() || a < R::zero()) {
            return Err(QbdError::InvalidArgument("initial phase distribution has a negative or non-finite entry".into()));
        }
        let total = alpha.iter().fold(R::zero(), |acc, &a| acc + a);
        let tol = R::from_f64_lossy(1e-12).max(R::epsilon() * R::from_f64_lossy(8.0));
        if (total - R::one()).abs() > tol {
            return Err(QbdError::InvalidArgument(format!("initial phase distribution sums to {total}, not 1")));
        }
        if let Some(t) = times.iter().find(|&&t| !t.finite() || t <= R::zero()) {
            return Err(QbdError::InvalidArgument(format!("evaluation times must be positive and finite, got {t}")));
        }
        Ok(Self { n0, alpha, times })
    }

    /// Start in phase `phase` of level `n0` with certainty.
    pub fn point(n0: usize, phase: usize, phases_at_n0: usize, times: Vec<R>) -> Result<Self> {
        if phase >= phases_at_n0 {
            return Err(QbdError::InvalidArgument(format!("phase {phase} out of range for {phases_at_n0} phases")));
        }
        let mut alpha = vec![R::zero(); phases_at_n0];
        alpha[phase] = R::one();
        Self::new(n0, alpha, times)
    }

    fn check_against<T: Scalar>(&self, model: &QbdModel<T>) -> Result<()> {
        if self.n0 > model.top_level() {
            return Err(QbdError::InvalidArgument(format!(
                "start level {} above top level {}",
                self.n0,
                model.top_level()
            )));
        }
        if self.alpha.len() != model.phase_count(self.n0) {
            return Err(QbdError::DimensionMismatch(format!(
                "alpha has {} entries but level {} has {} phases",
                self.alpha.len(),
                self.n0,
                model.phase_count(self.n0)
            )));
        }
        Ok(())
    }

    fn alpha_row<T: Scalar<Real = R>>(&self) -> Matrix<T> {
        Matrix::row_vector(&self.alpha.iter().map(|&a| T::from_real(a)).collect::<Vec<_>>()).expect("finite entries")
    }
}

/// Parameters of the Euler inversion algorithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionConfig {
    /// Contour abscissa parameter; discretization error is about `e^{−A}`.
    pub a: f64,
    /// Index of the first partial sum entering the average.
    pub terms: usize,
    /// Order of the binomial average (number of partial sums minus one).
    pub euler_terms: usize,
}

impl Default for InversionConfig {
    fn default() -> Self {
        Self { a: 18.4, terms: 15, euler_terms: 11 }
    }
}

impl InversionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.a > 0.0) {
            return Err(QbdError::InvalidArgument(format!("inversion parameter A must be positive, got {}", self.a)));
        }
        if self.terms < 1 || self.euler_terms < 1 {
            return Err(QbdError::InvalidArgument("inversion term counts must be at least 1".into()));
        }
        Ok(())
    }

    /// The complex abscissas at which a transform is sampled to invert at `t`.
    pub fn abscissas<R: Real>(&self, t: R) -> Vec<Complex<R>> {
        let two_t = t + t;
        let a = R::from_f64_lossy(self.a);
        let pi = R::from_f64_lossy(std::f64::consts::PI);
        (0..=self.terms + self.euler_terms)
            .map(|k| {
                let im = R::from_f64_lossy(2.0 * k as f64) * pi;
                Complex::new(a / two_t, im / two_t)
            })
            .collect()
    }
}

/// `R̃^{(n)}(s)` for `n = 1..N`.
pub fn rtilde_family<T: Scalar>(model: &QbdModel<T>, s: T) -> Result<LevelFamily<Matrix<T>>> {
    levels::rtilde(&LevelBlocks::from_model(model).shifted(s, |_| true))
}

/// Per-level rows `f̃_n(s)` on blocks already shifted by `s` at every level.
fn transform_rows<A: BlockAlgebra>(b: &LevelBlocks<A>, n0: usize, alpha: Matrix<A::Field>) -> Result<Vec<A>> {
    let top = b.top_level();
    let alpha = b.diag(n0).constant_like(alpha);
    let mut reach: Vec<Option<A>> = vec![None; top + 1];
    if n0 > 0 {
        let g = levels::g_steps_down_to(b, 1)?;
        let mut v = alpha.clone();
        for n in (0..n0).rev() {
            v = v.mul(g.at(n + 1))?;
            reach[n] = Some(v.clone());
        }
    }
    if n0 < top {
        let h = levels::h_steps(b)?;
        let mut v = alpha.clone();
        for n in n0 + 1..=top {
            v = v.mul(h.at(n - 1))?;
            reach[n] = Some(v.clone());
        }
    }
    reach[n0] = Some(alpha);

    let kernels: Vec<A> = if top == 0 {
        vec![b.diag(0).clone()]
    } else {
        let rh = levels::rhat(b)?;
        let rt = levels::rtilde(b)?;
        (0..=top).map(|n| levels::level_kernel(b, &rh, &rt, n)).collect::<Result<_>>()?
    };
    reach
        .into_iter()
        .zip(&kernels)
        .map(|(v, k)| Ok(k.solve_right(&v.expect("every level is reached"))?.neg()))
        .collect()
}

fn row_values<T: Scalar>(m: &Matrix<T>) -> Vec<T> {
    m.as_slice().to_vec()
}

/// `f̃(s)` for a model over the field of `s`.
pub fn transient_transform<T: Scalar>(model: &QbdModel<T>, query: &TransientQuery<T::Real>, s: T) -> Result<LevelVector<T>> {
    query.check_against(model)?;
    let b = LevelBlocks::from_model(model).shifted(s, |_| true);
    let rows = transform_rows(&b, query.n0, query.alpha_row())?;
    Ok(LevelVector::new(rows.iter().map(row_values).collect()))
}

/// `f̃(s)` with its θ-partials.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformSensitivity<T> {
    pub value: LevelVector<T>,
    pub params: ParamNames,
    pub partials: Vec<LevelVector<T>>,
}

pub fn transient_transform_sensitivity<T: Scalar>(
    pm: &ParamQbdModel<T>,
    query: &TransientQuery<T::Real>,
    s: T,
) -> Result<TransformSensitivity<T>> {
    query.check_against(pm.base())?;
    let b = LevelBlocks::from_param_model(pm).shifted(s, |_| true);
    let rows: Vec<DerivBundle<T>> = transform_rows(&b, query.n0, query.alpha_row())?;
    Ok(TransformSensitivity {
        value: LevelVector::new(rows.iter().map(|r| row_values(r.value())).collect()),
        params: pm.params().clone(),
        partials: (0..pm.num_params())
            .map(|i| LevelVector::new(rows.iter().map(|r| row_values(r.partial(i))).collect()))
            .collect(),
    })
}

/// Inverts a vector-valued transform at time `t` by the Euler algorithm.
///
/// The evaluator is called once per abscissa of [`InversionConfig::abscissas`],
/// and must return vectors of one fixed length.
pub fn invert_transform<R: Real>(
    mut evaluator: impl FnMut(Complex<R>) -> Result<Vec<Complex<R>>>,
    t: R,
    config: &InversionConfig,
) -> Result<Vec<R>> {
    config.validate()?;
    if !(t.finite() && t > R::zero()) {
        return Err(QbdError::InvalidArgument(format!("inversion time must be positive, got {t}")));
    }
    let samples = config
        .abscissas(t)
        .into_iter()
        .map(|s| {
            evaluator(s).map_err(|e| match e {
                QbdError::EvaluatorFailure(m) => QbdError::EvaluatorFailure(m),
                e => QbdError::EvaluatorFailure(format!("at s = {s}: {e}")),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let width = samples[0].len();
    if samples.iter().any(|v| v.len() != width) {
        return Err(QbdError::EvaluatorFailure("evaluator returned vectors of varying length".into()));
    }
    euler_average(&samples, t, config)
}

/// Combines transform samples at [`InversionConfig::abscissas`] into `f(t)`.
pub fn euler_average<R: Real>(samples: &[Vec<Complex<R>>], t: R, config: &InversionConfig) -> Result<Vec<R>> {
    let (n, m) = (config.terms, config.euler_terms);
    if samples.len() != n + m + 1 {
        return Err(QbdError::InvalidArgument(format!("expected {} samples, got {}", n + m + 1, samples.len())));
    }
    let width = samples[0].len();
    let half = R::from_f64_lossy(0.5);
    let mut partial: Vec<R> = samples[0].iter().map(|z| z.re * half).collect();
    let mut avg = vec![R::zero(); width];
    let mut weight = 1.0_f64;
    let scale = 2.0_f64.powi(-(m as i32));
    for (k, sample) in samples.iter().enumerate().skip(1) {
        let sign = if k % 2 == 0 { R::one() } else { -R::one() };
        for (p, z) in partial.iter_mut().zip(sample) {
            *p += sign * z.re;
        }
        if k >= n {
            let j = k - n;
            let w = R::from_f64_lossy(weight * scale);
            for (a, p) in avg.iter_mut().zip(&partial) {
                *a += w * *p;
            }
            weight = weight * (m - j) as f64 / (j + 1) as f64;
        }
    }
    let factor = (R::from_f64_lossy(config.a) * half).exp() / t;
    Ok(avg.into_iter().map(|a| a * factor).collect())
}

/// Entries in `[−tol, 0)` are set to zero (renormalizing if any were);
/// anything more negative is an error.
fn clamp_distribution<R: Real>(v: &mut [R], t: R) -> Result<()> {
    let tol = R::from_f64_lossy(1e-9).max(R::epsilon() * R::from_f64_lossy(1e4));
    let mut clamped = false;
    for x in v.iter_mut() {
        if *x < -tol {
            return Err(QbdError::NoConvergence(format!(
                "inversion at t = {t} produced probability {x:e} below the clamp tolerance"
            )));
        }
        if *x < R::zero() {
            *x = R::zero();
            clamped = true;
        }
    }
    if clamped {
        let total = v.iter().fold(R::zero(), |acc, &x| acc + x);
        for x in v.iter_mut() {
            *x /= total;
        }
    }
    Ok(())
}

/// `f(t)` for every time in the query.
pub fn transient_distribution<R: Real>(
    model: &QbdModel<R>,
    query: &TransientQuery<R>,
    config: &InversionConfig,
) -> Result<Vec<LevelVector<R>>> {
    query.check_against(model)?;
    let cmodel: QbdModel<Complex<R>> = model.lift();
    query
        .times
        .iter()
        .map(|&t| transient_at(&cmodel, query, t, config))
        .collect()
}

/// `f(t)` at a single time.
pub fn transient_at<R: Real>(
    cmodel: &QbdModel<Complex<R>>,
    query: &TransientQuery<R>,
    t: R,
    config: &InversionConfig,
) -> Result<LevelVector<R>> {
    let mut flat = invert_transform(|s| Ok(transient_transform(cmodel, query, s)?.flatten()), t, config)?;
    clamp_distribution(&mut flat, t)?;
    LevelVector::from_flat(cmodel.phases(), &flat)
}

/// `f(t)` and `∂f(t)/∂θᵢ` at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientSensitivity<R> {
    pub t: R,
    pub value: LevelVector<R>,
    pub params: ParamNames,
    pub partials: Vec<LevelVector<R>>,
}

impl<R: Scalar> TransientSensitivity<R> {
    pub fn partial(&self, name: &str) -> Option<&LevelVector<R>> {
        self.params.iter().position(|p| p == name).map(|i| &self.partials[i])
    }
}

/// Inverts the value and every partial transform, one time at a time.
pub fn transient_sensitivity<R: Real>(
    pm: &ParamQbdModel<R>,
    query: &TransientQuery<R>,
    config: &InversionConfig,
) -> Result<Vec<TransientSensitivity<R>>> {
    query.check_against(pm.base())?;
    let cpm: ParamQbdModel<Complex<R>> = pm.lift();
    query.times.iter().map(|&t| transient_sensitivity_at(&cpm, query, t, config)).collect()
}

pub fn transient_sensitivity_at<R: Real>(
    cpm: &ParamQbdModel<Complex<R>>,
    query: &TransientQuery<R>,
    t: R,
    config: &InversionConfig,
) -> Result<TransientSensitivity<R>> {
    let phases = cpm.base().phases().to_vec();
    let k = cpm.num_params();
    let flat = invert_transform(
        |s| {
            let ts = transient_transform_sensitivity(cpm, query, s)?;
            let mut out = ts.value.flatten();
            for p in &ts.partials {
                out.extend(p.flatten());
            }
            Ok(out)
        },
        t,
        config,
    )?;
    let len = flat.len() / (k + 1);
    let mut value = flat[..len].to_vec();
    clamp_distribution(&mut value, t)?;
    let partials = (0..k)
        .map(|i| LevelVector::from_flat(&phases, &flat[(i + 1) * len..(i + 2) * len]))
        .collect::<Result<_>>()?;
    Ok(TransientSensitivity { t, value: LevelVector::from_flat(&phases, &value)?, params: cpm.params().clone(), partials })
}
