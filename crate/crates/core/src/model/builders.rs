//! Parameterized model families.
//!
//! All three families are linear in their parameters, so each partial block
//! set is the generator obtained with that parameter set to one and every
//! other parameter (and any fixed part) set to zero.


use super::{validate, BlockSet, Diagnostic, ParamQbdModel, QbdModel};
use crate::error::{QbdError, Result};
use crate::linalg::{param_names, Matrix};
use crate::scalar::Real;

fn check_rate<R: Real>(name: String, v: R) -> Result<()> {
    if v.finite() && v > R::zero() {
        Ok(())
    } else {
        Err(QbdError::InvalidRate { name, value: v.to_f64_lossy() })
    }
}

fn check_levels(n: usize) -> Result<()> {
    if n == 0 {
        return Err(QbdError::InvalidArgument("the level bound N must be at least 1".into()));
    }
    Ok(())
}

/// Overwrites every diagonal entry of the diagonal blocks so rows sum to zero.
pub fn close_rows<R: Real>(mut b: BlockSet<R>) -> BlockSet<R> {
    let n = b.diag.len() - 1;
    for l in 0..=n {
        for i in 0..b.diag[l].rows() {
            let mut out = R::zero();
            for (j, &v) in b.diag[l].row(i).iter().enumerate() {
                if j != i {
                    out += v;
                }
            }
            if l < n {
                out += b.up[l].row(i).iter().fold(R::zero(), |a, &x| a + x);
            }
            if l > 0 {
                out += b.down[l - 1].row(i).iter().fold(R::zero(), |a, &x| a + x);
            }
            b.diag[l][(i, i)] = -out;
        }
    }
    b
}

fn mmpp_offdiag<R: Real>(t: Option<&Matrix<R>>, lambdas: &[R], mus: &[R], n: usize) -> BlockSet<R> {
    let k = lambdas.len();
    let mut b = BlockSet::zeros(&vec![k; n + 1]);
    for l in 0..=n {
        if let Some(t) = t {
            for i in 0..k {
                for j in 0..k {
                    if i != j {
                        b.diag[l][(i, j)] = t[(i, j)];
                    }
                }
            }
        }
        for i in 0..k {
            if l < n {
                b.up[l][(i, i)] = lambdas[i];
            }
            if l > 0 {
                b.down[l - 1][(i, i)] = R::from_usize(l).unwrap() * mus[i];
            }
        }
    }
    b
}

/// Queue in a Markov-modulated environment.
///
/// The environment with generator `t` switches phases within a level;
/// customers arrive at rate `lambdas[i]` below level `n` and each of the
/// `l` customers present at level `l` is served at rate `mus[i]`.
/// Parameters are ordered `lambda1..lambdak, mu1..muk`.
pub fn build_mmpp_queue<R: Real>(t: &Matrix<R>, lambdas: &[R], mus: &[R], n: usize) -> Result<ParamQbdModel<R>> {
    let k = lambdas.len();
    if k == 0 || mus.len() != k || t.shape() != (k, k) {
        return Err(QbdError::DimensionMismatch(format!(
            "phase generator is {}x{} with {} arrival and {} service rates",
            t.rows(),
            t.cols(),
            k,
            mus.len()
        )));
    }
    for i in 0..k {
        for j in 0..k {
            if i != j && (t[(i, j)] < R::zero() || !t[(i, j)].finite()) {
                return Err(QbdError::InvalidSubgenerator(format!("entry ({i},{j}) is {}", t[(i, j)])));
            }
        }
    }
    if let Some((i, s)) = t.row_sums().into_iter().enumerate().find(|(_, s)| !(s.abs() <= R::GENERATOR_TOL)) {
        return Err(QbdError::InvalidSubgenerator(format!("row {i} sums to {s}")));
    }
    for (i, &v) in lambdas.iter().enumerate() {
        check_rate(format!("lambda{}", i + 1), v)?;
    }
    for (i, &v) in mus.iter().enumerate() {
        check_rate(format!("mu{}", i + 1), v)?;
    }
    check_levels(n)?;

    let base = close_rows(mmpp_offdiag(Some(t), lambdas, mus, n));
    let zeros = vec![R::zero(); k];
    let mut names = Vec::with_capacity(2 * k);
    let mut partials = Vec::with_capacity(2 * k);
    for i in 0..k {
        let mut e = zeros.clone();
        e[i] = R::one();
        names.push(format!("lambda{}", i + 1));
        partials.push(close_rows(mmpp_offdiag(None, &e, &zeros, n)));
    }
    for i in 0..k {
        let mut e = zeros.clone();
        e[i] = R::one();
        names.push(format!("mu{}", i + 1));
        partials.push(close_rows(mmpp_offdiag(None, &zeros, &e, n)));
    }
    ParamQbdModel::new(QbdModel::new(vec![k; n + 1], base)?, param_names(&names), partials)
}

fn two_class_offdiag<R: Real>(rates: [R; 4], n: usize) -> BlockSet<R> {
    let [l1, l2, m1, m2] = rates;
    let phases: Vec<usize> = (0..=n).map(|l| l + 1).collect();
    let mut b = BlockSet::zeros(&phases);
    for l in 0..=n {
        for i in 0..=l {
            if l < n {
                b.up[l][(i, i)] = l1;
                b.up[l][(i, i + 1)] = l2;
            }
            if l > 0 {
                if i < l {
                    b.down[l - 1][(i, i)] = R::from_usize(l - i).unwrap() * m1;
                }
                if i > 0 {
                    b.down[l - 1][(i, i - 1)] = R::from_usize(i).unwrap() * m2;
                }
            }
        }
    }
    b
}

/// Two customer classes sharing a system of capacity `n`.
///
/// Level `l` has phases `0..=l`. Parameters are ordered
/// `lambda1, lambda2, mu1, mu2`.
pub fn build_two_class<R: Real>(lambda1: R, lambda2: R, mu1: R, mu2: R, n: usize) -> Result<ParamQbdModel<R>> {
    let rates = [lambda1, lambda2, mu1, mu2];
    let names = ["lambda1", "lambda2", "mu1", "mu2"];
    for (name, &v) in names.iter().zip(&rates) {
        check_rate(name.to_string(), v)?;
    }
    check_levels(n)?;
    let base = close_rows(two_class_offdiag(rates, n));
    let partials = (0..4)
        .map(|i| {
            let mut e = [R::zero(); 4];
            e[i] = R::one();
            close_rows(two_class_offdiag(e, n))
        })
        .collect();
    let phases = (0..=n).map(|l| l + 1).collect();
    ParamQbdModel::new(QbdModel::new(phases, base)?, param_names(&names), partials)
}

/// `Q(ε) = Q + Σ εᵢ Q̃ᵢ` with constant partials `Q̃ᵢ`.
pub fn build_perturbed<R: Real>(q: &QbdModel<R>, directions: &[BlockSet<R>], epsilon: &[R]) -> Result<ParamQbdModel<R>> {
    if directions.len() != epsilon.len() {
        return Err(QbdError::DimensionMismatch(format!(
            "{} directions for {} epsilon values",
            directions.len(),
            epsilon.len()
        )));
    }
    let mut base = q.blocks().clone();
    for (i, (d, &e)) in directions.iter().zip(epsilon).enumerate() {
        d.check_shapes(q.phases())
            .map_err(|err| QbdError::DimensionMismatch(format!("direction {}: {err}", i + 1)))?;
        if !e.finite() {
            return Err(QbdError::InvalidPerturbation(format!("epsilon {} is not finite", i + 1)));
        }
        let probe = ParamQbdModel::new(q.clone(), param_names(&["d"]), vec![d.clone()])?;
        if let Some(diag) = super::validate_param(&probe).into_iter().find(|x| matches!(x, Diagnostic::PartialRowSum { .. })) {
            return Err(QbdError::InvalidPerturbation(format!("direction {} is not a generator difference: {diag}", i + 1)));
        }
        base = base.axpy(e, d)?;
    }
    let base = QbdModel::new(q.phases().to_vec(), base)?;
    let diags = validate(&base);
    if let Some(neg) = diags.iter().find(|d| matches!(d, Diagnostic::NegativeRate { .. })) {
        return Err(QbdError::InvalidPerturbation(format!("epsilon too large: {neg}")));
    }
    if !diags.is_empty() {
        return Err(QbdError::InvalidModel(diags));
    }
    let names: Vec<String> = (1..=directions.len()).map(|i| format!("eps{i}")).collect();
    ParamQbdModel::new(base, param_names(&names), directions.to_vec())
}
