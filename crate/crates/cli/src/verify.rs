//! The `verify` command: solver outputs against the dense references.

use qbd_core::io::LoadedModel;
use qbd_core::oracle::{absorbing_passage, direct_stationary, uniformization, Moment};
use qbd_core::passage::{passage_moment1, passage_moment1_sensitivity, passage_sensitivity, passage_transform};
use qbd_core::stationary::{stationary_distribution, stationary_sensitivity};
use qbd_core::transient::{transient_distribution, transient_sensitivity, transient_transform};
use qbd_core::{InversionConfig, LevelVector, Matrix, ParamQbdModel, QbdModel, Result, TabooSet, TransientQuery};

use crate::table::Table;

const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub discrepancy: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.discrepancy < self.tolerance
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    fn record(&mut self, name: &str, discrepancy: f64, tolerance: f64) {
        let discrepancy = if discrepancy.is_nan() { f64::INFINITY } else { discrepancy };
        match self.checks.iter_mut().find(|c| c.name == name) {
            Some(c) => c.discrepancy = c.discrepancy.max(discrepancy),
            None => self.checks.push(Check { name: name.to_string(), discrepancy, tolerance }),
        }
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed()).count()
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(vec!["check", "discrepancy", "tolerance", "status"]);
        for c in &self.checks {
            let status = if c.passed() { "PASS" } else { "FAIL" };
            t.push(vec![c.name.clone().into(), c.discrepancy.into(), c.tolerance.into(), status.into()]);
        }
        t
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn rel_err(a: &[f64], reference: &[f64]) -> f64 {
    max_abs_diff(a, reference) / max_abs(reference).max(1e-3)
}

/// Passage queries exercised by `verify`: neighbouring and end-to-end
/// passages in both directions.
fn passage_queries(top: usize) -> Vec<(usize, usize)> {
    let mut q = vec![(top, top - 1), (top, 0), (0, top), (0, 1)];
    if top >= 2 {
        q.push((1, top));
    }
    q.sort_unstable();
    q.dedup();
    q
}

fn taboo_sets(top: usize, from: usize, to: usize) -> Vec<TabooSet> {
    let mut sets = vec![TabooSet::all(top)];
    let beyond = if from > to { TabooSet::range(to + 1, top, top) } else { TabooSet::range(0, to - 1, top) };
    sets.extend(beyond.ok());
    sets.extend(TabooSet::new([from], top).ok());
    sets
}

fn upper_taboo(top: usize, from: usize, to: usize) -> Result<TabooSet> {
    if from > to {
        TabooSet::range(to + 1, top, top)
    } else {
        TabooSet::range(0, to - 1, top)
    }
}

fn initial_vector(model: &QbdModel<f64>, q: &TransientQuery<f64>) -> Vec<f64> {
    let segs: Vec<Vec<f64>> = (0..=model.top_level())
        .map(|n| if n == q.n0 { q.alpha.clone() } else { vec![0.0; model.phase_count(n)] })
        .collect();
    LevelVector::new(segs).flatten()
}

fn transient_queries(model: &QbdModel<f64>, times: &[f64]) -> Result<Vec<TransientQuery<f64>>> {
    let top = model.top_level();
    let mut q = vec![TransientQuery::point(0, 0, model.phase_count(0), times.to_vec())?];
    let p = model.phase_count(top);
    q.push(TransientQuery::new(top, vec![1.0 / p as f64; p], times.to_vec())?);
    Ok(q)
}

/// Central difference of `f` along the partial blocks of parameter `i`.
fn directional_fd(pm: &ParamQbdModel<f64>, i: usize, f: impl Fn(&QbdModel<f64>) -> Result<Vec<f64>>) -> Result<Vec<f64>> {
    let plus = f(&pm.linear_step(i, FD_STEP)?)?;
    let minus = f(&pm.linear_step(i, -FD_STEP)?)?;
    Ok(plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * FD_STEP)).collect())
}

pub fn run_checks(model: &LoadedModel, config: &InversionConfig) -> Result<Report> {
    let mut report = Report::default();
    let base = model.base();
    let q = base.assemble();
    let top = base.top_level();

    let pi = stationary_distribution(base)?.flatten();
    report.record("stationary_vs_dense", max_abs_diff(&pi, &direct_stationary(&q)?), 1e-9);
    let residual = Matrix::row_vector(&pi)?.matmul(&q)?;
    report.record("stationary_balance", max_abs(residual.as_slice()), 1e-10);
    report.record("stationary_normalization", (pi.iter().sum::<f64>() - 1.0).abs(), 1e-12);

    for (from, to) in passage_queries(top) {
        for taboo in taboo_sets(top, from, to) {
            for s in [0.0, 0.5, 2.0] {
                let w = passage_transform(base, from, to, &taboo, s)?.matrix;
                let o = absorbing_passage(base, from, to, &taboo, s, Moment::Transform)?;
                report.record("passage_transform_vs_absorbing", max_abs_diff(w.as_slice(), o.as_slice()), 1e-9);
            }
            let e = passage_moment1(base, from, to, &taboo)?;
            let o = absorbing_passage(base, from, to, &taboo, 0.0, Moment::First)?;
            let scale = max_abs(o.as_slice()).max(1.0);
            report.record("passage_moment1_vs_absorbing", max_abs_diff(e.as_slice(), o.as_slice()) / scale, 1e-9);
        }
        let all = TabooSet::all(top);
        let restricted = upper_taboo(top, from, to)?;
        for s in [0.0, 1.0] {
            let a = passage_transform(base, from, to, &all, s)?.matrix;
            let b = passage_transform(base, from, to, &restricted, s)?.matrix;
            report.record("passage_upper_taboo_identity", max_abs_diff(a.as_slice(), b.as_slice()), 1e-12);
        }
    }

    let times = [0.1, 1.0, 5.0];
    for query in transient_queries(base, &times)? {
        for s in [0.5, 2.0] {
            let f = transient_transform(base, &query, s)?;
            report.record("transient_transform_normalization", (s * f.total() - 1.0).abs(), 1e-10);
        }
        let p0 = initial_vector(base, &query);
        let dists = transient_distribution(base, &query, config)?;
        for (p, &t) in dists.iter().zip(&times) {
            let reference = uniformization(&q, &p0, t)?;
            report.record("transient_vs_uniformization", max_abs_diff(&p.flatten(), &reference), 1e-6);
        }
    }

    if let Some(pm) = model.param() {
        gradient_checks(pm, config, &mut report)?;
    }
    Ok(report)
}

fn gradient_checks(pm: &ParamQbdModel<f64>, config: &InversionConfig, report: &mut Report) -> Result<()> {
    let top = pm.base().top_level();
    let sens = stationary_sensitivity(pm)?;
    for i in 0..pm.num_params() {
        let fd = directional_fd(pm, i, |m| Ok(stationary_distribution(m)?.flatten()))?;
        report.record("stationary_gradient_vs_fd", rel_err(&sens.partials[i].flatten(), &fd), 1e-4);
        report.record("stationary_gradient_zero_sum", sens.partials[i].total().abs(), 1e-10);
    }

    for (from, to) in [(top, top - 1), (0, top)] {
        let taboo = TabooSet::all(top);
        let w = passage_sensitivity(pm, from, to, &taboo, 0.5)?;
        let e = passage_moment1_sensitivity(pm, from, to, &taboo)?;
        for i in 0..pm.num_params() {
            let fd = directional_fd(pm, i, |m| Ok(passage_transform(m, from, to, &taboo, 0.5)?.matrix.as_slice().to_vec()))?;
            report.record("passage_gradient_vs_fd", rel_err(w.partial(i).as_slice(), &fd), 1e-4);
            let fd = directional_fd(pm, i, |m| Ok(passage_moment1(m, from, to, &taboo)?.as_slice().to_vec()))?;
            report.record("passage_moment1_gradient_vs_fd", rel_err(e.partial(i).as_slice(), &fd), 1e-4);
        }
    }

    let query = TransientQuery::point(0, 0, pm.base().phase_count(0), vec![1.0])?;
    let sens = transient_sensitivity(pm, &query, config)?;
    for i in 0..pm.num_params() {
        let fd = directional_fd(pm, i, |m| Ok(transient_distribution(m, &query, config)?[0].flatten()))?;
        report.record("transient_gradient_vs_fd", rel_err(&sens[0].partials[i].flatten(), &fd), 1e-4);
        report.record("transient_gradient_zero_sum", sens[0].partials[i].total().abs(), 1e-6);
    }
    Ok(())
}
