//! Acceptance criteria, one PASS/FAIL line each.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::PathBuf;
use std::time::{Duration, Instant};

use common::*;
use qbd_core::model::build_mmpp_queue;
use qbd_core::oracle::{absorbing_passage, direct_stationary, finite_difference, uniformization, Moment};
use qbd_core::passage::{passage_moment1, passage_moment1_sensitivity, passage_sensitivity, passage_transform};
use qbd_core::stationary::{find_truncation_level, stationary_distribution, stationary_sensitivity};
use qbd_core::transient::{
    invert_transform, transient_distribution, transient_sensitivity, transient_transform,
    transient_transform_sensitivity,
};
use qbd_core::{InversionConfig, LevelVector, Matrix, QbdModel, Result, TabooSet, TransientQuery};
use rand::rngs::StdRng;
use rand::Rng;

struct Outcome {
    ok: bool,
    detail: String,
}

fn below(measured: f64, tol: f64) -> bool {
    measured < tol
}

fn passage_query(r: &mut StdRng, model: &QbdModel<f64>) -> (usize, usize, TabooSet) {
    let top = model.top_level();
    let from = r.gen_range(0..=top);
    let mut to = r.gen_range(0..top);
    if to >= from {
        to += 1;
    }
    let taboo = TabooSet::new((0..=top).filter(|_| r.gen_bool(0.6)), top).unwrap();
    (from, to, taboo)
}

fn random_transient_query(r: &mut StdRng, model: &QbdModel<f64>, times: Vec<f64>) -> TransientQuery<f64> {
    let n0 = r.gen_range(0..=model.top_level());
    let raw: Vec<f64> = (0..model.phase_count(n0)).map(|_| r.gen_range(0.0..1.0)).collect();
    let total: f64 = raw.iter().sum();
    TransientQuery::new(n0, raw.iter().map(|x| x / total).collect(), times).unwrap()
}

fn initial_vector(model: &QbdModel<f64>, q: &TransientQuery<f64>) -> Vec<f64> {
    let mut segs: Vec<Vec<f64>> = model.phases().iter().map(|&p| vec![0.0; p]).collect();
    segs[q.n0] = q.alpha.clone();
    LevelVector::new(segs).flatten()
}

fn stationary_oracle() -> Result<Outcome> {
    let mut r = rng(1001);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let model = random_model(&mut r, 6, 4);
        let pi = stationary_distribution(&model)?.flatten();
        worst = worst.max(max_abs_diff(&pi, &direct_stationary(&model.assemble())?));
    }
    let elapsed = start.elapsed();
    Ok(Outcome {
        ok: below(worst, 1e-9) && elapsed < Duration::from_secs(10),
        detail: format!("200 models, max |Δπ| = {worst:.3e} (< 1e-9), {:.2} s (< 10 s)", elapsed.as_secs_f64()),
    })
}

fn canonical_instance() -> Result<Outcome> {
    let pi = stationary_distribution(&mm12())?.flatten();
    let err = max_abs_diff(&pi, &[4.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0]);
    Ok(Outcome { ok: below(err, 1e-12), detail: format!("M/M/1/2 max |π − (4,2,1)/7| = {err:.3e} (< 1e-12)") })
}

fn passage_oracle() -> Result<Outcome> {
    let mut r = rng(1003);
    let mut worst_g = 0.0f64;
    let mut worst_e = 0.0f64;
    let mut nontrivial = 0;
    for _ in 0..100 {
        let model = random_model(&mut r, 5, 3);
        let (from, to, taboo) = passage_query(&mut r, &model);
        if taboo.levels().count() < model.top_level() + 1 {
            nontrivial += 1;
        }
        for s in [0.0, 0.5, 2.0] {
            let w = passage_transform(&model, from, to, &taboo, s)?.matrix;
            let o = absorbing_passage(&model, from, to, &taboo, s, Moment::Transform)?;
            worst_g = worst_g.max(max_abs_diff(w.as_slice(), o.as_slice()));
        }
        let e = passage_moment1(&model, from, to, &taboo)?;
        let o = absorbing_passage(&model, from, to, &taboo, 0.0, Moment::First)?;
        worst_e = worst_e.max(max_abs_diff(e.as_slice(), o.as_slice()));
    }
    let m = mm12();
    let all = TabooSet::all(2);
    let g = passage_transform(&m, 1, 0, &all, 1.0)?.matrix[(0, 0)];
    let e = passage_moment1(&m, 1, 0, &all)?[(0, 0)];
    let occ = passage_moment1(&m, 1, 0, &TabooSet::new([2], 2)?)?[(0, 0)];
    let canon = (g - 0.6).abs().max((e - 0.75).abs()).max((occ - 0.25).abs());
    Ok(Outcome {
        ok: below(worst_g, 1e-9) && below(worst_e, 1e-9) && below(canon, 1e-10) && nontrivial > 0,
        detail: format!(
            "100 models ({nontrivial} partial taboo sets), max |ΔG| = {worst_g:.3e}, max |ΔE| = {worst_e:.3e} (< 1e-9); canonical max error {canon:.3e} (< 1e-10)"
        ),
    })
}

fn taboo_identity() -> Result<Outcome> {
    let mut r = rng(1004);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let model = random_model(&mut r, 5, 3);
        let top = model.top_level();
        let all = TabooSet::all(top);
        for from in 0..=top {
            for to in (0..=top).filter(|&t| t != from) {
                let upper = if from > to { TabooSet::range(to + 1, top, top)? } else { TabooSet::range(0, to - 1, top)? };
                for s in [0.0, 0.5, 2.0] {
                    let a = passage_transform(&model, from, to, &all, s)?.matrix;
                    let b = passage_transform(&model, from, to, &upper, s)?.matrix;
                    worst = worst.max(max_abs_diff(a.as_slice(), b.as_slice()));
                }
            }
        }
    }
    Ok(Outcome {
        ok: below(worst, 1e-12),
        detail: format!("100 models, all level pairs, max |G_all − G_upper| = {worst:.3e} (< 1e-12)"),
    })
}

fn transient() -> Result<Outcome> {
    let mut r = rng(1005);
    let config = InversionConfig::default();
    let mut worst_f = 0.0f64;
    let mut worst_norm = 0.0f64;
    for _ in 0..40 {
        let model = random_model(&mut r, 5, 3);
        let q = random_transient_query(&mut r, &model, vec![0.1, 1.0, 5.0]);
        let p0 = initial_vector(&model, &q);
        for (p, &t) in transient_distribution(&model, &q, &config)?.iter().zip(&q.times) {
            worst_f = worst_f.max(max_abs_diff(&p.flatten(), &uniformization(&model.assemble(), &p0, t)?));
        }
        for s in [0.05, 0.5, 5.0] {
            worst_norm = worst_norm.max((s * transient_transform(&model, &q, s)?.total() - 1.0).abs());
        }
    }
    let inv = invert_transform(|s| Ok(vec![(s + 1.0).inv()]), 1.0, &config)?[0];
    let inv_err = (inv - (-1.0f64).exp()).abs();
    Ok(Outcome {
        ok: below(worst_f, 1e-6) && below(worst_norm, 1e-10) && below(inv_err, 1e-7),
        detail: format!(
            "40 models, max |f − uniformization| = {worst_f:.3e} (< 1e-6); max |s·Σf̃ − 1| = {worst_norm:.3e} (< 1e-10); |L⁻¹[1/(s+1)](1) − e⁻¹| = {inv_err:.3e} (< 1e-7)"
        ),
    })
}

fn sensitivities() -> Result<Outcome> {
    let mut r = rng(1006);
    let config = InversionConfig::default();
    let mut worst = [0.0f64; 5];
    for _ in 0..8 {
        for family in families(&mut r) {
            let theta = family.random_theta(&mut r);
            let pm = family.build(&theta);
            let fd = |f: &dyn Fn(&QbdModel<f64>) -> Result<Vec<f64>>| {
                finite_difference(|th| f(family.build(th).base()), &theta, 1e-5)
            };

            let sp = stationary_sensitivity(&pm)?;
            for (i, reference) in fd(&|m| Ok(stationary_distribution(m)?.flatten()))?.iter().enumerate() {
                worst[0] = worst[0].max(rel_err(&sp.partials[i].flatten(), reference));
            }

            let (from, to, taboo) = passage_query(&mut r, pm.base());
            let s = r.gen_range(0.0..2.0);
            let g = passage_sensitivity(&pm, from, to, &taboo, s)?;
            let reference = fd(&|m| Ok(passage_transform(m, from, to, &taboo, s)?.matrix.as_slice().to_vec()))?;
            for (i, reference) in reference.iter().enumerate() {
                worst[1] = worst[1].max(rel_err(g.partial(i).as_slice(), reference));
            }
            let e = passage_moment1_sensitivity(&pm, from, to, &taboo)?;
            let reference = fd(&|m| Ok(passage_moment1(m, from, to, &taboo)?.as_slice().to_vec()))?;
            for (i, reference) in reference.iter().enumerate() {
                worst[2] = worst[2].max(rel_err(e.partial(i).as_slice(), reference));
            }

            let t = r.gen_range(0.2..3.0);
            let q = random_transient_query(&mut r, pm.base(), vec![t]);
            let s = r.gen_range(0.1..3.0);
            let ft = transient_transform_sensitivity(&pm, &q, s)?;
            for (i, reference) in fd(&|m| Ok(transient_transform(m, &q, s)?.flatten()))?.iter().enumerate() {
                worst[3] = worst[3].max(rel_err(&ft.partials[i].flatten(), reference));
            }
            let sens = transient_sensitivity(&pm, &q, &config)?;
            for (i, reference) in fd(&|m| Ok(transient_distribution(m, &q, &config)?[0].flatten()))?.iter().enumerate() {
                worst[4] = worst[4].max(rel_err(&sens[0].partials[i].flatten(), reference));
            }
        }
    }

    let pm = mm12_param(1.0, 2.0);
    let sp = stationary_sensitivity(&pm)?;
    let e = passage_moment1_sensitivity(&pm, 1, 0, &TabooSet::all(2))?;
    let spot = [
        sp.partial("lambda").unwrap().segment(0)[0] + 16.0 / 49.0,
        sp.partial("mu").unwrap().segment(0)[0] - 8.0 / 49.0,
        e.partial(pm.param_index("mu").unwrap())[(0, 0)] + 0.5,
        e.partial(pm.param_index("lambda").unwrap())[(0, 0)] - 0.25,
    ]
    .iter()
    .fold(0.0f64, |m, x| m.max(x.abs()));

    let fd_worst = worst.iter().copied().fold(0.0, f64::max);
    Ok(Outcome {
        ok: below(fd_worst, 1e-4) && below(spot, 1e-6),
        detail: format!(
            "3 families × 8 draws, max relative FD error π {:.2e}, G {:.2e}, E {:.2e}, f̃ {:.2e}, f(t) {:.2e} (< 1e-4); closed-form spot checks max error {spot:.3e} (< 1e-6)",
            worst[0], worst[1], worst[2], worst[3], worst[4]
        ),
    })
}

fn zero_sum() -> Result<Outcome> {
    let mut r = rng(1007);
    let config = InversionConfig::default();
    let (mut pi_sum, mut f_sum) = (0.0f64, 0.0f64);
    for _ in 0..8 {
        for family in families(&mut r) {
            let pm = family.build(&family.random_theta(&mut r));
            for p in &stationary_sensitivity(&pm)?.partials {
                pi_sum = pi_sum.max(p.total().abs());
            }
            let q = random_transient_query(&mut r, pm.base(), vec![0.3, 1.0, 4.0]);
            for at in transient_sensitivity(&pm, &q, &config)? {
                for p in &at.partials {
                    f_sum = f_sum.max(p.total().abs());
                }
            }
        }
    }
    Ok(Outcome {
        ok: below(pi_sum, 1e-10) && below(f_sum, 1e-6),
        detail: format!("max |Σ ∂π/∂θ| = {pi_sum:.3e} (< 1e-10); max |Σ ∂f(t)/∂θ| = {f_sum:.3e} (< 1e-6)"),
    })
}

fn truncation() -> Result<Outcome> {
    let family = |l: usize| -> Result<QbdModel<f64>> {
        Ok(build_mmpp_queue(&Matrix::from_rows(&[[0.0]])?, &[1.0], &[1.0], l)?.base().clone())
    };
    let probes = [0, 1, 2];
    let found = find_truncation_level(family, 1e-8, Some(&probes), 100)?;
    let a = stationary_distribution(&family(found.level)?)?;
    let b = stationary_distribution(&family(found.level + 5)?)?;
    let change = probes.iter().fold(0.0f64, |m, &n| m.max(max_abs_diff(a.segment(n), b.segment(n))));

    let t = Matrix::from_rows(&[[-0.5, 0.5], [1.0, -1.0]])?;
    let modulated = |l: usize| -> Result<QbdModel<f64>> { Ok(build_mmpp_queue(&t, &[1.0, 3.0], &[1.0, 0.5], l)?.base().clone()) };
    let found2 = find_truncation_level(modulated, 1e-8, None, 100)?;
    let a = stationary_distribution(&modulated(found2.level)?)?;
    let b = stationary_distribution(&modulated(found2.level + 5)?)?;
    let change2 = (0..=5.min(found2.level - 2)).fold(0.0f64, |m, n| m.max(max_abs_diff(a.segment(n), b.segment(n))));
    Ok(Outcome {
        ok: below(found.gap, 1e-8) && below(found2.gap, 1e-8) && below(change, 1e-7) && below(change2, 1e-7),
        detail: format!(
            "M/M/∞: L = {}, gap {:.3e} (< 1e-8), probe Δπ(L, L+5) = {change:.3e} (< 1e-7); MMPP: L = {}, gap {:.3e}, Δπ = {change2:.3e}",
            found.level, found.gap, found2.level, found2.gap
        ),
    })
}

fn cli_end_to_end() -> Result<Outcome> {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut runs = 0;
    for name in ["mm12", "mmpp_queue", "two_class", "perturbed"] {
        let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "models", &format!("{name}.json")].iter().collect();
        let m = path.to_string_lossy().into_owned();
        let lines: Vec<Vec<&str>> = vec![
            vec!["stationary", "--model", &m],
            vec!["passage", "--model", &m, "--from", "2", "--to", "0", "--s", "0,1"],
            vec!["passage", "--model", &m, "--from", "1", "--to", "2", "--moment", "1"],
            vec!["transient", "--model", &m, "--t", "0.5,2"],
            vec!["sensitivity", "--model", &m],
            vec!["sensitivity", "--model", &m, "--of", "passage", "--from", "2", "--to", "1", "--s", "0.5"],
            vec!["sensitivity", "--model", &m, "--of", "transient", "--t", "1"],
            vec!["truncate", "--model", &m],
            vec!["verify", "--model", &m],
        ];
        for args in lines {
            let (mut out, mut err) = (Vec::new(), Vec::new());
            let code = qbd_cli::run_with(std::iter::once("qbd").chain(args.iter().copied()), &mut out, &mut err);
            runs += 1;
            if code != 0 {
                failures.push(format!("{name} {} -> {code}", args[0]));
            }
        }
    }
    let elapsed = start.elapsed();
    Ok(Outcome {
        ok: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("{runs} runs over 4 bundled models exit 0, including verify ({:.2} s)", elapsed.as_secs_f64())
        } else {
            format!("failed: {}", failures.join("; "))
        },
    })
}

fn main() {
    let criteria: [(&str, fn() -> Result<Outcome>); 9] = [
        ("stationary oracle equivalence", stationary_oracle),
        ("canonical M/M/1/2 instance", canonical_instance),
        ("passage oracle equivalence", passage_oracle),
        ("taboo identities", taboo_identity),
        ("transient inversion", transient),
        ("sensitivities vs finite differences", sensitivities),
        ("zero-sum gradient laws", zero_sum),
        ("truncation", truncation),
        ("CLI end-to-end", cli_end_to_end),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (ok, detail) = match check() {
            Ok(o) => (o.ok, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!("criterion {}: {} {name}: {detail}", i + 1, if ok { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {}/9 passed in {:.2} s", 9 - failed, start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
