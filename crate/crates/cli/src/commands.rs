use std::io::Write;
use std::path::Path;

use qbd_core::io::{LoadedModel, ModelFile, Template};
use qbd_core::model::{build_mmpp_queue, build_two_class};
use qbd_core::passage::{passage_moment1, passage_moment1_sensitivity, passage_sensitivity, passage_transform};
use qbd_core::stationary::{find_truncation_level, stationary_distribution, stationary_sensitivity};
use qbd_core::transient::{transient_at, transient_sensitivity_at};
use qbd_core::{
    Complex, InversionConfig, LevelVector, Matrix, ParamQbdModel, QbdError, QbdModel, TabooSet, TransientQuery,
};
use rayon::prelude::*;

use crate::args::{Command, InversionArgs, ModelArgs, PassageArgs, Quantity, TabooSpec, TransientArgs};
use crate::table::{Cell, Table};
use crate::{verify, CliError};

type CliResult<T> = std::result::Result<T, CliError>;

pub fn execute(command: Command, out: &mut dyn Write) -> CliResult<()> {
    let pool = thread_pool()?;
    match command {
        Command::Stationary(m) => {
            let model = load(&m.model)?;
            emit(&m, out, &stationary_table(model.base())?)
        }
        Command::Passage { model: m, query } => {
            let model = load(&m.model)?;
            let table = pool.install(|| passage_table(model.base(), &query))?;
            emit(&m, out, &table)
        }
        Command::Transient { model: m, query, inversion } => {
            let model = load(&m.model)?;
            let config = inversion_config(&inversion)?;
            let table = pool.install(|| transient_table(model.base(), &query, &config))?;
            emit(&m, out, &table)
        }
        Command::Sensitivity { model: m, of, param, passage, transient, inversion } => {
            let model = load(&m.model)?;
            let pm = model
                .param()
                .ok_or_else(|| CliError::Usage(format!("{} declares no parameters", m.model.display())))?;
            let selected = select_params(pm, &param)?;
            let table = pool.install(|| match of {
                Quantity::Stationary => stationary_sensitivity_table(pm, &selected),
                Quantity::Passage => passage_sensitivity_table(pm, &selected, &passage),
                Quantity::Transient => {
                    let config = inversion_config(&inversion)?;
                    transient_sensitivity_table(pm, &selected, &transient, &config)
                }
            })?;
            emit(&m, out, &table)
        }
        Command::Truncate { model: m, eps, lmax } => {
            let table = truncate_table(&m.model, eps, lmax)?;
            emit(&m, out, &table)
        }
        Command::Verify { model: m, inversion } => {
            let model = load(&m.model)?;
            let config = inversion_config(&inversion)?;
            let report = pool.install(|| verify::run_checks(&model, &config))?;
            emit(&m, out, &report.table())?;
            match report.failures() {
                0 => Ok(()),
                n => Err(CliError::VerifyFailed(n)),
            }
        }
    }
}

fn thread_pool() -> CliResult<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("QBD_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("QBD_THREADS must be a non-negative integer, got `{v}`")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::Usage(format!("cannot start worker threads: {e}")))
}

fn load(path: &Path) -> CliResult<LoadedModel> {
    Ok(qbd_core::io::load_model(path)?)
}

fn emit(m: &ModelArgs, out: &mut dyn Write, table: &Table) -> CliResult<()> {
    let text = table.to_csv();
    match &m.out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Output(format!("{}: {e}", path.display()))),
        None => out.write_all(text.as_bytes()).map_err(|e| CliError::Output(e.to_string())),
    }
}

pub fn inversion_config(a: &InversionArgs) -> CliResult<InversionConfig> {
    let config = InversionConfig { a: a.a, terms: a.terms, euler_terms: a.euler };
    config.validate()?;
    Ok(config)
}

fn taboo_set(spec: TabooSpec, top: usize) -> CliResult<TabooSet> {
    Ok(match spec {
        TabooSpec::All => TabooSet::all(top),
        TabooSpec::Range(a, b) => TabooSet::range(a, b, top)?,
    })
}

fn passage_levels(q: &PassageArgs) -> CliResult<(usize, usize)> {
    match (q.from, q.to) {
        (Some(f), Some(t)) => Ok((f, t)),
        _ => Err(CliError::Usage("passage queries need both --from and --to".into())),
    }
}

fn transient_query(model: &QbdModel<f64>, q: &TransientArgs) -> CliResult<TransientQuery<f64>> {
    if q.t.is_empty() {
        return Err(CliError::Usage("transient queries need --t".into()));
    }
    if q.n0 > model.top_level() {
        return Err(CliError::Usage(format!("--n0 {} exceeds top level {}", q.n0, model.top_level())));
    }
    let query = match &q.alpha {
        Some(alpha) => TransientQuery::new(q.n0, alpha.clone(), q.t.clone())?,
        None => TransientQuery::point(q.n0, 0, model.phase_count(q.n0), q.t.clone())?,
    };
    Ok(query)
}

fn select_params(pm: &ParamQbdModel<f64>, name: &str) -> CliResult<Vec<usize>> {
    if name == "all" {
        return Ok((0..pm.num_params()).collect());
    }
    pm.param_index(name).map(|i| vec![i]).ok_or_else(|| {
        CliError::Usage(format!("unknown parameter `{name}`; available: {}", pm.params().join(", ")))
    })
}

fn level_rows(table: &mut Table, prefix: &[Cell], v: &LevelVector<f64>) {
    for (level, phase, x) in v.iter() {
        let mut row = prefix.to_vec();
        row.extend([level.into(), phase.into(), x.into()]);
        table.push(row);
    }
}

fn matrix_rows(table: &mut Table, prefix: &[Cell], m: &Matrix<f64>) {
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let mut row = prefix.to_vec();
            row.extend([i.into(), j.into(), m[(i, j)].into()]);
            table.push(row);
        }
    }
}

pub fn stationary_table(model: &QbdModel<f64>) -> CliResult<Table> {
    let pi = stationary_distribution(model)?;
    let mut table = Table::new(vec!["level", "phase", "pi"]);
    level_rows(&mut table, &[], &pi);
    Ok(table)
}

pub fn passage_table(model: &QbdModel<f64>, q: &PassageArgs) -> CliResult<Table> {
    let (from, to) = passage_levels(q)?;
    let taboo = taboo_set(q.taboo, model.top_level())?;
    if q.moment == 1 {
        let e = passage_moment1(model, from, to, &taboo)?;
        let mut table = Table::new(vec!["from_phase", "to_phase", "value"]);
        matrix_rows(&mut table, &[], &e);
        return Ok(table);
    }
    let mats: Vec<Matrix<f64>> = q
        .s
        .par_iter()
        .map(|&s| passage_transform(model, from, to, &taboo, s).map(|r| r.matrix))
        .collect::<qbd_core::Result<_>>()?;
    let mut table = Table::new(vec!["s", "from_phase", "to_phase", "value"]);
    for (&s, m) in q.s.iter().zip(&mats) {
        matrix_rows(&mut table, &[s.into()], m);
    }
    Ok(table)
}

pub fn transient_table(model: &QbdModel<f64>, q: &TransientArgs, config: &InversionConfig) -> CliResult<Table> {
    let query = transient_query(model, q)?;
    let cmodel: QbdModel<Complex<f64>> = model.lift();
    let dists: Vec<LevelVector<f64>> = query
        .times
        .par_iter()
        .map(|&t| transient_at(&cmodel, &query, t, config))
        .collect::<qbd_core::Result<_>>()?;
    let mut table = Table::new(vec!["t", "level", "phase", "value"]);
    for (&t, p) in query.times.iter().zip(&dists) {
        level_rows(&mut table, &[t.into()], p);
    }
    Ok(table)
}

pub fn stationary_sensitivity_table(pm: &ParamQbdModel<f64>, selected: &[usize]) -> CliResult<Table> {
    let sens = stationary_sensitivity(pm)?;
    let mut table = Table::new(vec!["param", "level", "phase", "value"]);
    for &i in selected {
        level_rows(&mut table, &[pm.params()[i].clone().into()], &sens.partials[i]);
    }
    Ok(table)
}

pub fn passage_sensitivity_table(pm: &ParamQbdModel<f64>, selected: &[usize], q: &PassageArgs) -> CliResult<Table> {
    let (from, to) = passage_levels(q)?;
    let taboo = taboo_set(q.taboo, pm.base().top_level())?;
    if q.moment == 1 {
        let e = passage_moment1_sensitivity(pm, from, to, &taboo)?;
        let mut table = Table::new(vec!["param", "from_phase", "to_phase", "value"]);
        for &i in selected {
            matrix_rows(&mut table, &[pm.params()[i].clone().into()], e.partial(i));
        }
        return Ok(table);
    }
    let bundles = q
        .s
        .par_iter()
        .map(|&s| passage_sensitivity(pm, from, to, &taboo, s))
        .collect::<qbd_core::Result<Vec<_>>>()?;
    let mut table = Table::new(vec!["param", "s", "from_phase", "to_phase", "value"]);
    for &i in selected {
        for (&s, b) in q.s.iter().zip(&bundles) {
            matrix_rows(&mut table, &[pm.params()[i].clone().into(), s.into()], b.partial(i));
        }
    }
    Ok(table)
}

pub fn transient_sensitivity_table(
    pm: &ParamQbdModel<f64>,
    selected: &[usize],
    q: &TransientArgs,
    config: &InversionConfig,
) -> CliResult<Table> {
    let query = transient_query(pm.base(), q)?;
    let cpm: ParamQbdModel<Complex<f64>> = pm.lift();
    let results = query
        .times
        .par_iter()
        .map(|&t| transient_sensitivity_at(&cpm, &query, t, config))
        .collect::<qbd_core::Result<Vec<_>>>()?;
    let mut table = Table::new(vec!["param", "t", "level", "phase", "value"]);
    for &i in selected {
        for r in &results {
            level_rows(&mut table, &[pm.params()[i].clone().into(), r.t.into()], &r.partials[i]);
        }
    }
    Ok(table)
}

/// Truncation search over the model's level family.
///
/// Template models are rebuilt with `N = L`; explicit models are cut or
/// extended with [`QbdModel::level_continuation`].
pub fn truncate_table(path: &Path, eps: f64, lmax: usize) -> CliResult<Table> {
    let text = std::fs::read_to_string(path).map_err(|e| QbdError::Io(format!("{}: {e}", path.display())))?;
    let file = ModelFile::from_json(&text)?;
    let loaded = file.into_model()?;
    let found = match &file.template {
        Some(Template::MmppQueue { t, lambda, mu, .. }) => {
            let t = Matrix::from_rows(t)?;
            find_truncation_level(|l| Ok(build_mmpp_queue(&t, lambda, mu, l)?.base().clone()), eps, None, lmax)?
        }
        Some(Template::TwoClass { lambda1, lambda2, mu1, mu2, .. }) => find_truncation_level(
            |l| Ok(build_two_class(*lambda1, *lambda2, *mu1, *mu2, l)?.base().clone()),
            eps,
            None,
            lmax,
        )?,
        _ => {
            let base = loaded.base();
            find_truncation_level(|l| base.level_continuation(l), eps, None, lmax)?
        }
    };
    let mut table = Table::new(vec!["level", "gap"]);
    table.push(vec![found.level.into(), found.gap.into()]);
    Ok(table)
}
