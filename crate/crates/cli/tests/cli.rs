use std::path::PathBuf;
use std::process::Command;

use proptest::prelude::*;
use qbd_cli::run_with;
use qbd_core::io::{load_model, save_model, LoadedModel, ModelFile};

const MODELS: [&str; 4] = ["mm12", "mmpp_queue", "two_class", "perturbed"];

fn model_path(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "models", &format!("{name}.json")].iter().collect();
    p.to_string_lossy().into_owned()
}

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn qbd(args: &[&str]) -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("qbd").chain(args.iter().copied());
    let code = run_with(argv, &mut out, &mut err);
    Outcome { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn value_at(csv: &str, prefix: &[&str]) -> f64 {
    rows(csv)
        .into_iter()
        .find(|r| r.iter().zip(prefix).all(|(a, b)| a == b))
        .unwrap_or_else(|| panic!("no row {prefix:?} in\n{csv}"))
        .last()
        .unwrap()
        .parse()
        .unwrap()
}

/// Every command with arguments that are valid for all bundled models.
fn command_lines(model: &str) -> Vec<Vec<String>> {
    let m = model_path(model);
    let lines: Vec<Vec<&str>> = vec![
        vec!["stationary", "--model", &m],
        vec!["passage", "--model", &m, "--from", "2", "--to", "0", "--s", "0,0.5,2"],
        vec!["passage", "--model", &m, "--from", "0", "--to", "2", "--taboo", "0:1", "--moment", "1"],
        vec!["transient", "--model", &m, "--t", "0.1,1,5"],
        vec!["transient", "--model", &m, "--n0", "1", "--t", "0.5", "--inv-A", "20", "--inv-terms", "20", "--inv-euler", "12"],
        vec!["sensitivity", "--model", &m],
        vec!["sensitivity", "--model", &m, "--of", "passage", "--from", "2", "--to", "1", "--s", "0.5"],
        vec!["sensitivity", "--model", &m, "--of", "passage", "--from", "1", "--to", "0", "--moment", "1"],
        vec!["sensitivity", "--model", &m, "--of", "transient", "--t", "0.5,2"],
        vec!["truncate", "--model", &m],
        vec!["verify", "--model", &m],
    ];
    lines.into_iter().map(|l| l.into_iter().map(String::from).collect()).collect()
}

#[test]
fn every_bundled_model_runs_every_command() {
    for model in MODELS {
        for line in command_lines(model) {
            let args: Vec<&str> = line.iter().map(String::as_str).collect();
            let o = qbd(&args);
            assert_eq!(o.code, 0, "{model}: {args:?}\n{}", o.stderr);
            assert!(o.stderr.is_empty());
            let mut lines = o.stdout.lines();
            let header = lines.next().expect("header row");
            let width = header.split(',').count();
            assert!(lines.clone().count() > 0, "{model}: {args:?} printed no rows");
            for l in lines {
                assert_eq!(l.split(',').count(), width, "{model}: {args:?}: {l}");
            }
        }
    }
}

#[test]
fn verify_passes_on_every_bundled_model() {
    for model in MODELS {
        let o = qbd(&["verify", "--model", &model_path(model)]);
        assert_eq!(o.code, 0, "{model}:\n{}{}", o.stdout, o.stderr);
        assert!(o.stdout.starts_with("check,discrepancy,tolerance,status\n"));
        assert!(!o.stdout.contains("FAIL"));
        let gradient_checks = o.stdout.lines().filter(|l| l.contains("gradient")).count();
        assert!(gradient_checks >= 6, "{model} ran no gradient checks");
    }
}

#[test]
fn stationary_example() {
    let o = qbd(&["stationary", "--model", &model_path("mm12")]);
    assert_eq!(o.code, 0);
    assert_eq!(o.stdout, "level,phase,pi\n0,0,0.571428571429\n1,0,0.285714285714\n2,0,0.142857142857\n");
}

#[test]
fn taboo_occupancy_example() {
    let o = qbd(&["passage", "--model", &model_path("mm12"), "--from", "1", "--to", "0", "--taboo", "2:2", "--moment", "1"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert_eq!(o.stdout, "from_phase,to_phase,value\n0,0,0.25\n");
}

#[test]
fn passage_transform_rows_carry_s() {
    let o = qbd(&["passage", "--model", &model_path("mm12"), "--from", "1", "--to", "0", "--s", "0,1"]);
    assert_eq!(o.code, 0);
    assert_eq!(o.stdout, "s,from_phase,to_phase,value\n0,0,0,1\n1,0,0,0.6\n");
}

#[test]
fn sensitivity_closed_forms() {
    let m = model_path("mm12");
    let o = qbd(&["sensitivity", "--model", &m, "--param", "lambda"]);
    assert_eq!(o.code, 0);
    assert!(o.stdout.starts_with("param,level,phase,value\n"));
    assert!((value_at(&o.stdout, &["lambda", "0", "0"]) + 16.0 / 49.0).abs() < 1e-11);
    assert!(!o.stdout.contains("mu,"));

    let o = qbd(&["sensitivity", "--model", &m, "--of", "passage", "--from", "1", "--to", "0", "--moment", "1"]);
    assert_eq!(o.code, 0);
    assert!((value_at(&o.stdout, &["mu", "0", "0"]) + 0.5).abs() < 1e-11);
    assert!((value_at(&o.stdout, &["lambda", "0", "0"]) - 0.25).abs() < 1e-11);
}

#[test]
fn transient_rows_carry_t_and_approach_stationarity() {
    let o = qbd(&["transient", "--model", &model_path("mm12"), "--t", "0.5,50"]);
    assert_eq!(o.code, 0);
    assert!(o.stdout.starts_with("t,level,phase,value\n"));
    assert_eq!(rows(&o.stdout).len(), 6);
    assert!((value_at(&o.stdout, &["50", "0", "0"]) - 4.0 / 7.0).abs() < 1e-6);
}

#[test]
fn transient_alpha_is_honoured() {
    let m = model_path("mmpp_queue");
    let a = qbd(&["transient", "--model", &m, "--n0", "3", "--alpha", "0,1", "--t", "1e-6"]);
    assert_eq!(a.code, 0, "{}", a.stderr);
    assert!((value_at(&a.stdout, &["1e-06", "3", "1"]) - 1.0).abs() < 1e-4);
    let bad = qbd(&["transient", "--model", &m, "--alpha", "0.5,0.2", "--t", "1"]);
    assert_eq!(bad.code, 1);
}

#[test]
fn out_flag_writes_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pi.csv");
    let o = qbd(&["stationary", "--model", &model_path("mm12"), "--out", path.to_str().unwrap()]);
    assert_eq!(o.code, 0);
    assert!(o.stdout.is_empty());
    assert!(std::fs::read_to_string(&path).unwrap().starts_with("level,phase,pi\n0,0,0.571428571429\n"));
}

#[test]
fn saved_models_reproduce_outputs_exactly() {
    let dir = tempfile::tempdir().unwrap();
    for model in MODELS {
        let loaded = load_model(model_path(model)).unwrap();
        let copy = dir.path().join(format!("{model}.json"));
        save_model(&copy, &loaded).unwrap();
        assert_eq!(load_model(&copy).unwrap(), loaded);
        for line in command_lines(model) {
            if line[0] == "truncate" {
                continue;
            }
            let args: Vec<&str> = line.iter().map(String::as_str).collect();
            let mut other = args.clone();
            let copy_str = copy.to_str().unwrap();
            other[2] = copy_str;
            assert_eq!(qbd(&args).stdout, qbd(&other).stdout, "{model}: {args:?}");
        }
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p.to_string_lossy().into_owned()
    };

    assert_eq!(qbd(&["--help"]).code, 0);
    assert_eq!(qbd(&["--version"]).code, 0);
    assert_eq!(qbd(&[]).code, 1);
    assert_eq!(qbd(&["stationary"]).code, 1);
    assert_eq!(qbd(&["stationary", "--model", &model_path("mm12"), "--format", "tsv"]).code, 1);
    assert_eq!(qbd(&["passage", "--model", &model_path("mm12"), "--from", "1", "--to", "0", "--moment", "2"]).code, 1);
    assert_eq!(qbd(&["passage", "--model", &model_path("mm12"), "--from", "1", "--to", "0", "--taboo", "2-3"]).code, 1);

    let missing = qbd(&["stationary", "--model", "/nonexistent/model.json"]);
    assert_eq!(missing.code, 3);
    assert!(missing.stderr.contains("/nonexistent/model.json"));

    let garbled = write("garbled.json", "{ \"levels\": ");
    assert_eq!(qbd(&["stationary", "--model", &garbled]).code, 3);

    let shape = write(
        "shape.json",
        r#"{"blocks":{"diag":[[[-1]],[[-3]],[[-2]]],"up":[[[1]],[[1, 0]]],"down":[[[2]],[[2]]]}}"#,
    );
    let o = qbd(&["stationary", "--model", &shape]);
    assert_eq!(o.code, 3);
    assert!(o.stderr.contains("blocks: dimension mismatch: up[1] is 1x2"), "{}", o.stderr);

    let invalid = write("invalid.json", r#"{"blocks":{"diag":[[[-1]],[[-2]]],"up":[[[1]]],"down":[[[-2]]]}}"#);
    assert_eq!(qbd(&["stationary", "--model", &invalid]).code, 1);

    let m = model_path("mm12");
    assert_eq!(qbd(&["passage", "--model", &m, "--from", "1", "--to", "1"]).code, 1);
    assert_eq!(qbd(&["passage", "--model", &m, "--from", "1"]).code, 1);
    assert_eq!(qbd(&["passage", "--model", &m, "--from", "5", "--to", "0"]).code, 1);
    assert_eq!(qbd(&["transient", "--model", &m]).code, 1);
    assert_eq!(qbd(&["transient", "--model", &m, "--t", "-1"]).code, 1);
    assert_eq!(qbd(&["transient", "--model", &m, "--t", "1", "--inv-terms", "0"]).code, 1);
    assert_eq!(qbd(&["sensitivity", "--model", &m, "--param", "nope"]).code, 1);

    let plain = write("plain.json", &ModelFile::from_model(load_model(&m).unwrap().base()).to_json());
    assert_eq!(qbd(&["sensitivity", "--model", &plain]).code, 1);

    let o = qbd(&["truncate", "--model", &m, "--lmax", "4"]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("no convergence"), "{}", o.stderr);

    let out_dir = dir.path().join("missing").join("out.csv");
    assert_eq!(qbd(&["stationary", "--model", &m, "--out", out_dir.to_str().unwrap()]).code, 3);
}

#[test]
fn binary_output_is_independent_of_thread_count() {
    let exe = env!("CARGO_BIN_EXE_qbd");
    let run = |threads: &str| {
        let out = Command::new(exe)
            .args(["sensitivity", "--model", &model_path("two_class"), "--of", "transient", "--t", "0.2,0.7,1.5,3"])
            .env("QBD_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    assert_eq!(run("1"), run("4"));

    let bad = Command::new(exe).args(["stationary", "--model", &model_path("mm12")]).env("QBD_THREADS", "many").output();
    assert_eq!(bad.unwrap().status.code(), Some(1));
    let missing = Command::new(exe).args(["verify", "--model", "/nonexistent.json"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(3));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn stationary_csv_parses_back_to_the_solution(seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut r = rand::rngs::StdRng::seed_from_u64(seed);
        let n = r.gen_range(1..6);
        let lambda: f64 = r.gen_range(0.1..5.0);
        let mu: f64 = r.gen_range(0.1..5.0);
        let pm = qbd_core::model::build_mmpp_queue(&qbd_core::Matrix::from_rows(&[[0.0]]).unwrap(), &[lambda], &[mu], n).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        save_model(&path, &LoadedModel::Param(pm.clone())).unwrap();
        let o = qbd(&["stationary", "--model", path.to_str().unwrap()]);
        prop_assert_eq!(o.code, 0);
        let pi = qbd_core::stationary::stationary_distribution(pm.base()).unwrap();
        let parsed: Vec<f64> = rows(&o.stdout).iter().map(|r| r[2].parse().unwrap()).collect();
        for (a, b) in parsed.iter().zip(pi.flatten()) {
            prop_assert!((a - b).abs() <= 1e-11 * b.abs().max(1e-300));
        }
    }
}
