//! End-to-end tests of the `lacboost` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lacboost::cascade::{train_strong, CascadeConfig, CascadeMethod};
use lacboost::datasets::load_dataset;
use lacboost::model::{ModelBody, ModelFile};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lacboost"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin()
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = run(args, dir);
    assert!(
        out.status.success(),
        "{args:?} failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Value of a `key,value` line in command output.
fn field(stdout: &str, key: &str) -> String {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key},")))
        .unwrap_or_else(|| panic!("no {key} in output:\n{stdout}"))
        .to_string()
}

fn toy(dir: &Path) -> PathBuf {
    ok(
        &[
            "gen-data", "--kind", "toy", "--m1", "40", "--m2", "80", "--seed", "7", "--out",
            "toy.csv",
        ],
        dir,
    );
    dir.join("toy.csv")
}

#[test]
fn fisherboost_model_has_simplex_weights() {
    let dir = tempfile::tempdir().unwrap();
    toy(dir.path());
    ok(
        &[
            "train",
            "--method",
            "fisherboost",
            "--data",
            "toy.csv",
            "--theta",
            "0.1",
            "--n-max",
            "30",
            "--out",
            "model.json",
        ],
        dir.path(),
    );
    let model = ModelFile::load(&dir.path().join("model.json")).unwrap();
    let ModelBody::Strong(clf) = &model.body else {
        panic!("expected a strong classifier");
    };
    assert!(clf.weights.iter().all(|&w| w >= 0.0));
    assert!((clf.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
    assert_eq!(model.config["boost"]["theta"], serde_json::json!(0.1));
    let trace = fs::read_to_string(dir.path().join("model.json.trace.csv")).unwrap();
    assert!(trace.starts_with("iteration,primal_obj,dual_obj,edge,r,mu_gap\n"));
    assert!(dir.path().join("model.json.nodes.csv").exists());
    assert!(dir.path().join("model.json.nodes.csv.meta.json").exists());
}

#[test]
fn unknown_method_lists_valid_methods() {
    let dir = tempfile::tempdir().unwrap();
    toy(dir.path());
    let out = run(
        &["train", "--method", "gentleboost", "--data", "toy.csv"],
        dir.path(),
    );
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    for m in CascadeMethod::ALL {
        assert!(err.contains(m.name()), "{err}");
    }
}

#[test]
fn bad_flags_print_usage() {
    let out = bin().args(["train", "--bogus"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn cascade_with_negative_pool() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        &[
            "gen-data",
            "--kind",
            "cascade",
            "--m1",
            "100",
            "--m2",
            "200",
            "--dim",
            "4",
            "--seed",
            "1",
            "--out",
            "train.csv",
        ],
        d,
    );
    ok(
        &[
            "gen-data", "--kind", "cascade", "--m1", "10", "--m2", "2000", "--dim", "4", "--seed",
            "2", "--class", "negative", "--out", "pool.csv",
        ],
        d,
    );
    let stdout = ok(
        &[
            "train",
            "--method",
            "lacboost",
            "--cascade",
            "exits=3",
            "--n-max",
            "24",
            "--min-weak-for-lac",
            "8",
            "--negatives-per-exit",
            "300",
            "--neg-pool",
            "pool.csv",
            "--data",
            "train.csv",
            "--out",
            "c.json",
            "--report",
            "nodes.csv",
        ],
        d,
    );
    assert_eq!(field(&stdout, "exits"), "3");
    let model = ModelFile::load(&d.join("c.json")).unwrap();
    let cascade = model.as_cascade();
    assert!(matches!(model.body, ModelBody::Cascade(_)));
    assert_eq!(cascade.exits.len(), 3);
    assert!(cascade
        .exits
        .iter()
        .all(|e| e.train_detection_rate >= 0.997));
    let nodes = fs::read_to_string(d.join("nodes.csv")).unwrap();
    let lines: Vec<&str> = nodes.lines().collect();
    assert_eq!(
        lines[0],
        "exit_index,prefix_length,d_t,f_t,cumulative_F_dr,cumulative_F_fp"
    );
    assert_eq!(lines.len(), 4);
    assert!(!nodes.contains('\r'));
}

#[test]
fn eval_reproduces_training_accuracy_and_roc_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    toy(d);
    let train = ok(
        &[
            "train", "--method", "ada+lac", "--data", "toy.csv", "--n-max", "20", "--out", "m.json",
        ],
        d,
    );
    let eval = ok(
        &[
            "eval", "--model", "m.json", "--data", "toy.csv", "--roc", "roc.csv", "--report",
            "r.csv",
        ],
        d,
    );
    assert_eq!(field(&train, "accuracy"), field(&eval, "accuracy"));
    let roc = fs::read_to_string(d.join("roc.csv")).unwrap();
    let thresholds: Vec<f64> = roc
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(thresholds.len() > 2);
    assert!(thresholds.windows(2).all(|w| w[0] < w[1]));
    assert!(d.join("roc.csv.meta.json").exists());
}

#[test]
fn missing_files_fail() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["eval", "--model", "absent.json", "--data", "absent.csv"],
        dir.path(),
    );
    assert!(!out.status.success());
    let out = run(&["train", "--data", "absent.csv"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.csv"));
}

#[test]
fn version_mismatch_names_versions() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    toy(d);
    ok(
        &[
            "train", "--method", "adaboost", "--data", "toy.csv", "--n-max", "5", "--out", "m.json",
        ],
        d,
    );
    let text = fs::read_to_string(d.join("m.json"))
        .unwrap()
        .replace("\"version\": 1", "\"version\": 9");
    fs::write(d.join("m.json"), text).unwrap();
    let out = run(&["eval", "--model", "m.json", "--data", "toy.csv"], d);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("version 9") && err.contains("version 1"),
        "{err}"
    );
}

#[test]
fn bench_solver_reports_gap_and_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(
        &[
            "bench-solver",
            "--n",
            "60",
            "--m",
            "40",
            "--seed",
            "3",
            "--out",
            "b.csv",
        ],
        dir.path(),
    );
    let lines: Vec<&str> = stdout.lines().collect();
    assert!(lines[0].starts_with("n,tolerance,eg_seconds,reference_seconds"));
    let cols: Vec<&str> = lines[1].split(',').collect();
    let gap: f64 = cols[8].parse().unwrap();
    let ratio: f64 = cols[9].parse().unwrap();
    assert!(gap <= 1e-5 && ratio > 0.0, "{stdout}");
    // Deterministic instance: objectives repeat exactly.
    let again = ok(
        &["bench-solver", "--n", "60", "--m", "40", "--seed", "3"],
        dir.path(),
    );
    let a: Vec<&str> = again.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(a[4], cols[4]);
    assert_eq!(a[5], cols[5]);
}

#[test]
fn diagnose_emits_one_block_per_exit() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        &[
            "gen-data", "--kind", "cascade", "--m1", "80", "--m2", "600", "--dim", "4", "--seed",
            "4", "--out", "c.csv",
        ],
        d,
    );
    ok(
        &[
            "train",
            "--method",
            "fisherboost",
            "--cascade",
            "schedule=4,8,12",
            "--negatives-per-exit",
            "300",
            "--data",
            "c.csv",
            "--out",
            "c.json",
        ],
        d,
    );
    ok(
        &[
            "diagnose", "--model", "c.json", "--data", "c.csv", "--out", "norm.csv",
        ],
        d,
    );
    let text = fs::read_to_string(d.join("norm.csv")).unwrap();
    let mut exits = std::collections::BTreeSet::new();
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        exits.insert(cols[0].to_string());
        if !cols[6].is_empty() {
            let r: f64 = cols[6].parse().unwrap();
            assert!((-1.0..=1.0).contains(&r));
        }
    }
    assert_eq!(exits.len(), 3);
}

#[test]
fn training_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    toy(d);
    let args = |threads: &'static str, out: &'static str| {
        vec![
            "--threads",
            threads,
            "train",
            "--method",
            "fisherboost",
            "--data",
            "toy.csv",
            "--n-max",
            "25",
            "--feature-fraction",
            "0.5",
            "--seed",
            "11",
            "--out",
            out,
        ]
    };
    ok(&args("1", "a.json"), d);
    ok(&args("4", "b.json"), d);
    assert_eq!(
        fs::read(d.join("a.json")).unwrap(),
        fs::read(d.join("b.json")).unwrap()
    );
}

#[test]
fn config_file_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    toy(d);
    fs::write(
        d.join("c.toml"),
        "method = \"lacboost\"\n[boost]\ntheta = 0.3\nn_max = 9\n",
    )
    .unwrap();
    ok(
        &[
            "train", "--config", "c.toml", "--data", "toy.csv", "--theta", "0.2", "--out", "m.json",
        ],
        d,
    );
    let model = ModelFile::load(&d.join("m.json")).unwrap();
    assert_eq!(model.method, CascadeMethod::LacBoost);
    assert_eq!(model.config["boost"]["theta"], serde_json::json!(0.2));
    assert_eq!(model.config["boost"]["n_max"], serde_json::json!(9));
    fs::write(d.join("bad.toml"), "thetaa = 1\n").unwrap();
    let out = run(&["train", "--config", "bad.toml", "--data", "toy.csv"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("thetaa"));
}

#[test]
fn saved_model_scores_match_in_memory_training() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let path = toy(d);
    ok(
        &[
            "train",
            "--method",
            "fisherboost",
            "--data",
            "toy.csv",
            "--n-max",
            "15",
            "--seed",
            "2",
            "--out",
            "m.json",
        ],
        d,
    );
    let loaded = ModelFile::load(&d.join("m.json")).unwrap();
    let data = load_dataset(&path, None).unwrap();
    let mut cfg = CascadeConfig::default();
    cfg.boost.n_max = 15;
    cfg.boost.seed = 2;
    let (clf, _) = train_strong(&data, CascadeMethod::FisherBoost, &cfg).unwrap();
    let memory = ModelFile::new(
        CascadeMethod::FisherBoost,
        loaded.config.clone(),
        &data,
        ModelBody::Strong(clf),
    );
    let (a, b) = (loaded.scores(&data).unwrap(), memory.scores(&data).unwrap());
    assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn gen_data_is_deterministic_and_writes_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        &[
            "gen-data", "--kind", "gaussian", "--m1", "5", "--m2", "9", "--dim", "3", "--seed",
            "5", "--out", "a.csv",
        ],
        d,
    );
    ok(
        &[
            "gen-data", "--kind", "gaussian", "--m1", "5", "--m2", "9", "--dim", "3", "--seed",
            "5", "--out", "b.csv",
        ],
        d,
    );
    assert_eq!(
        fs::read(d.join("a.csv")).unwrap(),
        fs::read(d.join("b.csv")).unwrap()
    );
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("a.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], serde_json::json!(5));
    ok(
        &[
            "gen-data", "--kind", "images", "--m1", "4", "--m2", "6", "--width", "8", "--height",
            "8", "--out", "imgs",
        ],
        d,
    );
    assert!(d.join("imgs").join("manifest.csv").exists());
    let stdout = ok(
        &[
            "train", "--method", "adaboost", "--data", "imgs", "--n-max", "3", "--out", "h.json",
        ],
        d,
    );
    let n: usize = field(&stdout, "weak_classifiers").parse().unwrap();
    assert!((1..=3).contains(&n));
    ok(&["eval", "--model", "h.json", "--data", "imgs"], d);
}
