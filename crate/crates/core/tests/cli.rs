use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use robustrisk::harness::ExperimentConfig;
use robustrisk::{BoundReport, ComplexityReport, Dataset, TrainedModel};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_robustrisk")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = cli(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

#[test]
fn pipeline_generate_train_complexity_bound() {
    let dir = tempfile::tempdir().unwrap();
    let d = &dir.path().join("nested/run");
    ok(&[
        "generate",
        "--arch",
        "2:3",
        "--ball",
        "1",
        "--n",
        "60",
        "--c",
        "0.1",
        "--gamma",
        "0.5",
        "--seed",
        "1",
        "--out",
        &path(d, "data.csv"),
    ]);
    let data = Dataset::load_csv(d.join("data.csv")).unwrap();
    assert_eq!((data.len(), data.dim()), (60, 2));
    assert!(d.join("oracle.json").exists());

    ok(&[
        "train",
        "--data",
        &path(d, "data.csv"),
        "--loss",
        "lad",
        "--arch",
        "2:3",
        "--ball",
        "1",
        "--iters",
        "40",
        "--step",
        "0.05",
        "--seed",
        "2",
        "--out",
        &path(d, "model.json"),
    ]);
    let model = TrainedModel::from_json(&fs::read_to_string(d.join("model.json")).unwrap()).unwrap();
    assert_eq!(model.loss.to_string(), "lad");
    assert!(model.network.max_layer_norm() <= 1.0 + 1e-12);

    let stdout = ok(&[
        "complexity",
        "--data",
        &path(d, "data.csv"),
        "--arch",
        "2:3",
        "--ball",
        "1",
        "--reps",
        "6",
        "--ascent-budget",
        "32",
        "--envelope-samples",
        "6",
        "--seed",
        "3",
        "--oracle",
        &path(d, "oracle.json"),
    ]);
    let report: ComplexityReport = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report.n, 60);
    assert!(report.rademacher_estimate <= report.rademacher_upper);
    fs::write(d.join("complexity.json"), stdout).unwrap();

    let bound: BoundReport =
        serde_json::from_str(&ok(&["bound", "--from-run", &d.display().to_string(), "--t", "0.2"])).unwrap();
    assert_eq!(bound.inputs.t, 0.2);
    assert_eq!(bound.inputs.empirical_risk, model.empirical_risk);
    assert!(bound.theorem1_rhs > model.empirical_risk);
}

#[test]
fn bound_from_inline_and_file_inputs() {
    let inline = r#"{"c_h":1,"c_f":1,"n":1,"t":0.5}"#;
    let report: BoundReport = serde_json::from_str(&ok(&["bound", "--inputs", inline])).unwrap();
    assert_eq!(report.theorem1_rhs, 16.0);
    let dir = tempfile::tempdir().unwrap();
    let file = path(dir.path(), "inputs.json");
    fs::write(&file, r#"{"c_h":1,"w_f":1,"s_y_given_x":1,"n":4,"t":0.5}"#).unwrap();
    let out = path(dir.path(), "report.json");
    ok(&["bound", "--inputs", &file, "--out", &out]);
    let report: BoundReport = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(report.theorem1_rhs, 472.0);
}

#[test]
fn errors_exit_nonzero_with_a_message() {
    let out = cli(&["bound", "--inputs", r#"{"c_h":1,"n":1,"t":1.0}"#]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));

    let out = cli(&[
        "train",
        "--data",
        "missing.csv",
        "--loss",
        "huber:-1",
        "--arch",
        "2:3",
        "--ball",
        "1",
        "--out",
        "x.json",
    ]);
    assert!(!out.status.success());

    let out = cli(&["bound"]);
    assert!(!out.status.success(), "a bound source is required");
}

#[test]
fn experiment_writes_its_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/smoke.json");
    let out = path(dir.path(), "run");
    ok(&[
        "experiment",
        "run",
        "--config",
        &config.display().to_string(),
        "--out",
        &out,
        "--emit-plotdata",
        "--timings",
    ]);
    let records = fs::read_to_string(dir.path().join("run/records.csv")).unwrap();
    let header = records.lines().next().unwrap();
    assert!(header.starts_with("cell,repetition,loss,loss_kind,loss_scale,corruption_level"));
    assert!(!header.contains("wall_time"));
    // 5 losses x 2 corruption levels x 2 repetitions
    assert_eq!(records.lines().count(), 1 + 20);
    let summary = fs::read_to_string(dir.path().join("run/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 10);
    assert!(dir.path().join("run/config.lock.json").exists());
    assert!(dir.path().join("run/timings.csv").exists());
    assert!(fs::read_dir(dir.path().join("run/plotdata")).unwrap().count() > 0);
}

#[test]
fn shipped_robustness_config_is_the_preset() {
    let text = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/robustness.json")).unwrap();
    let cfg: ExperimentConfig = serde_json::from_str(&text).unwrap();
    assert_eq!(cfg, ExperimentConfig::robustness_sweep());
}
