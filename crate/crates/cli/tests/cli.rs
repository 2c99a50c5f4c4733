use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use frontprop::replica::{Architecture, LayerPlan};
use frontprop::{Activation, ExplanationRecord};
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_frontprop"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

const AFFINE_1D: &str = r#"{"schema_version": 1, "input_dim": 1, "feature_ranges": [[0.0, 10.0]],
    "layers": [{"type": "dense", "weights": [[2.0]], "bias": [1.0], "activation": "identity"}]}"#;

fn replica(dir: &Path, arch: &str, seed: u64) -> (PathBuf, PathBuf) {
    let model = dir.join(format!("{arch}.json"));
    let data = dir.join(format!("{arch}-data.json"));
    let o = run(&[
        "replica",
        "--arch",
        arch,
        "--seed",
        &seed.to_string(),
        "--out",
        model.to_str().unwrap(),
        "--instances-out",
        data.to_str().unwrap(),
        "--count",
        "60",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    (model, data)
}

#[test]
fn explain_affine_model() {
    let dir = TempDir::new().unwrap();
    let model = write(dir.path(), "m.json", AFFINE_1D);
    let inst = write(dir.path(), "x.json", r#"{"instance": [3.0]}"#);
    let out = dir.path().join("e.json");
    let o = run(&[
        "explain",
        "--model",
        model.to_str().unwrap(),
        "--instances",
        inst.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let record: ExplanationRecord =
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(record.coefficients, vec![vec![2.0]]);
    assert_eq!(record.intercept, vec![1.0]);
    assert_eq!(record.base_output, vec![7.0]);
    assert!(stdout(&o).contains("contribution"));
}

#[test]
fn explain_diabetes_replica_at_index_19() {
    let dir = TempDir::new().unwrap();
    let (model, data) = replica(dir.path(), "diabetes", 7);
    let out = dir.path().join("e.json");
    let o = run(&[
        "explain",
        "--model",
        model.to_str().unwrap(),
        "--instances",
        data.to_str().unwrap(),
        "--index",
        "19",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let record: ExplanationRecord =
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let dataset: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&data).unwrap()).unwrap();
    let row19: Vec<f64> = serde_json::from_value(dataset["instances"][19].clone()).unwrap();
    assert_eq!(record.base_instance, row19);
    assert_eq!(record.coefficients[0].len(), 8);
}

#[test]
fn input_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let model = write(dir.path(), "m.json", AFFINE_1D);
    let wrong = write(dir.path(), "x.json", r#"{"instance": [3.0, 4.0]}"#);
    let out = dir.path().join("e.json");
    let o = run(&[
        "explain",
        "--model",
        model.to_str().unwrap(),
        "--instances",
        wrong.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("dimension"));
    assert!(!out.exists());

    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"schema_version": 1, "input_dim": 2, "layers": [{"type": "dropout", "rate": 1.5}]}"#,
    );
    let inst = write(dir.path(), "y.json", r#"{"instance": [3.0, 4.0]}"#);
    let o = run(&[
        "explain",
        "--model",
        bad.to_str().unwrap(),
        "--instances",
        inst.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&[
        "validate",
        "--model",
        model.to_str().unwrap(),
        "--instances",
        wrong.to_str().unwrap(),
        "--threshold",
        "1.5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(run(&["explain"]).status.code(), Some(2));
}

#[test]
fn validate_writes_one_row_per_point_and_repeats() {
    let dir = TempDir::new().unwrap();
    let (model, data) = replica(dir.path(), "credit", 3);
    let csv = |name: &str| {
        let out = dir.path().join(name);
        let o = run(&[
            "validate",
            "--model",
            model.to_str().unwrap(),
            "--instances",
            data.to_str().unwrap(),
            "--index",
            "3",
            "--threshold",
            "0.1",
            "--points",
            "1000",
            "--seed",
            "42",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(stdout(&o).contains("R^2"));
        fs::read(&out).unwrap()
    };
    let a = csv("a.csv");
    assert_eq!(a, csv("b.csv"));
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("index,distance,nn_0,lin_0"));
    assert_eq!(lines.count(), 1000);
}

#[test]
fn validate_zero_threshold_is_exact() {
    let dir = TempDir::new().unwrap();
    let (model, data) = replica(dir.path(), "temperature", 1);
    let out = dir.path().join("s.csv");
    let o = run(&[
        "validate",
        "--model",
        model.to_str().unwrap(),
        "--instances",
        data.to_str().unwrap(),
        "--threshold",
        "0",
        "--points",
        "20",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 20);
    let first: Vec<&str> = rows[0].split(',').skip(1).collect();
    for row in &rows {
        let fields: Vec<&str> = row.split(',').skip(1).collect();
        assert_eq!(fields, first);
        assert_eq!(fields[0].parse::<f64>().unwrap(), 0.0);
    }
    assert!(stdout(&o).contains("undefined"));
}

#[test]
fn validate_needs_normalization_ranges() {
    let dir = TempDir::new().unwrap();
    let model = write(
        dir.path(),
        "m.json",
        r#"{"schema_version": 1, "input_dim": 1,
        "layers": [{"type": "dense", "weights": [[2.0]], "bias": [1.0], "activation": "tanh"}]}"#,
    );
    let single = write(dir.path(), "x.json", r#"{"instance": [0.3]}"#);
    let out = dir.path().join("s.csv");
    let o = run(&[
        "validate",
        "--model",
        model.to_str().unwrap(),
        "--instances",
        single.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let dataset = write(
        dir.path(),
        "d.json",
        r#"{"instances": [[0.3], [-1.0], [2.0]], "index": 0}"#,
    );
    let o = run(&[
        "validate",
        "--model",
        model.to_str().unwrap(),
        "--instances",
        dataset.to_str().unwrap(),
        "--points",
        "10",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn check_jacobian_outcomes() {
    let dir = TempDir::new().unwrap();
    let model = write(dir.path(), "m.json", AFFINE_1D);
    let inst = write(dir.path(), "x.json", r#"{"instance": [3.0]}"#);
    let o = run(&[
        "check-jacobian",
        "--model",
        model.to_str().unwrap(),
        "--instances",
        inst.to_str().unwrap(),
        "--step",
        "0.5",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("max relative deviation 0.000000e0"));

    let tanh = Architecture {
        name: "tanh".into(),
        input_dim: 4,
        layers: vec![
            LayerPlan::Dense(16, Activation::Tanh),
            LayerPlan::Dense(16, Activation::Tanh),
            LayerPlan::Dense(2, Activation::Tanh),
        ],
    };
    let model = write(dir.path(), "tanh.json", &tanh.instantiate(5).to_json());
    let inst = write(
        dir.path(),
        "t.json",
        r#"{"instance": [0.1, 0.7, 0.4, 0.9]}"#,
    );
    let o = run(&[
        "check-jacobian",
        "--model",
        model.to_str().unwrap(),
        "--instances",
        inst.to_str().unwrap(),
        "--step",
        "1e-5",
        "--tol",
        "1e-5",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));

    // a tolerance no finite difference can meet
    let o = run(&[
        "check-jacobian",
        "--model",
        model.to_str().unwrap(),
        "--instances",
        inst.to_str().unwrap(),
        "--step",
        "0.5",
        "--tol",
        "1e-12",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn check_jacobian_warns_near_relu_kink() {
    let dir = TempDir::new().unwrap();
    // unit 0 pre-activation is 1e-7 at the base
    let model = write(
        dir.path(),
        "m.json",
        r#"{"schema_version": 1, "input_dim": 2, "layers": [
        {"type": "dense", "weights": [[1.0, -1.0], [1.0, 1.0]], "bias": [1e-7, 0.0], "activation": "relu"},
        {"type": "dense", "weights": [[1.0, 1.0]], "bias": [0.0], "activation": "identity"}]}"#,
    );
    let inst = write(dir.path(), "x.json", r#"{"instance": [0.5, 0.5]}"#);
    let o = run(&[
        "check-jacobian",
        "--model",
        model.to_str().unwrap(),
        "--instances",
        inst.to_str().unwrap(),
        "--step",
        "1e-5",
    ]);
    let text = stdout(&o);
    assert!(
        text.contains("warning: relu_kink_at_layer_0_unit_0"),
        "{text}"
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn compare_baseline_table() {
    let dir = TempDir::new().unwrap();
    let model = write(dir.path(), "m.json", AFFINE_1D);
    let inst = write(dir.path(), "x.json", r#"{"instance": [3.0]}"#);
    let o = run(&[
        "compare-baseline",
        "--model",
        model.to_str().unwrap(),
        "--instances",
        inst.to_str().unwrap(),
        "--points",
        "50",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = stdout(&o);
    let fp_row = text.lines().find(|l| l.starts_with("frontprop")).unwrap();
    let bl_row = text.lines().find(|l| l.starts_with("baseline")).unwrap();
    assert_eq!(fp_row.split_whitespace().nth(1), Some("1"));
    assert_eq!(bl_row.split_whitespace().nth(1), Some("50"));

    let o = run(&[
        "compare-baseline",
        "--model",
        model.to_str().unwrap(),
        "--instances",
        inst.to_str().unwrap(),
        "--points",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn replica_rejects_unknown_architecture() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("m.json");
    let o = run(&[
        "replica",
        "--arch",
        "resnet",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}
