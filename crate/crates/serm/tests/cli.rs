use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn serm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_serm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Value {
    let out = serm(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("manifest on stdout")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).display().to_string()
}

const SMALL: &[&str] = &[
    "--set",
    "synthetic.n=300",
    "--set",
    "train.max_epochs=3",
    "--set",
    "train.learning_rates=0.1",
];

#[test]
fn synth_writes_parabola_with_tangents() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "synth");
    let manifest = ok(&[
        "synth",
        "--set",
        "synthetic.kind=parabola",
        "--set",
        "synthetic.n=100",
        "-o",
        &out,
    ]);
    assert_eq!(manifest["status"], "ok");
    let mut reader = csv::Reader::from_path(dir.path().join("synth/seed-0/dataset.csv")).unwrap();
    assert_eq!(reader.headers().unwrap().len(), 5);
    let rows: Vec<_> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 100);
    assert!(rows.iter().all(|r| r.len() == 5));
    assert!(dir.path().join("synth/config.txt").exists());
    assert!(dir.path().join("synth/manifest.json").exists());
}

#[test]
fn evaluate_reproduces_training_validation_accuracy() {
    let dir = TempDir::new().unwrap();
    let train_dir = path(&dir, "train");
    let mut args = vec!["train", "-o", &train_dir, "--seeds", "0,1"];
    args.extend_from_slice(SMALL);
    ok(&args);
    for seed in [0, 1] {
        let model = path(&dir, &format!("train/seed-{seed}/model.txt"));
        let eval_dir = path(&dir, &format!("eval-{seed}"));
        let mut args = vec!["evaluate", "-m", &model, "-o", &eval_dir, "--seeds"];
        let s = seed.to_string();
        args.push(&s);
        args.extend_from_slice(SMALL);
        ok(&args);
        let trained = read_json(&dir.path().join(format!("train/seed-{seed}/train_report.json")));
        let evaluated = read_json(&dir.path().join(format!("eval-{seed}/metrics.json")));
        let a = trained["validation_accuracy"].as_f64().unwrap();
        let b = evaluated[0]["validation_accuracy"].as_f64().unwrap();
        assert!((a - b).abs() < 1e-12, "seed {seed}: {a} vs {b}");
        assert!(dir.path().join(format!("eval-{seed}/metrics.csv")).exists());
    }
}

#[test]
fn respond_lists_every_example() {
    let dir = TempDir::new().unwrap();
    let train_dir = path(&dir, "train");
    let mut args = vec!["train", "-o", &train_dir];
    args.extend_from_slice(SMALL);
    ok(&args);
    let model = path(&dir, "train/seed-0/model.txt");
    let out = path(&dir, "respond");
    let mut args = vec!["respond", "-m", &model, "-o", &out];
    args.extend_from_slice(SMALL);
    ok(&args);
    let mut reader = csv::Reader::from_path(dir.path().join("respond/seed-0/responses.csv")).unwrap();
    assert!(reader.headers().unwrap().iter().any(|h| h == "moved"));
    assert_eq!(reader.records().count(), 300);
}

#[test]
fn lambda_sweep_has_one_row_per_value() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "sweep");
    let mut args = vec![
        "sweep",
        "-o",
        &out,
        "--set",
        "sweep.variable=lambda",
        "--set",
        "sweep.values=0,0.1,1",
        "--set",
        "sweep.methods=serm",
        "--set",
        "objective.regularizer=burden",
    ];
    args.extend_from_slice(SMALL);
    ok(&args);
    let rows = read_json(&dir.path().join("sweep/sweep.json"));
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r["status"] == "ok"));
    let mut reader = csv::Reader::from_path(dir.path().join("sweep/sweep.csv")).unwrap();
    assert_eq!(reader.records().count(), 3);
}

#[test]
fn config_errors_are_all_reported() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "bad");
    let result = serm(&[
        "train",
        "-o",
        &out,
        "--set",
        "cost.scale=-1",
        "--set",
        "train.batch_size=zero",
        "--set",
        "method=psychic",
    ]);
    assert_eq!(result.status.code(), Some(2));
    let record: Value = serde_json::from_slice(&result.stderr).unwrap();
    assert_eq!(record["kind"], "config");
    let details: Vec<&str> = record["details"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| d.as_str().unwrap())
        .collect();
    for key in ["cost.scale", "train.batch_size", "method"] {
        assert!(
            details.iter().any(|d| d.starts_with(key)),
            "{key} missing from {details:?}"
        );
    }
    assert_eq!(read_json(&dir.path().join("bad/error.json")), record);
}

#[test]
fn unknown_keys_are_rejected() {
    let result = serm(&["train", "--set", "train.learnin_rate=0.1"]);
    assert_eq!(result.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&result.stderr).contains("train.learnin_rate"));
}

#[test]
fn csv_data_with_bad_rows() {
    let dir = TempDir::new().unwrap();
    let mut text = String::from("a,b,label\n");
    for i in 0..200 {
        let y = if i % 2 == 0 { "yes" } else { "no" };
        let s = if i % 2 == 0 { 1.0 } else { -1.0 };
        text += &format!("{},{},{y}\n", s * 0.6 + 0.01 * (i % 7) as f64, 0.01 * (i % 5) as f64);
    }
    text += "oops,1,yes\n1,,no\n";
    let data = dir.path().join("data.csv");
    fs::write(&data, text).unwrap();
    let out = path(&dir, "train");
    let source = data.display().to_string();
    let mut args = vec![
        "train",
        "-o",
        &out,
        "--data",
        &source,
        "--set",
        "data.positive_label=yes",
    ];
    args.extend_from_slice(SMALL);
    ok(&args);
    let report = read_json(&dir.path().join("train/seed-0/train_report.json"));
    let rejects = report["rejects"].as_array().unwrap();
    assert_eq!(rejects.len(), 2);
    assert!(report["validation_accuracy"].as_f64().unwrap() > 0.9);
}

#[test]
fn missing_model_is_an_error_record() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "eval");
    let result = serm(&["evaluate", "-o", &out]);
    assert!(!result.status.success());
    let record = read_json(&dir.path().join("eval/error.json"));
    assert_eq!(record["status"], "error");
    assert!(record["message"].as_str().unwrap().contains("model"));
}

#[test]
fn bench_writes_table() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "bench");
    ok(&[
        "bench",
        "-o",
        &out,
        "--set",
        "bench.n_train=200",
        "--set",
        "bench.n_val=40",
        "--set",
        "bench.repeats=1",
        "--set",
        "bench.epochs=1",
    ]);
    let rows = read_json(&dir.path().join("bench/bench.json"));
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for row in rows {
        let share = row["ccp_share"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&share));
        assert!(row["total_seconds"].as_f64().unwrap() > 0.0);
    }
    assert!(dir.path().join("bench/bench.csv").exists());
}
