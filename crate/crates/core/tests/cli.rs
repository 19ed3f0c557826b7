use std::fs;
use std::path::Path;
use std::process::Command;

use pendency::cli::run;
use pendency::eval::EvaluationReport;
use pendency::features::Dataset;

fn pendency(dir: &Path, args: &[&str]) -> i32 {
    let mut argv = vec!["pendency", "--output-dir", dir.to_str().unwrap()];
    argv.extend_from_slice(args);
    run(argv)
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

#[test]
fn pipeline_smoke() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert_eq!(pendency(d, &["--seed", "7", "synth", "--rows", "2000"]), 0);
    assert_eq!(pendency(d, &["ingest", "--input", &p(d, "cases.csv")]), 0);
    assert_eq!(pendency(d, &["featurize", "--input", &p(d, "clean.csv")]), 0);
    assert_eq!(pendency(d, &["train", "--input", &p(d, "dataset.json"), "--model", "random_forest", "--n-trees", "10"]), 0);
    assert_eq!(
        pendency(d, &["evaluate", "--input", &p(d, "dataset.json"), "--model-file", &p(d, "model.json")]),
        0
    );
    let report: EvaluationReport = serde_json::from_str(&fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
    assert!(report.accuracy > 0.5 && report.accuracy <= 1.0);
    assert_eq!(
        pendency(d, &["explain", "--input", &p(d, "dataset.json"), "--model-file", &p(d, "model.json"), "--rows", "5"]),
        0
    );
    let attr = fs::read_to_string(d.join("attributions.csv")).unwrap();
    assert_eq!(attr.lines().count(), 6);
    assert_eq!(pendency(d, &["report", "--input", &p(d, "report.json")]), 0);
    for f in ["confusion.csv", "accuracy.csv", "comparative.csv", "importance.svg", "manifest_train.json"] {
        assert!(d.join(f).exists(), "{f} missing");
    }
    // Inputs are left untouched by later stages.
    let before = fs::read(d.join("cases.csv")).unwrap();
    assert_eq!(pendency(d, &["ingest", "--input", &p(d, "cases.csv")]), 0);
    assert_eq!(fs::read(d.join("cases.csv")).unwrap(), before);
}

#[test]
fn baseline_tree_honors_depth() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert_eq!(pendency(d, &["synth", "--rows", "1500"]), 0);
    assert_eq!(pendency(d, &["ingest", "--input", &p(d, "cases.csv")]), 0);
    assert_eq!(pendency(d, &["featurize", "--input", &p(d, "clean.csv")]), 0);
    assert_eq!(pendency(d, &["train", "--input", &p(d, "dataset.json"), "--model", "tree", "--max-depth", "10"]), 0);
    let m = pendency::forest::Model::load(&d.join("model.json")).unwrap();
    assert_eq!(m.trees.len(), 1);
    assert!(m.trees[0].depth() <= 10);
}

#[test]
fn onehot_svd_projects_to_k_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert_eq!(pendency(d, &["synth", "--rows", "1500"]), 0);
    assert_eq!(pendency(d, &["ingest", "--input", &p(d, "cases.csv")]), 0);
    assert_eq!(
        pendency(d, &["featurize", "--input", &p(d, "clean.csv"), "--encoder", "onehot-svd", "--k", "200", "--svd-iters", "30"]),
        0
    );
    let ds: Dataset = serde_json::from_str(&fs::read_to_string(d.join("dataset.json")).unwrap()).unwrap();
    assert_eq!(ds.matrix.n_cols(), 200);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert_eq!(pendency(d, &["train", "--no-such-flag"]), 1);
    assert_eq!(pendency(d, &["frobnicate"]), 1);
    assert_eq!(pendency(d, &["featurize", "--encoder", "onehot"]), 1);
    assert_eq!(pendency(d, &["evaluate", "--input", &p(d, "missing.json"), "--model-file", &p(d, "m.json")]), 2);
    fs::write(d.join("bad.csv"), "case_id,date_of_filing\nx,2011-01-01\n").unwrap();
    assert_eq!(pendency(d, &["ingest", "--input", &p(d, "bad.csv")]), 2);
    assert_eq!(pendency(d, &["--threads", "0", "synth"]), 1);
}

#[test]
fn data_dir_supplies_default_paths() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let bin = env!("CARGO_BIN_EXE_pendency");
    let status = |args: &[&str]| {
        Command::new(bin)
            .args(args)
            .env("PENDENCY_DATA_DIR", d)
            .output()
            .unwrap()
            .status
            .code()
            .unwrap()
    };
    assert_eq!(status(&["synth", "--rows", "800"]), 0);
    assert_eq!(status(&["ingest"]), 0);
    assert_eq!(status(&["featurize"]), 0);
    assert_eq!(status(&["train", "--model", "gbdt", "--n-trees", "5"]), 0);
    assert_eq!(status(&["evaluate"]), 0);
    assert!(d.join("report.json").exists());
    let out = Command::new(bin).arg("ingest").env_remove("PENDENCY_DATA_DIR").current_dir(d).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn thread_count_does_not_change_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert_eq!(pendency(d, &["synth", "--rows", "1500"]), 0);
    assert_eq!(pendency(d, &["ingest", "--input", &p(d, "cases.csv")]), 0);
    assert_eq!(pendency(d, &["featurize", "--input", &p(d, "clean.csv")]), 0);
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = d.join(format!("t{threads}"));
        let o = out.to_str().unwrap();
        let ds = p(d, "dataset.json");
        let model = p(&out, "model.json");
        assert_eq!(run(["pendency", "--threads", threads, "--output-dir", o, "train", "--input", &ds, "--n-trees", "12"]), 0);
        assert_eq!(run(["pendency", "--threads", threads, "--output-dir", o, "evaluate", "--input", &ds, "--model-file", &model]), 0);
        outputs.push(
            ["model.json", "report.json", "confusion.csv", "accuracy.csv"]
                .map(|f| fs::read(out.join(f)).unwrap()),
        );
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn search_writes_leaderboard() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert_eq!(pendency(d, &["synth", "--rows", "1500"]), 0);
    assert_eq!(pendency(d, &["ingest", "--input", &p(d, "cases.csv")]), 0);
    assert_eq!(pendency(d, &["search", "--input", &p(d, "clean.csv"), "--trials", "3"]), 0);
    let board = fs::read_to_string(d.join("leaderboard.jsonl")).unwrap();
    assert!(!board.is_empty() && board.lines().count() <= 3);
    assert!(d.join("best_model.json").exists() && d.join("test_report.json").exists());
}
