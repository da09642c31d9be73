use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bvr-shotlab"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = bin(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    bin(dir, args).status.code().expect("exit code")
}

#[test]
fn standalone_stages_match_the_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fs::write(
        d.join("exp.cfg"),
        "# small run\npreset = desk\nn_cases = 12\nseeds_per_case = 4\nmodels = lr, gnb\n\
         resamplers = none, smote\ngrid = reduced\nartifact_dir = art\ntiming_repeats = 1\n",
    )
    .unwrap();
    let first = ok(d, &["run", "--config", "exp.cfg"]);
    assert!(first.contains("ran doe"), "{first}");
    assert!(ok(d, &["run", "--config", "exp.cfg"]).contains("up to date"));

    ok(d, &["doe", "--n-cases", "12", "--seed", "2023", "--out", "design.csv"]);
    ok(d, &["simulate", "--design", "design.csv", "--seeds-per-case", "4", "--seed", "2023", "--jobs", "2"]);
    ok(d, &["build-dataset", "--shots", "shots.csv", "--design", "design.csv", "--out", "dataset.csv"]);
    fs::create_dir(d.join("eda")).unwrap();
    ok(d, &["eda", "--dataset", "dataset.csv", "--out-dir", "eda"]);
    for f in ["design.csv", "shots.csv", "runs.csv", "dataset.csv"] {
        assert_eq!(fs::read(d.join(f)).unwrap(), fs::read(d.join("art").join(f)).unwrap(), "{f}");
    }
    for f in ["eda_report.md", "eda_stats.csv", "correlation.csv", "correlation.svg"] {
        assert_eq!(fs::read(d.join("eda").join(f)).unwrap(), fs::read(d.join("art").join(f)).unwrap(), "{f}");
    }

    ok(d, &["tune", "--family", "lr", "--dataset", "dataset.csv", "--reduced-grid", "--out", "lr.json"]);
    ok(d, &["train", "--family", "lr", "--params", "lr.json", "--dataset", "dataset.csv", "--resampler", "smote", "--out", "lr-smote.json"]);
    assert_eq!(
        fs::read(d.join("lr-smote.json")).unwrap(),
        fs::read(d.join("art/models/lr-smote.json")).unwrap()
    );
    fs::write(d.join("gnb.json"), "{\"var_smoothing\": 0.01}").unwrap();
    ok(d, &["train", "--family", "gnb", "--params", "gnb.json", "--dataset", "dataset.csv", "--out", "gnb.json.model"]);
    ok(d, &["evaluate", "--model", "lr-smote.json", "--dataset", "dataset.csv", "--repeats", "1", "--out", "m1.json"]);
    ok(d, &["evaluate", "--model", "gnb.json.model", "--dataset", "dataset.csv", "--repeats", "1", "--out", "m2.json"]);
    fs::create_dir(d.join("report")).unwrap();
    ok(d, &["report", "--metrics", "m1.json", "m2.json", "--out-dir", "report"]);
    let csv = fs::read_to_string(d.join("report/results.csv")).unwrap();
    assert!(csv.starts_with("model,resampler,accuracy,precision,recall,f1"));
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.contains("LR,smote,") && csv.contains("NB,none,"), "{csv}");
}

#[test]
fn configuration_problems_exit_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert_eq!(code(d, &["run", "--config", "missing.cfg"]), 2);
    fs::write(d.join("bad.cfg"), "colour = blue\n").unwrap();
    assert_eq!(code(d, &["run", "--config", "bad.cfg"]), 2);
    fs::write(d.join("bad.cfg"), "grid = enormous\n").unwrap();
    assert_eq!(code(d, &["run", "--config", "bad.cfg"]), 2);
    assert_eq!(code(d, &["doe", "--n-cases", "0"]), 2);
    assert_eq!(code(d, &["tune", "--family", "cnn", "--dataset", "x.csv"]), 2);
    assert_eq!(code(d, &["frobnicate"]), 2);
}

#[test]
fn stage_failures_exit_with_3() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fs::write(d.join("tiny.cfg"), "n_cases = 1\nseeds_per_case = 1\nartifact_dir = art\n").unwrap();
    assert_eq!(code(d, &["run", "--config", "tiny.cfg"]), 3);
    assert_eq!(code(d, &["eda", "--dataset", "nowhere.csv"]), 3);
    fs::write(d.join("design.csv"), "not,a,design\n1,2,3\n").unwrap();
    assert_eq!(code(d, &["simulate", "--design", "design.csv"]), 3);
}
