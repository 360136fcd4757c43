//! End-to-end checks of the `dircast` binary: every subcommand exercised
//! against a small synthetic dataset in a temp directory.

use std::path::Path;
use std::process::{Command, Output};

fn dircast(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dircast"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    assert!(
        output.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout.clone()).expect("utf-8 output")
}

#[test]
fn full_pipeline_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();

    // 1. Generate bars.
    let gen = dircast(
        &[
            "gen-synthetic",
            "--days",
            "420",
            "--seed",
            "11",
            "--signal",
            "0.9",
            "--out",
            "bars.csv",
        ],
        root,
    );
    let line = stdout(&gen);
    assert!(line.contains("420 bars"), "unexpected output: {line}");
    let csv = std::fs::read_to_string(root.join("bars.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "date,open,high,low,close,volume",
        "bar CSV header"
    );
    assert_eq!(csv.lines().count(), 421, "header plus one row per day");

    // 2. Indicator dump: a header plus one row per labeled feature day.
    let ind = stdout(&dircast(&["dump-indicators", "--data", "bars.csv"], root));
    let header = ind.lines().next().unwrap();
    assert!(header.starts_with("date,label,"), "indicator header: {header}");
    assert_eq!(
        header.split(',').count(),
        2 + 28,
        "date + label + 28 indicators"
    );

    // 3. Feature dump: same shape, every value scaled into [0,1].
    let feat = stdout(&dircast(&["dump-features", "--data", "bars.csv"], root));
    assert_eq!(feat.lines().next().unwrap(), header, "same columns");
    assert_eq!(feat.lines().count(), ind.lines().count(), "same rows");
    for line in feat.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        for v in &fields[2..] {
            let x: f64 = v.parse().expect("numeric feature");
            assert!((0.0..=1.0).contains(&x), "unscaled value {x} in {line}");
        }
    }

    // 4. A small but complete run from a config file.
    let config = r#"
[data]
path = "bars.csv"

[protocol]
train_len = 240
test_len = 60
seed = 5
models = ["svm", "sdae"]

[svm]
c_candidates = [1.0, 10.0]
sigma2_multipliers = [0.6, 1.0]
folds = 3

[sdae]
hidden_sizes = [10]
pretrain_epochs = 20
finetune_epochs = 30
learning_rate = 0.5

[output]
dir = "out"
"#;
    std::fs::write(root.join("run.toml"), config).unwrap();
    let run_out = stdout(&dircast(&["run", "--config", "run.toml"], root));
    assert!(run_out.contains("svm: accuracy"), "run summary: {run_out}");
    assert!(run_out.contains("report.json"), "run lists outputs");
    for file in [
        "out/report.json",
        "out/tables/accuracy.csv",
        "out/tables/precision.csv",
        "out/tables/recall.csv",
        "out/tables/f_score.csv",
        "out/tables/trading.csv",
        "out/tables/drawdowns.csv",
        "out/equity_curve.csv",
        "out/equity_curve.svg",
    ] {
        assert!(root.join(file).exists(), "missing output {file}");
    }

    // 5. report --format json round-trips the document it read.
    let json_echo = stdout(&dircast(&["report", "--report", "out/report.json"], root));
    let reread: serde_json::Value = serde_json::from_str(&json_echo).unwrap();
    let original: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(root.join("out/report.json")).unwrap())
            .unwrap();
    assert_eq!(reread, original, "report echo must not alter the document");

    // 6. report --format csv emits every table section.
    let csv_echo = stdout(&dircast(
        &["report", "--report", "out/report.json", "--format", "csv"],
        root,
    ));
    for section in [
        "# accuracy",
        "# precision",
        "# recall",
        "# f_score",
        "# trading summary",
        "# worst drawdowns",
        "# equity curves",
    ] {
        assert!(csv_echo.contains(section), "missing section {section}");
    }

    // 7. Determinism end to end: run again into a fresh directory and
    //    compare the serialized reports (the config echo differs only in
    //    the output dir, so compare everything else).
    let config2 = config.replace("dir = \"out\"", "dir = \"out2\"");
    std::fs::write(root.join("run2.toml"), config2).unwrap();
    stdout(&dircast(&["run", "--config", "run2.toml"], root));
    let mut a: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(root.join("out/report.json")).unwrap())
            .unwrap();
    let mut b: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(root.join("out2/report.json")).unwrap())
            .unwrap();
    a["config"]["output"].take();
    b["config"]["output"].take();
    assert_eq!(a, b, "same data + seed must reproduce the same report");
}

#[test]
fn run_rejects_bad_config_with_a_useful_message() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "[protocol]\ntrain_len = 0\n").unwrap();
    let out = dircast(&["run", "--config", "bad.toml"], dir.path());
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("train_len"), "error should name the key: {err}");
}

#[test]
fn committed_example_config_states_exactly_the_defaults() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../config.example.toml");
    let text = std::fs::read_to_string(&path).expect("example config at the repo root");
    let parsed = dircast_core::experiment::RunConfig::from_toml_str(&text).unwrap();
    assert_eq!(
        parsed,
        dircast_core::experiment::RunConfig::default(),
        "config.example.toml must spell out every default unchanged"
    );
}

#[test]
fn gen_synthetic_rejects_bad_signal() {
    let dir = tempfile::tempdir().unwrap();
    let out = dircast(
        &[
            "gen-synthetic",
            "--days",
            "200",
            "--signal",
            "1.5",
            "--out",
            "x.csv",
        ],
        dir.path(),
    );
    assert!(!out.status.success());
}
