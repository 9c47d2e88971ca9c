//! End-to-end runs of the batch front door: exit codes, report schema,
//! determinism, and the shipped example configs.

use std::path::{Path, PathBuf};
use std::process::Command;

use lipgeo::report::{validate_report, without_timestamp};
use lipgeo_cli::{parse_config, run_config};

fn config_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run_text(text: &str, out: &Path) -> lipgeo_cli::RunOutcome {
    let cfg = parse_config(text).expect("config parses");
    run_config(&cfg, out).expect("run completes")
}

#[test]
fn cone_llne_reaches_the_expected_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run_text(
        r#"
seed = 7
[[sets]]
corpus = "cone"
[[tasks]]
kind = "llne"
set = "cone"
t_grid = [4.0, 8.0, 16.0, 32.0, 64.0]
expect = "bounded"
"#,
        dir.path(),
    );
    assert_eq!(outcome.exit_code, 0);
    let task = &outcome.report.tasks[0];
    assert_eq!(task.verdict.as_deref(), Some("bounded"));

    // report file validates against the published schema
    let raw = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    let value: serde_json::Value = serde_json::from_str(&raw).unwrap();
    validate_report(&value).unwrap();

    // the curve CSV exists and has the declared grid
    let curve = dir.path().join(&task.curves[0]);
    let text = std::fs::read_to_string(curve).unwrap();
    assert_eq!(text.lines().count(), 6); // header + 5 grid values
    assert!(text.starts_with("t,ratio"));

    // summary names the task
    let summary = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.contains("llne"));
    assert!(summary.contains("verdict=bounded"));
}

#[test]
fn sheets_expectation_diverging_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run_text(
        r#"
seed = 7
[[sets]]
corpus = "tangent-sheets-infinity"
[[tasks]]
kind = "llne"
set = "tangent-sheets-infinity"
expect = "diverging"
"#,
        dir.path(),
    );
    assert_eq!(outcome.exit_code, 0);
}

#[test]
fn undeclared_set_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(
        r#"
[[tasks]]
kind = "lne"
set = "nowhere"
"#,
    )
    .unwrap();
    let err = run_config(&cfg, dir.path()).unwrap_err();
    assert!(err.to_string().contains("nowhere"), "{err}");
}

#[test]
fn verdict_mismatch_exits_two_without_aborting() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run_text(
        r#"
seed = 7
[[sets]]
corpus = "tangent-sheets-infinity"
[[tasks]]
kind = "llne"
set = "tangent-sheets-infinity"
expect = "bounded"
[[tasks]]
kind = "sample"
set = "tangent-sheets-infinity"
"#,
        dir.path(),
    );
    assert_eq!(outcome.exit_code, 2);
    assert_eq!(outcome.report.tasks.len(), 2, "later tasks still ran");
}

#[test]
fn task_errors_exit_one_and_are_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run_text(
        r#"
seed = 7
[[sets]]
corpus = "circle"
[[tasks]]
kind = "llne"
set = "circle"
t_grid = [50.0, 100.0]
[[tasks]]
kind = "lne"
set = "circle"
"#,
        dir.path(),
    );
    // all slices empty at those radii -> task error, but the next task ran
    assert_eq!(outcome.exit_code, 1);
    assert_eq!(outcome.report.tasks.len(), 2);
    assert!(outcome.report.tasks[0].error.is_some());
    assert!(outcome.report.tasks[1].error.is_none());
}

#[test]
fn identical_seeds_give_byte_identical_reports() {
    let text = r#"
seed = 11
[[sets]]
corpus = "tangent-sheets-infinity"
[[tasks]]
kind = "llne"
set = "tangent-sheets-infinity"
[[tasks]]
kind = "tangent-cone"
set = "tangent-sheets-infinity"
band = [5.5, 6.7]
"#;
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    run_text(text, d1.path());
    run_text(text, d2.path());
    let r1: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d1.path().join("report.json")).unwrap())
            .unwrap();
    let r2: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d2.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(
        serde_json::to_string(&without_timestamp(&r1)).unwrap(),
        serde_json::to_string(&without_timestamp(&r2)).unwrap()
    );
    // curve files byte-identical too
    let c1 = std::fs::read(d1.path().join("00-llne-tangent-sheets-infinity.csv")).unwrap();
    let c2 = std::fs::read(d2.path().join("00-llne-tangent-sheets-infinity.csv")).unwrap();
    assert_eq!(c1, c2);
}

#[test]
fn shipped_configs_run_clean() {
    // the heavier demos are covered by the acceptance suite; run the compact
    // ones end to end
    for name in ["custom-set.toml", "transforms.toml"] {
        let text = std::fs::read_to_string(config_dir().join(name)).unwrap();
        let cfg = parse_config(&text).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let outcome = run_config(&cfg, dir.path()).unwrap();
        assert_eq!(outcome.exit_code, 0, "{name} failed: {:?}", outcome.report.tasks);
    }
}

#[test]
fn binary_runs_and_lists_corpus() {
    let bin = env!("CARGO_BIN_EXE_lipgeo");
    let out = Command::new(bin).arg("list-corpus").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("cone"));
    assert!(text.contains("pi/2"));
    assert!(text.contains("segment"));

    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.toml");
    std::fs::write(
        &cfg_path,
        r#"
[[sets]]
corpus = "segment"
[[tasks]]
kind = "lne"
set = "segment"
"#,
    )
    .unwrap();
    let out = Command::new(bin)
        .arg("run")
        .arg(&cfg_path)
        .arg("--out")
        .arg(dir.path().join("out"))
        .arg("--seed")
        .arg("3")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("out/report.json").exists());
}
