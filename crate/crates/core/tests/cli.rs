//! Binary-level contract: exit codes, stderr diagnostics, and artifact
//! layout, exercised through the installed executable like a user would.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_gradeq")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(bin())
        .args(["--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

const SOLVE_BODY: &str = r#"
mode = "solve"
out_dir = "unused"

[domain]
shape = "disk"
radius = 1.0
resolution = 12

[problem]
gamma = 1.0
lambda = 1.0
f = [[0.0, 0.0], [4.0, 4.0]]

[schedule]
eps_min = 1e-3
"#;

#[test]
fn solve_succeeds_and_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "solve.toml", SOLVE_BODY);
    let out = tmp.path().join("out");
    let result = run(&cfg, &out, &[]);
    assert!(result.status.success(), "stderr: {}", String::from_utf8_lossy(&result.stderr));
    for name in ["report.json", "solution.csv"] {
        assert!(out.join(name).is_file(), "{name} missing");
    }
    assert!(out.join("convergence").is_dir());
    let report = std::fs::read_to_string(out.join("report.json")).unwrap();
    assert!(report.contains("\"outcome\": \"completed\""));
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("[PASS]"), "stdout: {stdout}");
}

#[test]
fn decreasing_breakpoints_rejected_naming_offender() {
    let tmp = tempfile::tempdir().unwrap();
    let body = SOLVE_BODY.replace("[[0.0, 0.0], [4.0, 4.0]]", "[[0.0, 1.0], [1.0, 0.5], [4.0, 2.0]]");
    let cfg = write_config(tmp.path(), "bad_f.toml", &body);
    let result = run(&cfg, &tmp.path().join("out"), &[]);
    assert_eq!(result.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("breakpoint 1"), "stderr: {stderr}");
}

#[test]
fn inverted_ellipticity_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let body = SOLVE_BODY.replace("lambda = 1.0", "lambda = 3.0\nlambda_upper = 1.0");
    let cfg = write_config(tmp.path(), "bad_ell.toml", &body);
    let result = run(&cfg, &tmp.path().join("out"), &[]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn unknown_config_key_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let body = format!("{SOLVE_BODY}\n[schedule2]\nx = 1\n");
    let cfg = write_config(tmp.path(), "bad_key.toml", &body);
    let result = run(&cfg, &tmp.path().join("out"), &[]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn exhausted_iteration_budget_exits_3_with_history() {
    let tmp = tempfile::tempdir().unwrap();
    let body = format!("{SOLVE_BODY}max_picard = 1\n");
    let cfg = write_config(tmp.path(), "starved.toml", &body);
    let out = tmp.path().join("out");
    let result = run(&cfg, &out, &[]);
    assert_eq!(result.status.code(), Some(3));
    let report = std::fs::read_to_string(out.join("report.json")).unwrap();
    assert!(report.contains("\"outcome\": \"non-convergence\""));
    assert!(report.contains("failure_history"));
}

#[test]
fn property_check_is_repeatable_byte_for_byte() {
    let tmp = tempfile::tempdir().unwrap();
    let body = r#"
mode = "property-check"
out_dir = "unused"
seed = 11

[domain]
shape = "disk"
radius = 1.0
resolution = 12

[problem]
gamma = 1.0
lambda = 1.0
f_const = 1.0
"#;
    let cfg = write_config(tmp.path(), "props.toml", body);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(run(&cfg, &a, &[]).status.success());
    assert!(run(&cfg, &b, &[]).status.success());
    for name in ["report.json", "verdicts.csv"] {
        let bytes_a = std::fs::read(a.join(name)).unwrap();
        let bytes_b = std::fs::read(b.join(name)).unwrap();
        assert_eq!(bytes_a, bytes_b, "{name} differs between identical runs");
    }
}

#[test]
fn oracle_compare_smoke() {
    let tmp = tempfile::tempdir().unwrap();
    let body = r#"
mode = "oracle-compare"
out_dir = "unused"

[domain]
shape = "disk"
radius = 1.0
resolution = 16

[problem]
gamma = 1.0
lambda = 1.0
f_const = 1.5
"#;
    let cfg = write_config(tmp.path(), "oracle.toml", body);
    let out = tmp.path().join("out");
    let result = run(&cfg, &out, &[]);
    assert!(result.status.success(), "stderr: {}", String::from_utf8_lossy(&result.stderr));
    assert!(out.join("oracle_compare.csv").is_file());
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("oracle-self-check"));
    assert!(stdout.contains("solution-vs-oracle"));
}

#[test]
fn unknown_mode_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "solve.toml", SOLVE_BODY);
    let result = run(&cfg, &tmp.path().join("out"), &["explode"]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn invalid_thread_override_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "solve.toml", SOLVE_BODY);
    let result = Command::new(bin())
        .args(["--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .env("GRADEQ_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn resolution_override_changes_study_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let body = r#"
mode = "convergence-study"
out_dir = "unused"

[domain]
shape = "disk"
radius = 1.0
resolutions = [16, 32]

[problem]
gamma = 1.0
lambda = 1.0
f_const = 1.5

[study]
expect_monotone = true
"#;
    let cfg = write_config(tmp.path(), "study.toml", body);
    let out = tmp.path().join("out");
    let result = run(&cfg, &out, &["--resolution", "8", "--resolution", "16"]);
    assert!(result.status.success(), "stderr: {}", String::from_utf8_lossy(&result.stderr));
    let study = std::fs::read_to_string(out.join("study.csv")).unwrap();
    let rows: Vec<&str> = study.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("8,"));
    assert!(rows[1].starts_with("16,"));
}
