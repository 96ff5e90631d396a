use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bugscope"))
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = bin().args(["stats", "--no-such-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ast_file_mode_prints_histogram() {
    let file = fixtures().join("golden/06_ternary_nested.sv");
    let out = bin().args(["ast", "--file", file.to_str().unwrap()]).output().unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("\"ConditionalExpression\": 2"), "{stdout}");
}

#[test]
fn ast_delta_mode_prints_signed_counts() {
    let dir = fixtures().join("golden");
    let out = bin()
        .args(["ast", "--before"])
        .arg(dir.join("01_empty_module.sv"))
        .arg("--after")
        .arg(dir.join("02_ansi_ports.sv"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let delta: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(delta, serde_json::json!({"ContinuousAssign": 1}));
}

#[test]
fn stats_without_annotations_counts_everything_functional() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let out = bin()
        .args(["stats", "--offline", "--cache"])
        .arg(fixtures().join("cache"))
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("security_share.csv")).unwrap();
    let overall = csv.lines().find(|l| l.starts_with("overall")).unwrap();
    assert!(overall.starts_with("overall,195,0,195,"), "{overall}");
}

#[test]
fn missing_cache_fails_in_its_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["stats", "--offline", "--repo", "lowRISC/opentitan", "--cache"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stage failed"));
}
