//! End-to-end checks of the `mlab` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn mlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlab")).args(args).output().expect("spawn mlab")
}

fn scenario(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name).to_string_lossy().into_owned()
}

fn out_dir(tmp: &tempfile::TempDir, name: &str) -> String {
    tmp.path().join(name).to_string_lossy().into_owned()
}

#[test]
fn run_writes_bundle_and_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_dir(&tmp, "constant");
    let o = mlab(&["run", "--config", &scenario("constant.toml"), "--out", &out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for file in ["trajectory.csv", "report.txt", "final_u.csv", "final_v.csv", "checkpoint.mlck", "manifest.txt"] {
        assert!(PathBuf::from(&out).join(file).is_file(), "missing {file}");
    }
}

#[test]
fn overrides_reach_the_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_dir(&tmp, "o");
    let o = mlab(&[
        "-q",
        "run",
        "--config",
        &scenario("constant.toml"),
        "--out",
        &out,
        "--set",
        "stepper.t_end=0.2",
        "--set",
        "name=renamed",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let manifest = std::fs::read_to_string(Path::new(&out).join("manifest.txt")).unwrap();
    assert!(manifest.contains("scenario: renamed"), "{manifest}");
    assert!(manifest.contains("t_end = 0.2"), "{manifest}");
}

#[test]
fn configuration_errors_exit_two() {
    let o = mlab(&["run", "--config", "/nonexistent/scenario.toml"]);
    assert_eq!(o.status.code(), Some(2));
    let o = mlab(&["run", "--config", &scenario("constant.toml"), "--set", "stepper.bogus=1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = mlab(&["run", "--config", &scenario("constant.toml"), "--set", "stepper.dt=-1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failing_check_exits_one_and_names_it() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_dir(&tmp, "bad");
    // A lower limit above the attained v invalidates the nonlocal bound.
    let text = std::fs::read_to_string(scenario("constant.toml")).unwrap().replace("k = 2.0 }", "k = 2.0, a = 5.0 }");
    let path = tmp.path().join("bad.toml");
    std::fs::write(&path, text).unwrap();
    let o = mlab(&["run", "--config", path.to_str().unwrap(), "--out", &out]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("failing checks: gamma_bound"));
}

#[test]
fn moser_reports_bound() {
    let o = mlab(&["moser", "--rho", "2", "--c", "-1", "--delta0", "5.5", "--b", "1", "--C0", "2", "--C1", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("stabilized"), "{text}");
    let o = mlab(&["moser", "--rho", "0.5", "--c", "1", "--delta0", "1", "--b", "1", "--C0", "2", "--C1", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn converge_writes_orders() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_dir(&tmp, "conv");
    let o = mlab(&["converge", "--config", &scenario("convergence.toml"), "--out", &out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(Path::new(&out).join("convergence.csv")).unwrap();
    assert!(csv.lines().count() >= 5, "{csv}");
}
