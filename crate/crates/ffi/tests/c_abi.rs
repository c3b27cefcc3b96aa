//! Exercises the exported functions through their C signatures, and builds
//! a C program against the generated header.

use std::ffi::{c_char, c_int, CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use mlab_ffi::*;

const SCENARIO: &str = r#"
schema = 1
name = "ffi"
gamma = { family = "power", k = 1.0 }

[grid]
geometry = "interval"
length = 1.0
cells = 24

[initial]
kind = "cosine"
mean = 1.0
amplitude = 0.5

[stepper]
dt = 0.01
t_end = 0.2
"#;

fn last_error() -> String {
    let mut len = 0usize;
    let mut buf = vec![0 as c_char; 512];
    let s = unsafe { mlab_last_error_message(buf.as_mut_ptr(), buf.len(), &mut len) };
    assert_eq!(s, MlabStatus::Ok);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn scenario() -> *mut MlabScenario {
    let text = CString::new(SCENARIO).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { mlab_scenario_from_toml(text.as_ptr(), &mut s) }, MlabStatus::Ok);
    s
}

#[test]
fn run_round_trip_conserves_mass() {
    let s = scenario();
    let set = CString::new("stepper.t_end=0.1").unwrap();
    assert_eq!(unsafe { mlab_scenario_set(s, set.as_ptr()) }, MlabStatus::Ok);
    let mut run = ptr::null_mut();
    assert_eq!(unsafe { mlab_run(s, ptr::null(), &mut run) }, MlabStatus::Ok);
    unsafe {
        assert_eq!(mlab_run_passed(run), 1);
        assert!((mlab_run_final_time(run) - 0.1).abs() < 1e-12);
        assert_eq!(mlab_run_steps(run), 10);
        let n = mlab_run_cells(run);
        assert_eq!(n, 24);
        let mut u = vec![0.0; n];
        let mut len = 0;
        assert_eq!(mlab_run_final_u(run, u.as_mut_ptr(), n, &mut len), MlabStatus::Ok);
        assert_eq!(len, n);
        let mass: f64 = u.iter().sum::<f64>() / n as f64;
        assert!((mass - 1.0).abs() < 1e-12);
        let mut short = [0.0; 3];
        assert_eq!(mlab_run_final_v(run, short.as_mut_ptr(), 3, &mut len), MlabStatus::BufferTooSmall);
        assert_eq!(len, n);
        let mut report = vec![0 as c_char; 4096];
        assert_eq!(mlab_run_report(run, report.as_mut_ptr(), report.len(), &mut len), MlabStatus::Ok);
        assert!(CStr::from_ptr(report.as_ptr()).to_string_lossy().contains("conservation"));
        mlab_run_free(run);
        mlab_scenario_free(s);
    }
}

#[test]
fn errors_are_coded_and_described() {
    let s = scenario();
    let bad = CString::new("stepper.nope=1").unwrap();
    assert_eq!(unsafe { mlab_scenario_set(s, bad.as_ptr()) }, MlabStatus::Config);
    assert!(last_error().contains("nope"));
    unsafe { mlab_scenario_free(s) };

    let mut out = ptr::null_mut();
    let missing = CString::new("/nonexistent/x.toml").unwrap();
    assert_ne!(unsafe { mlab_scenario_load(missing.as_ptr(), &mut out) }, MlabStatus::Ok);
    assert!(out.is_null());
    assert_eq!(unsafe { mlab_scenario_load(ptr::null(), &mut out) }, MlabStatus::NullPointer);
    assert_eq!(unsafe { mlab_run(ptr::null(), ptr::null(), &mut ptr::null_mut()) }, MlabStatus::NullPointer);
    assert_eq!(unsafe { mlab_run_passed(ptr::null()) }, 0);
    unsafe {
        mlab_run_free(ptr::null_mut());
        mlab_scenario_free(ptr::null_mut());
    }
}

#[test]
fn moser_bound_matches_cli_example() {
    let (mut bound, mut stab): (f64, c_int) = (0.0, 0);
    let s = unsafe { mlab_moser_bound(1.6667, -1.0, 5.5, 1.0, 2.0, 2.0, 60, &mut bound, &mut stab) };
    assert_eq!(s, MlabStatus::Ok);
    assert_eq!(stab, 1);
    assert!((bound - 9.584276762672).abs() < 1e-9, "{bound}");
    let s = unsafe { mlab_moser_bound(0.5, 1.0, 1.0, 1.0, 2.0, 1.0, 60, &mut bound, &mut stab) };
    assert_ne!(s, MlabStatus::Ok);
}

#[test]
fn writes_bundle_to_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = CString::new(tmp.path().to_str().unwrap()).unwrap();
    let s = scenario();
    let mut run = ptr::null_mut();
    assert_eq!(unsafe { mlab_run(s, dir.as_ptr(), &mut run) }, MlabStatus::Ok);
    assert!(tmp.path().join("manifest.txt").is_file());
    unsafe {
        mlab_run_free(run);
        mlab_scenario_free(s);
    }
}

fn header_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include")
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "mlab.h"

int main(void) {
    double bound = 0.0;
    int stabilized = 0;
    MlabStatus s = mlab_moser_bound(1.6667, -1.0, 5.5, 1.0, 2.0, 2.0, 60, &bound, &stabilized);
    if (s != MLAB_STATUS_OK || !stabilized) return 1;
    MlabScenario *sc = NULL;
    if (mlab_scenario_load("/nonexistent.toml", &sc) == MLAB_STATUS_OK || sc != NULL) return 2;
    char msg[256];
    size_t len = 0;
    if (mlab_last_error_message(msg, sizeof msg, &len) != MLAB_STATUS_OK || len < 2) return 3;
    printf("%s %.6f\n", mlab_version(), bound);
    return 0;
}
"#;

#[test]
fn header_compiles_and_links_from_c() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("main.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let include = format!("-I{}", header_dir().display());
    let syntax =
        Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", &include]).arg(&src).status();
    let Ok(syntax) = syntax else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(syntax.success(), "header does not compile");

    // The static library sits next to the test's deps directory.
    let exe = std::env::current_exe().unwrap();
    let lib = exe.parent().unwrap().parent().unwrap().join("libmlab_ffi.a");
    if !lib.is_file() {
        eprintln!("{} not built; link step skipped", lib.display());
        return;
    }
    let bin = tmp.path().join("main");
    let status = Command::new("cc")
        .args(["-std=c99", &include])
        .arg(&src)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "link failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "C program exited {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).contains("9.584277"));
}
