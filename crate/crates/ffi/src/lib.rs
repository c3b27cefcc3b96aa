//! C ABI over `mlab-core`.
//!
//! Scenarios and runs are opaque heap handles created by `mlab_*_load` /
//! `mlab_run` and released by the matching `*_free`. Every fallible call
//! returns an [`MlabStatus`]; on failure the message is kept per thread and
//! can be fetched with [`mlab_last_error_message`]. Panics never cross the
//! boundary: they are reported as [`MlabStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use mlab::diagnostics::{moser_lemma_check, MoserParams};
use mlab::harness::{run_scenario, ScenarioConfig, ScenarioRun};
use mlab::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Domain = 4,
    Solver = 5,
    NonFinite = 6,
    Format = 7,
    Io = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// A parsed, validated scenario.
pub struct MlabScenario {
    cfg: ScenarioConfig,
}

/// The outcome of simulating a scenario.
pub struct MlabRun {
    run: ScenarioRun,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> MlabStatus {
    match e {
        Error::Config(_) => MlabStatus::Config,
        Error::Domain(_) | Error::GridMismatch { .. } => MlabStatus::Domain,
        Error::Solver { .. } => MlabStatus::Solver,
        Error::NonFinite { .. } => MlabStatus::NonFinite,
        Error::Format(_) => MlabStatus::Format,
        Error::Io(_) => MlabStatus::Io,
    }
}

struct Failure(MlabStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MlabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MlabStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            MlabStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(MlabStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(MlabStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure(MlabStatus::NullPointer, format!("{what} is null")))
}

fn out_arg<T>(p: *mut T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure(MlabStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

/// Copies `text` plus a terminating NUL into `buf`; `*len` receives the
/// required size including the NUL.
unsafe fn copy_text(text: &str, buf: *mut c_char, cap: usize, len: *mut usize) -> Result<(), Failure> {
    out_arg(len, "len")?;
    *len = text.len() + 1;
    if buf.is_null() || cap < text.len() + 1 {
        return Err(Failure(MlabStatus::BufferTooSmall, format!("need {} bytes", text.len() + 1)));
    }
    ptr::copy_nonoverlapping(text.as_ptr().cast::<c_char>(), buf, text.len());
    *buf.add(text.len()) = 0;
    Ok(())
}

unsafe fn copy_values(values: &[f64], buf: *mut f64, cap: usize, len: *mut usize) -> Result<(), Failure> {
    out_arg(len, "len")?;
    *len = values.len();
    if buf.is_null() || cap < values.len() {
        return Err(Failure(MlabStatus::BufferTooSmall, format!("need {} values", values.len())));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (capacity
/// `cap`, NUL-terminated). `*len` receives the size needed.
///
/// # Safety
/// `buf` must be valid for `cap` bytes or null; `len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mlab_last_error_message(buf: *mut c_char, cap: usize, len: *mut usize) -> MlabStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    match copy_text(&msg, buf, cap, len) {
        Ok(()) => MlabStatus::Ok,
        Err(Failure(status, _)) => status,
    }
}

/// Loads and validates a scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn mlab_scenario_load(path: *const c_char, out: *mut *mut MlabScenario) -> MlabStatus {
    guard(|| {
        out_arg(out, "out")?;
        let cfg = ScenarioConfig::load(Path::new(str_arg(path, "path")?))?;
        *out = Box::into_raw(Box::new(MlabScenario { cfg }));
        Ok(())
    })
}

/// Parses and validates a scenario from TOML text.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn mlab_scenario_from_toml(text: *const c_char, out: *mut *mut MlabScenario) -> MlabStatus {
    guard(|| {
        out_arg(out, "out")?;
        let cfg = ScenarioConfig::from_toml_str(str_arg(text, "text")?)?;
        *out = Box::into_raw(Box::new(MlabScenario { cfg }));
        Ok(())
    })
}

/// Applies a `key=value` override (same syntax as `mlab --set`). The
/// scenario is left unchanged on failure.
///
/// # Safety
/// `scenario` must come from this library; `assignment` must be a
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mlab_scenario_set(scenario: *mut MlabScenario, assignment: *const c_char) -> MlabStatus {
    guard(|| {
        let s = scenario.as_mut().ok_or_else(|| Failure(MlabStatus::NullPointer, "scenario is null".into()))?;
        let updated = s.cfg.with_overrides(&[str_arg(assignment, "assignment")?.to_owned()])?;
        s.cfg = updated;
        Ok(())
    })
}

/// Writes the scenario back as TOML.
///
/// # Safety
/// `scenario` must come from this library; `buf` valid for `cap` bytes or
/// null; `len` valid.
#[no_mangle]
pub unsafe extern "C" fn mlab_scenario_to_toml(
    scenario: *const MlabScenario,
    buf: *mut c_char,
    cap: usize,
    len: *mut usize,
) -> MlabStatus {
    guard(|| {
        let text = ref_arg(scenario, "scenario")?.cfg.to_toml()?;
        copy_text(&text, buf, cap, len)
    })
}

/// Releases a scenario. Null is ignored.
///
/// # Safety
/// `scenario` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mlab_scenario_free(scenario: *mut MlabScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Simulates the scenario and evaluates its checks. With `out_dir` non-null
/// the artifact bundle is written there.
///
/// # Safety
/// `scenario` must come from this library; `out_dir` null or NUL-terminated;
/// `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn mlab_run(
    scenario: *const MlabScenario,
    out_dir: *const c_char,
    out: *mut *mut MlabRun,
) -> MlabStatus {
    guard(|| {
        out_arg(out, "out")?;
        let cfg = &ref_arg(scenario, "scenario")?.cfg;
        let dir = if out_dir.is_null() { None } else { Some(Path::new(str_arg(out_dir, "out_dir")?)) };
        let run = run_scenario(cfg, dir)?;
        *out = Box::into_raw(Box::new(MlabRun { run }));
        Ok(())
    })
}

/// 1 when every asserted check passed, 0 otherwise (or for a null run).
///
/// # Safety
/// `run` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn mlab_run_passed(run: *const MlabRun) -> c_int {
    run.as_ref().map_or(0, |r| c_int::from(r.run.failing().is_empty()))
}

/// Final time reached (NaN for a null run).
///
/// # Safety
/// `run` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn mlab_run_final_time(run: *const MlabRun) -> f64 {
    run.as_ref().map_or(f64::NAN, |r| r.run.final_state.t())
}

/// Number of time steps taken (0 for a null run).
///
/// # Safety
/// `run` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn mlab_run_steps(run: *const MlabRun) -> u64 {
    run.as_ref().map_or(0, |r| r.run.final_state.step_index())
}

/// Number of grid cells (0 for a null run).
///
/// # Safety
/// `run` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn mlab_run_cells(run: *const MlabRun) -> usize {
    run.as_ref().map_or(0, |r| r.run.final_state.u().len())
}

/// Copies the final density into `buf`; `*len` receives the cell count.
///
/// # Safety
/// `run` must come from this library; `buf` valid for `cap` values or null;
/// `len` valid.
#[no_mangle]
pub unsafe extern "C" fn mlab_run_final_u(
    run: *const MlabRun,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> MlabStatus {
    guard(|| copy_values(ref_arg(run, "run")?.run.final_state.u().values(), buf, cap, len))
}

/// Copies the final signal into `buf`; `*len` receives the cell count.
///
/// # Safety
/// As for [`mlab_run_final_u`].
#[no_mangle]
pub unsafe extern "C" fn mlab_run_final_v(
    run: *const MlabRun,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> MlabStatus {
    guard(|| copy_values(ref_arg(run, "run")?.run.final_state.v().values(), buf, cap, len))
}

/// The diagnostics table as text (the same as `report.txt`).
///
/// # Safety
/// `run` must come from this library; `buf` valid for `cap` bytes or null;
/// `len` valid.
#[no_mangle]
pub unsafe extern "C" fn mlab_run_report(
    run: *const MlabRun,
    buf: *mut c_char,
    cap: usize,
    len: *mut usize,
) -> MlabStatus {
    guard(|| copy_text(&ref_arg(run, "run")?.run.report.summary(), buf, cap, len))
}

/// Releases a run. Null is ignored.
///
/// # Safety
/// `run` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mlab_run_free(run: *mut MlabRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Evaluates the worst case of the recursive Moser-type inequality over
/// `depth` terms. `*bound` receives max η_j^{1/δ_j}, `*stabilized` 1 or 0.
///
/// # Safety
/// `bound` and `stabilized` must be valid for writes.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn mlab_moser_bound(
    rho: f64,
    c: f64,
    delta0: f64,
    b: f64,
    c0: f64,
    c1: f64,
    depth: usize,
    bound: *mut f64,
    stabilized: *mut c_int,
) -> MlabStatus {
    guard(|| {
        out_arg(bound, "bound")?;
        out_arg(stabilized, "stabilized")?;
        let p = MoserParams::new(rho, b, c, c0, c1, delta0)?;
        let outcome = moser_lemma_check(&p, depth)?;
        *bound = outcome.bound;
        *stabilized = c_int::from(outcome.stabilized);
        Ok(())
    })
}
