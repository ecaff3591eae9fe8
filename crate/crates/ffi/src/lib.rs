//! C ABI over the privshape library.
//!
//! Every fallible call returns a [`PsStatus`]; on failure the message is kept
//! per thread and read with [`ps_last_error`]. Scenarios and runs are opaque
//! handles owned by the caller and released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use privshape::config::{BinningConfig, ScenarioConfig};
use privshape::controller::{run_receding_horizon, RunOutput};
use privshape::harness::scenario_profiles;
use privshape::metrics::score;
use privshape::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Config = 4,
    Io = 5,
    Solver = 6,
    Panic = 7,
}

/// Opaque scenario handle.
pub struct PsScenario {
    config: ScenarioConfig,
}

/// Opaque handle to a finished run.
pub struct PsRun {
    output: RunOutput,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PsMiReport {
    pub iid_mi_bits: f64,
    pub markov_mi_bits: f64,
    pub entropy_x_bits: f64,
    pub k: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PsRunSummary {
    pub iid_mi_bits: f64,
    pub markov_mi_bits: f64,
    pub entropy_x_bits: f64,
    pub k: usize,
    pub x_max: f64,
    pub total_cost: f64,
    pub avg_daily_cost: f64,
    pub comfort_violations: usize,
    pub failed_steps: usize,
    pub max_kkt: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> PsStatus {
    match e {
        Error::Parse { .. } => PsStatus::Parse,
        Error::Config(_) => PsStatus::Config,
        Error::Io { .. } => PsStatus::Io,
        Error::Solver(_) | Error::NotPsd { .. } => PsStatus::Solver,
        _ => PsStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (PsStatus, String)>) -> PsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside privshape".into());
            PsStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (PsStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (PsStatus, String) {
    (PsStatus::NullPointer, format!("{what} is null"))
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ps_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ps_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Scores `len` samples of `x` and `y` with `m` uniform X bins on
/// `[0, x_max]` and `n` uniform Y bins on `[y_min, y_max]`.
///
/// # Safety
/// `x` and `y` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_score(
    x: *const f64,
    y: *const f64,
    len: usize,
    x_max: f64,
    m: usize,
    y_min: f64,
    y_max: f64,
    n: usize,
    epsilon: f64,
    out: *mut PsMiReport,
) -> PsStatus {
    guard(|| {
        if x.is_null() || y.is_null() {
            return Err(null("x or y"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: caller guarantees `len` readable elements behind each pointer.
        let (xs, ys) = unsafe { (std::slice::from_raw_parts(x, len), std::slice::from_raw_parts(y, len)) };
        let binning = BinningConfig {
            m,
            n,
            y_min,
            y_max,
            x_max: Some(x_max),
        };
        let r = score(xs, ys, &binning.scheme(xs).map_err(lib_err)?, epsilon).map_err(lib_err)?;
        // SAFETY: checked non-null above.
        unsafe {
            *out = PsMiReport {
                iid_mi_bits: r.iid_mi_bits,
                markov_mi_bits: r.markov_mi_bits,
                entropy_x_bits: r.entropy_x_bits,
                k: r.k,
            };
        }
        Ok(())
    })
}

/// Default scenario: no devices, 30 days, synthetic house-23618-like load.
#[no_mangle]
pub extern "C" fn ps_scenario_default() -> *mut PsScenario {
    Box::into_raw(Box::new(PsScenario {
        config: ScenarioConfig::default(),
    }))
}

/// Parses a scenario from TOML text.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_scenario_from_toml(toml: *const c_char, out: *mut *mut PsScenario) -> PsStatus {
    guard(|| {
        if toml.is_null() || out.is_null() {
            return Err(null("toml or out"));
        }
        // SAFETY: caller guarantees a NUL-terminated string.
        let text = unsafe { CStr::from_ptr(toml) }
            .to_str()
            .map_err(|_| (PsStatus::InvalidArgument, "scenario text is not UTF-8".to_string()))?;
        let config = ScenarioConfig::from_toml(text).map_err(lib_err)?;
        // SAFETY: checked non-null above.
        unsafe { *out = Box::into_raw(Box::new(PsScenario { config })) };
        Ok(())
    })
}

/// # Safety
/// `scenario` must come from this library and not be freed yet, or be null.
#[no_mangle]
pub unsafe extern "C" fn ps_scenario_free(scenario: *mut PsScenario) {
    if !scenario.is_null() {
        // SAFETY: allocated by Box::into_raw in this crate.
        drop(unsafe { Box::from_raw(scenario) });
    }
}

/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_scenario_set_days(scenario: *mut PsScenario, days: usize) -> PsStatus {
    guard(|| {
        // SAFETY: caller guarantees a live handle or null.
        let s = unsafe { scenario.as_mut() }.ok_or_else(|| null("scenario"))?;
        let mut c = s.config.clone();
        c.days = days;
        c.validate().map_err(lib_err)?;
        s.config = c;
        Ok(())
    })
}

/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_scenario_set_mu(scenario: *mut PsScenario, mu: f64) -> PsStatus {
    guard(|| {
        // SAFETY: caller guarantees a live handle or null.
        let s = unsafe { scenario.as_mut() }.ok_or_else(|| null("scenario"))?;
        let mut c = s.config.clone();
        c.mu = mu;
        c.validate().map_err(lib_err)?;
        s.config = c;
        Ok(())
    })
}

/// Runs the scenario on its input files, or on a synthetic profile drawn
/// with `seed` when none are configured.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_run(scenario: *const PsScenario, seed: u64, out: *mut *mut PsRun) -> PsStatus {
    guard(|| {
        // SAFETY: caller guarantees a live handle or null.
        let s = unsafe { scenario.as_ref() }.ok_or_else(|| null("scenario"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let bundle = scenario_profiles(&s.config, seed).map_err(lib_err)?;
        let output = run_receding_horizon(&s.config, &bundle).map_err(lib_err)?;
        // SAFETY: checked non-null above.
        unsafe { *out = Box::into_raw(Box::new(PsRun { output })) };
        Ok(())
    })
}

/// # Safety
/// `run` must come from [`ps_run`] and not be freed yet, or be null.
#[no_mangle]
pub unsafe extern "C" fn ps_run_free(run: *mut PsRun) {
    if !run.is_null() {
        // SAFETY: allocated by Box::into_raw in this crate.
        drop(unsafe { Box::from_raw(run) });
    }
}

/// Number of controlled steps, 0 for a null handle.
///
/// # Safety
/// `run` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ps_run_len(run: *const PsRun) -> usize {
    // SAFETY: caller guarantees a live handle or null.
    unsafe { run.as_ref() }.map_or(0, |r| r.output.steps.len())
}

/// # Safety
/// `run` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_run_summary(run: *const PsRun, out: *mut PsRunSummary) -> PsStatus {
    guard(|| {
        // SAFETY: caller guarantees a live handle or null.
        let r = unsafe { run.as_ref() }.ok_or_else(|| null("run"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let rep = &r.output.report;
        // SAFETY: checked non-null above.
        unsafe {
            *out = PsRunSummary {
                iid_mi_bits: rep.iid_mi_bits,
                markov_mi_bits: rep.markov_mi_bits,
                entropy_x_bits: rep.entropy_x_bits,
                k: rep.k,
                x_max: rep.x_max,
                total_cost: rep.total_cost,
                avg_daily_cost: rep.avg_daily_cost,
                comfort_violations: rep.comfort_violations,
                failed_steps: rep.failed_steps,
                max_kkt: rep.max_kkt,
            };
        }
        Ok(())
    })
}

/// Copies the sensitive and grid loads into caller buffers of `cap` doubles.
///
/// # Safety
/// `run` must be a live handle; `x` and `y` must each hold `cap` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ps_run_copy_loads(run: *const PsRun, x: *mut f64, y: *mut f64, cap: usize) -> PsStatus {
    guard(|| {
        // SAFETY: caller guarantees a live handle or null.
        let r = unsafe { run.as_ref() }.ok_or_else(|| null("run"))?;
        if x.is_null() || y.is_null() {
            return Err(null("x or y"));
        }
        let steps = &r.output.steps;
        if cap < steps.len() {
            return Err((
                PsStatus::InvalidArgument,
                format!("buffers hold {cap} values, run has {}", steps.len()),
            ));
        }
        for (i, s) in steps.iter().enumerate() {
            // SAFETY: i < steps.len() <= cap.
            unsafe {
                *x.add(i) = s.committed.x;
                *y.add(i) = s.committed.y;
            }
        }
        Ok(())
    })
}
