use std::ffi::{CStr, CString};
use std::ptr;

use privshape_ffi::*;

fn last_error() -> String {
    let p = ps_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn score_matches_the_library() {
    let x: Vec<f64> = (0..200).map(|i| (i % 7) as f64 * 0.5).collect();
    let y: Vec<f64> = x.iter().map(|v| v + 1.0).collect();
    let mut out = PsMiReport::default();
    let st = unsafe { ps_score(x.as_ptr(), y.as_ptr(), x.len(), 3.5, 7, 0.0, 12.0, 24, 0.0, &mut out) };
    assert_eq!(st, PsStatus::Ok);
    let binning = privshape::domain::BinningScheme::uniform(3.5, 7, 0.0, 12.0, 24).unwrap();
    let want = privshape::metrics::score(&x, &y, &binning, 0.0).unwrap();
    assert_eq!(out.iid_mi_bits, want.iid_mi_bits);
    assert_eq!(out.markov_mi_bits, want.markov_mi_bits);
    assert_eq!(out.k, 200);
}

#[test]
fn null_and_bad_arguments_set_the_error() {
    let mut out = PsMiReport::default();
    let st = unsafe { ps_score(ptr::null(), ptr::null(), 0, 1.0, 2, 0.0, 1.0, 2, 0.0, &mut out) };
    assert_eq!(st, PsStatus::NullPointer);
    assert!(last_error().contains("null"));

    let x = [1.0, 2.0];
    let y = [1.0, 2.0];
    let st = unsafe { ps_score(x.as_ptr(), y.as_ptr(), 2, 0.0, 2, 0.0, 1.0, 2, 0.0, &mut out) };
    assert_eq!(st, PsStatus::Config);
    let st = unsafe { ps_score(x.as_ptr(), y.as_ptr(), 2, 2.0, 0, 0.0, 1.0, 2, 0.0, &mut out) };
    assert_eq!(st, PsStatus::InvalidArgument);

    let text = CString::new("horizon = 1").unwrap();
    let mut s = ptr::null_mut();
    let st = unsafe { ps_scenario_from_toml(text.as_ptr(), &mut s) };
    assert_eq!(st, PsStatus::Config);
    assert!(s.is_null());
    assert!(last_error().contains("horizon"));
}

#[test]
fn scenario_run_round_trip() {
    let text = CString::new("days = 1\nmu = 5.0\n[[devices]]\nkind = \"ess\"\n").unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { ps_scenario_from_toml(text.as_ptr(), &mut s) }, PsStatus::Ok);
    assert_eq!(unsafe { ps_scenario_set_days(s, 0) }, PsStatus::Config);
    assert_eq!(unsafe { ps_scenario_set_mu(s, 5.0) }, PsStatus::Ok);

    let mut run = ptr::null_mut();
    assert_eq!(unsafe { ps_run(s, 23618, &mut run) }, PsStatus::Ok);
    let n = unsafe { ps_run_len(run) };
    assert_eq!(n, 24);
    let mut summary = PsRunSummary::default();
    assert_eq!(unsafe { ps_run_summary(run, &mut summary) }, PsStatus::Ok);
    assert_eq!(summary.k, 24);
    assert_eq!(summary.failed_steps, 0);

    let (mut x, mut y) = (vec![0.0; n], vec![0.0; n]);
    assert_eq!(unsafe { ps_run_copy_loads(run, x.as_mut_ptr(), y.as_mut_ptr(), n - 1) }, PsStatus::InvalidArgument);
    assert_eq!(unsafe { ps_run_copy_loads(run, x.as_mut_ptr(), y.as_mut_ptr(), n) }, PsStatus::Ok);
    let mut rescored = PsMiReport::default();
    let st = unsafe { ps_score(x.as_ptr(), y.as_ptr(), n, summary.x_max, 24, 0.0, 12.0, 24, 0.0, &mut rescored) };
    assert_eq!(st, PsStatus::Ok);
    assert_eq!(rescored.iid_mi_bits, summary.iid_mi_bits);
    assert_eq!(rescored.markov_mi_bits, summary.markov_mi_bits);

    unsafe {
        ps_run_free(run);
        ps_scenario_free(s);
        ps_run_free(ptr::null_mut());
        ps_scenario_free(ptr::null_mut());
    }
    assert_eq!(unsafe { ps_run_len(ptr::null()) }, 0);
}

#[test]
fn default_scenario_and_version() {
    let s = ps_scenario_default();
    assert!(!s.is_null());
    unsafe { ps_scenario_free(s) };
    let v = unsafe { CStr::from_ptr(ps_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/privshape.h")).unwrap();
    for name in [
        "ps_last_error",
        "ps_score",
        "ps_scenario_from_toml",
        "ps_run",
        "ps_run_summary",
        "ps_run_free",
        "PS_STATUS_NULL_POINTER",
        "typedef struct PsRun PsRun",
    ] {
        assert!(h.contains(name), "{name} missing from header");
    }
}
