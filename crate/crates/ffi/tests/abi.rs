use std::ffi::{c_char, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use delaybw_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { dbw_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

fn zero_estimate() -> DbwEstimate {
    DbwEstimate {
        b_av_bps: 0.0,
        intercept_s: 0.0,
        residual_rms_s: 0.0,
        method: DbwMethod::Direct,
        warning_count: 0,
    }
}

#[test]
fn pairwise_and_intercept() {
    let mut e = zero_estimate();
    assert_eq!(
        unsafe { dbw_estimate_pairwise(800, 0.018, 8992, 0.042, &mut e) },
        DbwStatus::Ok
    );
    assert!((e.b_av_bps - 1.0 / 2.9296875e-6).abs() < 1e-6);
    assert_eq!(e.method, DbwMethod::Pairwise);
    let mut a = 0.0;
    assert_eq!(
        unsafe { dbw_estimate_intercept(800, 0.018, 8992, 0.042, &mut a) },
        DbwStatus::Ok
    );
    assert!((a - 0.01565625).abs() < 1e-15);
}

#[test]
fn direct_and_corrected() {
    let mut e = zero_estimate();
    assert_eq!(unsafe { dbw_estimate_direct(800, 0.0108, &mut e) }, DbwStatus::Ok);
    assert!((e.b_av_bps - 800.0 / 0.0108).abs() < 1e-6);
    assert_eq!(
        unsafe { dbw_estimate_from_intercept(800, 0.0108, 0.0108, &mut e) },
        DbwStatus::EstimationFailed
    );
    assert!(!last_error().is_empty());
}

#[test]
fn invert_slope_rejects_non_positive() {
    let mut b = 0.0;
    assert_eq!(unsafe { dbw_invert_slope(1.0 / 285e6, &mut b) }, DbwStatus::Ok);
    assert!((b - 285e6).abs() / 285e6 < 1e-12);
    assert_eq!(unsafe { dbw_invert_slope(0.0, &mut b) }, DbwStatus::EstimationFailed);
}

#[test]
fn null_pointers_are_reported() {
    assert_eq!(
        unsafe { dbw_estimate_pairwise(800, 0.018, 8992, 0.042, ptr::null_mut()) },
        DbwStatus::NullPointer
    );
    assert_eq!(
        unsafe { dbw_profile_push(ptr::null_mut(), 800, 0.1) },
        DbwStatus::NullPointer
    );
    unsafe {
        dbw_profile_free(ptr::null_mut());
        dbw_sim_path_free(ptr::null_mut());
    }
}

#[test]
fn profile_regression_over_three_sizes() {
    let p = dbw_profile_new();
    for (w, d) in [
        (800u64, 0.002 + 800.0 / 1e6),
        (4000, 0.002 + 4000.0 / 1e6),
        (12000, 0.002 + 12000.0 / 1e6),
    ] {
        assert_eq!(unsafe { dbw_profile_push(p, w, d) }, DbwStatus::Ok);
    }
    let mut e = zero_estimate();
    assert_eq!(unsafe { dbw_profile_estimate(p, &mut e) }, DbwStatus::Ok);
    assert_eq!(e.method, DbwMethod::Regression);
    assert!((e.b_av_bps - 1e6).abs() / 1e6 < 1e-9);
    assert!((e.intercept_s - 0.002).abs() < 1e-12);
    unsafe { dbw_profile_free(p) };
}

#[test]
fn duplicate_profile_sizes_are_invalid() {
    let p = dbw_profile_new();
    unsafe {
        dbw_profile_push(p, 800, 0.01);
        dbw_profile_push(p, 800, 0.02);
    }
    let mut e = zero_estimate();
    assert_eq!(unsafe { dbw_profile_estimate(p, &mut e) }, DbwStatus::InvalidArgument);
    unsafe { dbw_profile_free(p) };
}

#[test]
fn sim_path_handle() {
    let json = CString::new(r#"{"seed":3,"hops":[{"capacity_bps":1e6,"propagation_s":0.001}]}"#).unwrap();
    let mut path = ptr::null_mut();
    assert_eq!(
        unsafe { dbw_sim_path_from_json(json.as_ptr(), &mut path) },
        DbwStatus::Ok
    );
    let mut d = 0.0;
    assert_eq!(unsafe { dbw_sim_path_fixed_delay(path, 1000, &mut d) }, DbwStatus::Ok);
    assert!((d - 0.002).abs() < 1e-15);
    unsafe { dbw_sim_path_free(path) };

    let bad = CString::new("{not json").unwrap();
    assert_eq!(
        unsafe { dbw_sim_path_from_json(bad.as_ptr(), &mut path) },
        DbwStatus::ParseError
    );
}

#[test]
fn summarize_arrays() {
    let delays: Vec<f64> = (0..100).map(|i| i as f64 * 1e-3).collect();
    let mut s = DbwSummary {
        n_total: 0,
        n_lost: 0,
        mean_s: 0.0,
        lower_2_5_s: 0.0,
        upper_97_5_s: 0.0,
        jitter_s: 0.0,
        loss_rate: 0.0,
    };
    assert_eq!(
        unsafe { dbw_summarize(delays.as_ptr(), ptr::null(), delays.len(), &mut s) },
        DbwStatus::Ok
    );
    assert_eq!(s.n_total, 100);
    assert!((s.lower_2_5_s - 0.002).abs() < 1e-15);
    assert!((s.upper_97_5_s - 0.097).abs() < 1e-15);
    assert_eq!(
        unsafe { dbw_summarize(ptr::null(), ptr::null(), 0, &mut s) },
        DbwStatus::StatsFailed
    );
}

fn target_dir() -> PathBuf {
    // tests run from <target>/<profile>/deps/
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = crate_dir.join("include/delaybw.h");
    assert!(header.exists(), "generated header missing");
    let lib = target_dir().join("libdelaybw_ffi.a");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() || !lib.exists() {
        eprintln!("skipping: no C compiler or static library");
        return;
    }
    let exe = Path::new(env!("CARGO_TARGET_TMPDIR")).join("ffi_smoke");
    let status = Command::new(&cc)
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "C smoke exited with {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
