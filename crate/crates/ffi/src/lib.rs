//! C ABI for the delaybw estimator, path simulator and delay statistics.
//!
//! Every function returns a [`DbwStatus`]; results go through out pointers.
//! On failure, [`dbw_last_error_message`] describes the most recent error on
//! the calling thread. Handles ([`DbwProfile`], [`DbwSimPath`]) are opaque and
//! must be released with their `_free` function. Handles are not thread-safe.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use delaybw::estimator::{self, BandwidthEstimate, DelayProfile, EstimateMethod, SizeDelayPoint};
use delaybw::sample::{ProbeMethod, ProbeSample};
use delaybw::sim::{self, SimPath};
use delaybw::stats;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DbwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    EstimationFailed = 3,
    StatsFailed = 4,
    ParseError = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DbwMethod {
    Direct = 0,
    Pairwise = 1,
    Regression = 2,
    InterceptCorrected = 3,
}

impl From<EstimateMethod> for DbwMethod {
    fn from(m: EstimateMethod) -> Self {
        match m {
            EstimateMethod::Direct => DbwMethod::Direct,
            EstimateMethod::Pairwise => DbwMethod::Pairwise,
            EstimateMethod::Regression => DbwMethod::Regression,
            EstimateMethod::InterceptCorrected => DbwMethod::InterceptCorrected,
        }
    }
}

/// Bandwidth estimate. Warnings are only counted here; their text is
/// available from [`dbw_last_warning`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbwEstimate {
    pub b_av_bps: f64,
    pub intercept_s: f64,
    pub residual_rms_s: f64,
    pub method: DbwMethod,
    pub warning_count: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbwSummary {
    pub n_total: u64,
    pub n_lost: u64,
    pub mean_s: f64,
    pub lower_2_5_s: f64,
    pub upper_97_5_s: f64,
    pub jitter_s: f64,
    pub loss_rate: f64,
}

/// Size/delay points collected for one path.
pub struct DbwProfile {
    points: Vec<SizeDelayPoint>,
}

/// A simulated path parsed from JSON.
pub struct DbwSimPath {
    path: SimPath,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
    static LAST_WARNING: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(status: DbwStatus, msg: impl ToString) -> DbwStatus {
    set_error(msg.to_string());
    status
}

fn guard(f: impl FnOnce() -> DbwStatus) -> DbwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(DbwStatus::Panic, "internal panic"),
    }
}

fn store_estimate(e: BandwidthEstimate, out: *mut DbwEstimate) -> DbwStatus {
    LAST_WARNING.with(|w| *w.borrow_mut() = e.warnings.join("\n"));
    let value = DbwEstimate {
        b_av_bps: e.b_av_bps,
        intercept_s: e.intercept_s,
        residual_rms_s: e.residual_rms_s,
        method: e.method.into(),
        warning_count: e.warnings.len() as u32,
    };
    // SAFETY: callers check `out` for null before getting here.
    unsafe { out.write(value) };
    DbwStatus::Ok
}

fn point(size_bits: u64, delay_s: f64) -> Result<SizeDelayPoint, DbwStatus> {
    SizeDelayPoint::new(size_bits, delay_s).map_err(|e| fail(DbwStatus::InvalidArgument, e))
}

/// Copies the thread's last error message into `buf` (NUL terminated,
/// truncated to `len`). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn dbw_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| copy_out(&e.borrow(), buf, len))
}

/// Like [`dbw_last_error_message`] for the warnings of the last estimate,
/// one per line.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn dbw_last_warning(buf: *mut c_char, len: usize) -> usize {
    LAST_WARNING.with(|w| copy_out(&w.borrow(), buf, len))
}

unsafe fn copy_out(msg: &str, buf: *mut c_char, len: usize) -> usize {
    if !buf.is_null() && len > 0 {
        let n = msg.len().min(len - 1);
        ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
        *buf.add(n) = 0;
    }
    msg.len()
}

/// Bandwidth from two sizes (bits) and their minimum delays (seconds).
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dbw_estimate_pairwise(
    w1_bits: u64,
    d1_s: f64,
    w2_bits: u64,
    d2_s: f64,
    out: *mut DbwEstimate,
) -> DbwStatus {
    guard(|| {
        if out.is_null() {
            return fail(DbwStatus::NullPointer, "out is null");
        }
        let (p1, p2) = match (point(w1_bits, d1_s), point(w2_bits, d2_s)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        match estimator::estimate_pairwise(p1, p2) {
            Ok(e) => store_estimate(e, out),
            Err(e) => fail(DbwStatus::EstimationFailed, e),
        }
    })
}

/// Size-independent delay from two points.
///
/// # Safety
/// `out_s` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dbw_estimate_intercept(
    w1_bits: u64,
    d1_s: f64,
    w2_bits: u64,
    d2_s: f64,
    out_s: *mut f64,
) -> DbwStatus {
    guard(|| {
        if out_s.is_null() {
            return fail(DbwStatus::NullPointer, "out_s is null");
        }
        let (p1, p2) = match (point(w1_bits, d1_s), point(w2_bits, d2_s)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        match estimator::estimate_intercept(p1, p2) {
            Ok(a) => {
                out_s.write(a);
                DbwStatus::Ok
            }
            Err(e) => fail(DbwStatus::EstimationFailed, e),
        }
    })
}

/// Bandwidth from one point, ignoring size-independent delay.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dbw_estimate_direct(w_bits: u64, d_s: f64, out: *mut DbwEstimate) -> DbwStatus {
    guard(|| {
        if out.is_null() {
            return fail(DbwStatus::NullPointer, "out is null");
        }
        match point(w_bits, d_s) {
            Ok(p) => store_estimate(estimator::estimate_direct(p), out),
            Err(s) => s,
        }
    })
}

/// Bandwidth from one point with a known intercept.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dbw_estimate_from_intercept(
    w_bits: u64,
    d_s: f64,
    intercept_s: f64,
    out: *mut DbwEstimate,
) -> DbwStatus {
    guard(|| {
        if out.is_null() {
            return fail(DbwStatus::NullPointer, "out is null");
        }
        let p = match point(w_bits, d_s) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match estimator::estimate_from_intercept(p, intercept_s) {
            Ok(e) => store_estimate(e, out),
            Err(e) => fail(DbwStatus::EstimationFailed, e),
        }
    })
}

/// Bandwidth (bit/s) from a delay-vs-size slope (s/bit).
///
/// # Safety
/// `out_bps` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dbw_invert_slope(slope_s_per_bit: f64, out_bps: *mut f64) -> DbwStatus {
    guard(|| {
        if out_bps.is_null() {
            return fail(DbwStatus::NullPointer, "out_bps is null");
        }
        match estimator::invert_slope(slope_s_per_bit) {
            Ok(b) => {
                out_bps.write(b);
                DbwStatus::Ok
            }
            Err(e) => fail(DbwStatus::EstimationFailed, e),
        }
    })
}

#[no_mangle]
pub extern "C" fn dbw_profile_new() -> *mut DbwProfile {
    Box::into_raw(Box::new(DbwProfile { points: Vec::new() }))
}

/// # Safety
/// `profile` must come from [`dbw_profile_new`] and not be freed.
#[no_mangle]
pub unsafe extern "C" fn dbw_profile_push(profile: *mut DbwProfile, size_bits: u64, delay_s: f64) -> DbwStatus {
    guard(|| {
        let Some(profile) = profile.as_mut() else {
            return fail(DbwStatus::NullPointer, "profile is null");
        };
        match point(size_bits, delay_s) {
            Ok(p) => {
                profile.points.push(p);
                DbwStatus::Ok
            }
            Err(s) => s,
        }
    })
}

/// Pairwise estimate for two points, least-squares regression for more.
///
/// # Safety
/// `profile` must be a live handle; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dbw_profile_estimate(profile: *const DbwProfile, out: *mut DbwEstimate) -> DbwStatus {
    guard(|| {
        let Some(profile) = profile.as_ref() else {
            return fail(DbwStatus::NullPointer, "profile is null");
        };
        if out.is_null() {
            return fail(DbwStatus::NullPointer, "out is null");
        }
        let built = match DelayProfile::from_points("ffi", profile.points.clone()) {
            Ok(p) => p,
            Err(e) => return fail(DbwStatus::InvalidArgument, e),
        };
        match estimator::estimate_profile(&built) {
            Ok(e) => store_estimate(e, out),
            Err(e) => fail(DbwStatus::EstimationFailed, e),
        }
    })
}

/// # Safety
/// `profile` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dbw_profile_free(profile: *mut DbwProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

/// Parses a path config (`{"seed":..,"hops":[..]}`) into a new handle.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dbw_sim_path_from_json(json: *const c_char, out: *mut *mut DbwSimPath) -> DbwStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return fail(DbwStatus::NullPointer, "json or out is null");
        }
        let Ok(text) = CStr::from_ptr(json).to_str() else {
            return fail(DbwStatus::ParseError, "path config is not UTF-8");
        };
        match SimPath::from_json(text) {
            Ok(path) => {
                out.write(Box::into_raw(Box::new(DbwSimPath { path })));
                DbwStatus::Ok
            }
            Err(e) => fail(DbwStatus::ParseError, e),
        }
    })
}

/// Noise-free one-way delay of a `wire_bits` probe along the path.
///
/// # Safety
/// `path` must be a live handle; `out_s` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dbw_sim_path_fixed_delay(
    path: *const DbwSimPath,
    wire_bits: u64,
    out_s: *mut f64,
) -> DbwStatus {
    guard(|| match (path.as_ref(), out_s.is_null()) {
        (Some(p), false) => {
            out_s.write(sim::fixed_delay(&p.path, wire_bits));
            DbwStatus::Ok
        }
        _ => fail(DbwStatus::NullPointer, "path or out_s is null"),
    })
}

/// Rate a size-delay estimator should recover on this path.
///
/// # Safety
/// `path` must be a live handle; `out_bps` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dbw_sim_path_ground_truth(path: *const DbwSimPath, out_bps: *mut f64) -> DbwStatus {
    guard(|| match (path.as_ref(), out_bps.is_null()) {
        (Some(p), false) => {
            out_bps.write(sim::ground_truth_rate(&p.path));
            DbwStatus::Ok
        }
        _ => fail(DbwStatus::NullPointer, "path or out_bps is null"),
    })
}

/// # Safety
/// `path` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dbw_sim_path_free(path: *mut DbwSimPath) {
    if !path.is_null() {
        drop(Box::from_raw(path));
    }
}

/// Delay summary of `n` probes in send order. `lost` may be null (nothing
/// lost); otherwise a non-zero `lost[i]` marks probe `i` as lost and
/// `delays_s[i]` is ignored.
///
/// # Safety
/// `delays_s` (and `lost` if non-null) must point to `n` readable values.
#[no_mangle]
pub unsafe extern "C" fn dbw_summarize(
    delays_s: *const f64,
    lost: *const u8,
    n: usize,
    out: *mut DbwSummary,
) -> DbwStatus {
    guard(|| {
        if out.is_null() || (n > 0 && delays_s.is_null()) {
            return fail(DbwStatus::NullPointer, "delays_s or out is null");
        }
        let delays = if n == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(delays_s, n)
        };
        let lost = if lost.is_null() || n == 0 {
            None
        } else {
            Some(std::slice::from_raw_parts(lost, n))
        };
        let mut samples = Vec::with_capacity(n);
        for (i, &d) in delays.iter().enumerate() {
            let is_lost = lost.is_some_and(|l| l[i] != 0);
            let sample = if is_lost {
                ProbeSample::lost("ffi", i as u64, 0, 0, i as u64, ProbeMethod::Imported)
            } else if d.is_finite() && d >= 0.0 {
                ProbeSample::delivered("ffi", i as u64, 0, 0, i as u64, d, ProbeMethod::Imported)
            } else {
                return fail(
                    DbwStatus::InvalidArgument,
                    format!("delay {i} is not a finite non-negative number"),
                );
            };
            samples.push(sample);
        }
        match stats::summarize(&samples) {
            Ok(s) => {
                out.write(DbwSummary {
                    n_total: s.n_total as u64,
                    n_lost: s.n_lost as u64,
                    mean_s: s.mean_s,
                    lower_2_5_s: s.lower_2_5_s,
                    upper_97_5_s: s.upper_97_5_s,
                    jitter_s: s.jitter_s,
                    loss_rate: s.loss_rate,
                });
                DbwStatus::Ok
            }
            Err(e) => fail(DbwStatus::StatsFailed, e),
        }
    })
}
