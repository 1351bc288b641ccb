//! C ABI over the `crmimo` solver.
//!
//! Scenarios and reports are opaque heap handles created by `crmimo_*`
//! constructors and released with the matching `*_free`. Every fallible call
//! returns a [`CrmimoStatus`]; on failure a message is available from
//! [`crmimo_last_error`] on the same thread.
//!
//! Array getters follow one convention: pass `buf = NULL` to query the
//! required length through `needed`; otherwise `len` must be at least that
//! length or `CRMIMO_STATUS_BUFFER_TOO_SMALL` is returned (with `needed`
//! still set). String getters count the terminating NUL.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use crmimo::experiment::report_json;
use crmimo::scenario::{generate_scenario, load_scenario, save_scenario, GenerationParams, Scenario};
use crmimo::sipa::{sipa, ConstraintMode, SipaOptions, SolveReport};
use crmimo::Error;

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrmimoStatus {
    Ok = 0,
    /// The solve finished but did not meet its stopping rule; the report
    /// handle is still valid.
    NotConverged = 1,
    NullPointer = 2,
    InvalidInput = 3,
    DimensionMismatch = 4,
    Schema = 5,
    Io = 6,
    Numerical = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

pub const CRMIMO_MODE_COGNITIVE: i32 = 0;
pub const CRMIMO_MODE_SUM_POWER: i32 = 1;
pub const CRMIMO_MODE_PER_ANTENNA: i32 = 2;

/// Opaque scenario handle.
pub struct CrmimoScenario {
    inner: Scenario,
}

/// Opaque solve-report handle.
pub struct CrmimoReport {
    inner: SolveReport,
}

/// Outer-loop settings; obtain defaults from [`crmimo_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CrmimoOptions {
    pub step: f64,
    pub eps: f64,
    pub diminishing: bool,
    pub max_outer_iters: usize,
}

/// Scalar results of a solve.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CrmimoSummary {
    /// Nats.
    pub weighted_sum_rate: f64,
    pub sum_power: f64,
    pub lambda: f64,
    pub q_u: f64,
    pub iterations: usize,
    pub converged: bool,
    pub num_users: usize,
    pub num_constraints: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> CrmimoStatus {
    match e {
        Error::InvalidInput(_) | Error::AllZeroAuxiliaries => CrmimoStatus::InvalidInput,
        Error::DimensionMismatch(_) => CrmimoStatus::DimensionMismatch,
        Error::Schema(_) | Error::Json(_) => CrmimoStatus::Schema,
        Error::Io(_) => CrmimoStatus::Io,
        Error::NotPositiveDefinite { .. } | Error::DegenerateStream(_) => CrmimoStatus::Numerical,
    }
}

fn fail(e: Error) -> CrmimoStatus {
    set_error(e.to_string());
    status_of(&e)
}

/// Runs `f`, turning panics into `CRMIMO_STATUS_PANIC`.
fn guard(f: impl FnOnce() -> CrmimoStatus) -> CrmimoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            CrmimoStatus::Panic
        }
    }
}

fn null(what: &str) -> CrmimoStatus {
    set_error(format!("{what} is NULL"));
    CrmimoStatus::NullPointer
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, CrmimoStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        CrmimoStatus::InvalidInput
    })
}

unsafe fn copy_out<T: Copy>(src: &[T], buf: *mut T, len: usize, needed: *mut usize) -> CrmimoStatus {
    if !needed.is_null() {
        *needed = src.len();
    }
    if buf.is_null() {
        return CrmimoStatus::Ok;
    }
    if len < src.len() {
        set_error(format!("buffer holds {len}, need {}", src.len()));
        return CrmimoStatus::BufferTooSmall;
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    CrmimoStatus::Ok
}

unsafe fn copy_string(s: &str, buf: *mut c_char, len: usize, needed: *mut usize) -> CrmimoStatus {
    let mut bytes: Vec<c_char> = s.bytes().map(|b| b as c_char).collect();
    bytes.push(0);
    copy_out(&bytes, buf, len, needed)
}

/// Library version, NUL-terminated, static.
#[no_mangle]
pub extern "C" fn crmimo_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the most recent failure on this thread (empty if none). The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn crmimo_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Draws a scenario. `l_ratios` and `p_t` (linear thresholds) hold `n_pu`
/// entries each; `weights` holds `k` entries or is NULL for equal weights.
///
/// # Safety
/// Pointers must be valid for the stated lengths; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn crmimo_scenario_generate(
    k: usize,
    n_t: usize,
    n_r: usize,
    p_u: f64,
    l_ratios: *const f64,
    p_t: *const f64,
    n_pu: usize,
    weights: *const f64,
    seed: u64,
    out: *mut *mut CrmimoScenario,
) -> CrmimoStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        if n_pu > 0 && (l_ratios.is_null() || p_t.is_null()) {
            return null("l_ratios/p_t");
        }
        let mut params = GenerationParams::new(k, n_t, n_r, p_u, seed);
        for j in 0..n_pu {
            params = params.with_pu(*l_ratios.add(j), *p_t.add(j));
        }
        if !weights.is_null() {
            params = params.with_weights(std::slice::from_raw_parts(weights, k).to_vec());
        }
        match generate_scenario(&params) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(CrmimoScenario { inner: s }));
                CrmimoStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Parses a scenario from a JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn crmimo_scenario_from_json(json: *const c_char, out: *mut *mut CrmimoScenario) -> CrmimoStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        let text = match c_str(json, "json") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let parsed = serde_json::from_str(text)
            .map_err(Error::from)
            .and_then(|v| Scenario::from_json(&v));
        match parsed {
            Ok(s) => {
                *out = Box::into_raw(Box::new(CrmimoScenario { inner: s }));
                CrmimoStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Loads a scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn crmimo_scenario_load(path: *const c_char, out: *mut *mut CrmimoScenario) -> CrmimoStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        let path = match c_str(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        match load_scenario(path) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(CrmimoScenario { inner: s }));
                CrmimoStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Writes a scenario file.
///
/// # Safety
/// `scenario` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn crmimo_scenario_save(scenario: *const CrmimoScenario, path: *const c_char) -> CrmimoStatus {
    guard(|| {
        let Some(s) = scenario.as_ref() else {
            return null("scenario");
        };
        let path = match c_str(path, "path") {
            Ok(p) => p,
            Err(st) => return st,
        };
        match save_scenario(&s.inner, path) {
            Ok(()) => CrmimoStatus::Ok,
            Err(e) => fail(e),
        }
    })
}

/// Scenario as a JSON document.
///
/// # Safety
/// `scenario` must come from this library; `buf` must hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn crmimo_scenario_to_json(
    scenario: *const CrmimoScenario,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> CrmimoStatus {
    guard(|| {
        let Some(s) = scenario.as_ref() else {
            return null("scenario");
        };
        copy_string(&s.inner.to_json().to_string(), buf, len, needed)
    })
}

/// Dimensions of a scenario; any output pointer may be NULL.
///
/// # Safety
/// `scenario` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn crmimo_scenario_dims(
    scenario: *const CrmimoScenario,
    k: *mut usize,
    n_t: *mut usize,
    n_r: *mut usize,
    n_pu: *mut usize,
) -> CrmimoStatus {
    guard(|| {
        let Some(s) = scenario.as_ref() else {
            return null("scenario");
        };
        for (p, v) in [
            (k, s.inner.k),
            (n_t, s.inner.n_t),
            (n_r, s.inner.n_r),
            (n_pu, s.inner.num_pus()),
        ] {
            if !p.is_null() {
                *p = v;
            }
        }
        CrmimoStatus::Ok
    })
}

/// Releases a scenario; NULL is ignored.
///
/// # Safety
/// `scenario` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn crmimo_scenario_free(scenario: *mut CrmimoScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

#[no_mangle]
pub extern "C" fn crmimo_options_default() -> CrmimoOptions {
    let d = SipaOptions::default();
    CrmimoOptions {
        step: d.step,
        eps: d.eps,
        diminishing: d.diminishing,
        max_outer_iters: d.max_outer_iters,
    }
}

/// Solves a scenario. `mode` is one of `CRMIMO_MODE_*`; `threshold` is the
/// per-antenna limit and is ignored otherwise. `options` may be NULL for
/// defaults. Returns `CRMIMO_STATUS_NOT_CONVERGED` with a valid report when
/// the iteration cap was hit.
///
/// # Safety
/// `scenario` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn crmimo_solve(
    scenario: *const CrmimoScenario,
    options: *const CrmimoOptions,
    mode: i32,
    threshold: f64,
    out: *mut *mut CrmimoReport,
) -> CrmimoStatus {
    guard(|| {
        let Some(s) = scenario.as_ref() else {
            return null("scenario");
        };
        if out.is_null() {
            return null("out");
        }
        let mode = match mode {
            CRMIMO_MODE_COGNITIVE => ConstraintMode::Cognitive,
            CRMIMO_MODE_SUM_POWER => ConstraintMode::SumPowerOnly,
            CRMIMO_MODE_PER_ANTENNA => ConstraintMode::PerAntenna { threshold },
            m => {
                set_error(format!("unknown mode {m}"));
                return CrmimoStatus::InvalidInput;
            }
        };
        let mut opts = SipaOptions::default();
        if let Some(o) = options.as_ref() {
            opts.step = o.step;
            opts.eps = o.eps;
            opts.diminishing = o.diminishing;
            opts.max_outer_iters = o.max_outer_iters;
        }
        if opts.max_outer_iters == 0 {
            set_error("max_outer_iters must be positive");
            return CrmimoStatus::InvalidInput;
        }
        if let ConstraintMode::PerAntenna { threshold } = mode {
            if threshold.is_nan() || threshold <= 0.0 {
                set_error("per-antenna threshold must be positive");
                return CrmimoStatus::InvalidInput;
            }
        }
        match sipa(&s.inner, mode, &opts) {
            Ok(r) => {
                let converged = r.converged;
                *out = Box::into_raw(Box::new(CrmimoReport { inner: r }));
                if converged {
                    CrmimoStatus::Ok
                } else {
                    set_error("iteration cap reached before the stopping rule held");
                    CrmimoStatus::NotConverged
                }
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `report` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn crmimo_report_summary(report: *const CrmimoReport, out: *mut CrmimoSummary) -> CrmimoStatus {
    guard(|| {
        let Some(r) = report.as_ref() else {
            return null("report");
        };
        let Some(out) = out.as_mut() else {
            return null("out");
        };
        let r = &r.inner;
        *out = CrmimoSummary {
            weighted_sum_rate: r.weighted_sum_rate,
            sum_power: r.sum_power,
            lambda: r.lambda_star,
            q_u: r.aux.q_u,
            iterations: r.iterations,
            converged: r.converged,
            num_users: r.per_user_rates.len(),
            num_constraints: r.thresholds.len(),
        };
        CrmimoStatus::Ok
    })
}

/// Per-user rates in nats.
///
/// # Safety
/// `report` must come from this library; `buf` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn crmimo_report_rates(
    report: *const CrmimoReport,
    buf: *mut f64,
    len: usize,
    needed: *mut usize,
) -> CrmimoStatus {
    guard(|| match report.as_ref() {
        Some(r) => copy_out(&r.inner.per_user_rates, buf, len, needed),
        None => null("report"),
    })
}

/// Received power at each constrained direction (PUs or antennas).
///
/// # Safety
/// `report` must come from this library; `buf` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn crmimo_report_interference(
    report: *const CrmimoReport,
    buf: *mut f64,
    len: usize,
    needed: *mut usize,
) -> CrmimoStatus {
    guard(|| match report.as_ref() {
        Some(r) => copy_out(&r.inner.interference, buf, len, needed),
        None => null("report"),
    })
}

/// Interference multipliers.
///
/// # Safety
/// `report` must come from this library; `buf` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn crmimo_report_q_t(
    report: *const CrmimoReport,
    buf: *mut f64,
    len: usize,
    needed: *mut usize,
) -> CrmimoStatus {
    guard(|| match report.as_ref() {
        Some(r) => copy_out(&r.inner.aux.q_t, buf, len, needed),
        None => null("report"),
    })
}

/// Full report (covariances, trace, ...) as JSON.
///
/// # Safety
/// `report` must come from this library; `buf` must hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn crmimo_report_to_json(
    report: *const CrmimoReport,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> CrmimoStatus {
    guard(|| match report.as_ref() {
        Some(r) => copy_string(&report_json(&r.inner).to_string(), buf, len, needed),
        None => null("report"),
    })
}

/// Releases a report; NULL is ignored.
///
/// # Safety
/// `report` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn crmimo_report_free(report: *mut CrmimoReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
