//! C ABI for the outage/capacity analysis engine.
//!
//! The surface is a classic opaque-handle API: callers parse or load a
//! scenario into a [`StarfasScenario`] pointer, query analytic or Monte
//! Carlo metrics through plain functions, and free the handle when done.
//! All functions return a [`StarfasStatus`] code; on any non-OK status a
//! human-readable explanation is available from
//! [`starfas_last_error_message`] until the next call on the same thread.
//!
//! Panics never cross the boundary (they are caught and reported as
//! `STARFAS_STATUS_COMPUTE`), and no function takes ownership of caller
//! memory.  The matching header is generated into `include/starfas.h` at
//! build time.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use libc::{c_char, c_double, size_t};

use starfas::analysis::{average_capacity, outage_asymptotic, outage_probability};
use starfas::model::{parse_scenario, ScenarioConfig, Severity, User};
use starfas::simkit::estimate_point;
use starfas::specfun::QmcSettings;

// ---------------------------------------------------------------------------
// Status codes and error reporting
// ---------------------------------------------------------------------------

/// Result code of every API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StarfasStatus {
    /// Success.
    Ok = 0,
    /// A pointer was null, a buffer too small, or an enum value out of
    /// range.
    InvalidArg = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The scenario text violates the config schema or its invariants.
    Config = 3,
    /// A numerical routine failed on an otherwise valid scenario.
    Compute = 4,
    /// The file could not be read.
    Io = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: &str) {
    let sanitized: String = message
        .chars()
        .map(|c| if c == '\0' { ' ' } else { c })
        .collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn fail(status: StarfasStatus, message: &str) -> StarfasStatus {
    set_error(message);
    status
}

/// Explanation of the most recent failure on this thread.
///
/// The pointer stays valid until the next API call from the same thread;
/// copy the string if it must outlive that.  Never null; empty when the
/// last call succeeded.
#[no_mangle]
pub extern "C" fn starfas_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn starfas_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Catches panics so they cannot unwind across the C boundary.
fn guarded<F: FnOnce() -> StarfasStatus>(f: F) -> StarfasStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(StarfasStatus::Compute, "internal panic"),
    }
}

// ---------------------------------------------------------------------------
// Scenario handle
// ---------------------------------------------------------------------------

/// Opaque scenario handle; create with `starfas_scenario_parse` or
/// `starfas_scenario_load`, destroy with `starfas_scenario_free`.
pub struct StarfasScenario {
    cfg: ScenarioConfig,
}

fn user_from(index: u32) -> Option<User> {
    match index {
        0 => Some(User::R),
        1 => Some(User::T),
        _ => None,
    }
}

fn build_scenario(text: &str, out: *mut *mut StarfasScenario) -> StarfasStatus {
    let (cfg, diags) = parse_scenario(text);
    let errors: Vec<String> = diags
        .iter()
        .filter(|d| d.severity == Severity::Error)
        .map(|d| d.to_string())
        .collect();
    if !errors.is_empty() {
        return fail(StarfasStatus::Config, &errors.join("; "));
    }
    let handle = Box::new(StarfasScenario { cfg });
    // SAFETY: `out` was checked non-null by the callers.
    unsafe { *out = Box::into_raw(handle) };
    set_error("");
    StarfasStatus::Ok
}

/// Parses scenario text (the config file format) into a new handle.
///
/// # Safety
/// `text` must point to a NUL-terminated string and `out` to a writable
/// pointer slot; both must be non-null.
#[no_mangle]
pub unsafe extern "C" fn starfas_scenario_parse(
    text: *const c_char,
    out: *mut *mut StarfasScenario,
) -> StarfasStatus {
    guarded(|| {
        if text.is_null() || out.is_null() {
            return fail(StarfasStatus::InvalidArg, "null pointer argument");
        }
        // SAFETY: non-null and NUL-terminated per the contract above.
        let bytes = unsafe { CStr::from_ptr(text) };
        match bytes.to_str() {
            Ok(s) => build_scenario(s, out),
            Err(_) => fail(
                StarfasStatus::InvalidUtf8,
                "scenario text is not valid UTF-8",
            ),
        }
    })
}

/// Reads and parses a scenario file into a new handle.
///
/// # Safety
/// `path` must point to a NUL-terminated string and `out` to a writable
/// pointer slot; both must be non-null.
#[no_mangle]
pub unsafe extern "C" fn starfas_scenario_load(
    path: *const c_char,
    out: *mut *mut StarfasScenario,
) -> StarfasStatus {
    guarded(|| {
        if path.is_null() || out.is_null() {
            return fail(StarfasStatus::InvalidArg, "null pointer argument");
        }
        // SAFETY: non-null and NUL-terminated per the contract above.
        let bytes = unsafe { CStr::from_ptr(path) };
        let path = match bytes.to_str() {
            Ok(s) => Path::new(s),
            Err(_) => return fail(StarfasStatus::InvalidUtf8, "path is not valid UTF-8"),
        };
        match std::fs::read_to_string(path) {
            Ok(text) => build_scenario(&text, out),
            Err(e) => fail(StarfasStatus::Io, &format!("{}: {e}", path.display())),
        }
    })
}

/// Frees a handle.  Null is a no-op.  The handle must not be used again.
///
/// # Safety
/// `scenario` must be null or a pointer previously returned through
/// `starfas_scenario_parse`/`starfas_scenario_load` and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn starfas_scenario_free(scenario: *mut StarfasScenario) {
    if !scenario.is_null() {
        // SAFETY: per the contract this pointer came from Box::into_raw.
        drop(unsafe { Box::from_raw(scenario) });
    }
}

/// Writes the 12-character scenario hash (plus NUL) into `buf`.
///
/// # Safety
/// `scenario` must be a live handle; `buf` must point to at least `cap`
/// writable bytes.
#[no_mangle]
pub unsafe extern "C" fn starfas_scenario_id(
    scenario: *const StarfasScenario,
    buf: *mut c_char,
    cap: size_t,
) -> StarfasStatus {
    guarded(|| {
        if scenario.is_null() || buf.is_null() {
            return fail(StarfasStatus::InvalidArg, "null pointer argument");
        }
        // SAFETY: live handle per the contract.
        let cfg = unsafe { &(*scenario).cfg };
        let id = cfg.scenario_id();
        if cap < id.len() + 1 {
            return fail(
                StarfasStatus::InvalidArg,
                &format!("buffer of {cap} bytes too small for {} + NUL", id.len()),
            );
        }
        // SAFETY: cap-checked writable region per the contract.
        unsafe {
            std::ptr::copy_nonoverlapping(id.as_ptr(), buf as *mut u8, id.len());
            *buf.add(id.len()) = 0;
        }
        set_error("");
        StarfasStatus::Ok
    })
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

unsafe fn write_out(slot: *mut c_double, value: f64) {
    if !slot.is_null() {
        // SAFETY: non-null writable slot per the caller contracts.
        unsafe { *slot = value };
    }
}

/// Exact outage probability at `snr_db` for `user` (0 = reflection side,
/// 1 = transmission side).  `out_err_est` (optional, may be null)
/// receives the quadrature error estimate.
///
/// # Safety
/// `scenario` must be a live handle and `out_op` non-null and writable;
/// `out_err_est` may be null.
#[no_mangle]
pub unsafe extern "C" fn starfas_outage(
    scenario: *const StarfasScenario,
    user: u32,
    snr_db: c_double,
    out_op: *mut c_double,
    out_err_est: *mut c_double,
) -> StarfasStatus {
    guarded(|| {
        if scenario.is_null() || out_op.is_null() {
            return fail(StarfasStatus::InvalidArg, "null pointer argument");
        }
        let Some(user) = user_from(user) else {
            return fail(StarfasStatus::InvalidArg, "user must be 0 (r) or 1 (t)");
        };
        // SAFETY: live handle per the contract.
        let cfg = unsafe { &(*scenario).cfg };
        match outage_probability(cfg, user, snr_db, &QmcSettings::default()) {
            Ok(r) => {
                // SAFETY: out_op non-null checked; out_err_est optional.
                unsafe {
                    write_out(out_op, r.op);
                    write_out(out_err_est, r.err_est);
                }
                set_error("");
                StarfasStatus::Ok
            }
            Err(e) => fail(StarfasStatus::Compute, &e.to_string()),
        }
    })
}

/// High-SNR asymptotic outage probability; same contract as
/// `starfas_outage`.
///
/// # Safety
/// `scenario` must be a live handle and `out_op` non-null and writable;
/// `out_err_est` may be null.
#[no_mangle]
pub unsafe extern "C" fn starfas_outage_asymptotic(
    scenario: *const StarfasScenario,
    user: u32,
    snr_db: c_double,
    out_op: *mut c_double,
    out_err_est: *mut c_double,
) -> StarfasStatus {
    guarded(|| {
        if scenario.is_null() || out_op.is_null() {
            return fail(StarfasStatus::InvalidArg, "null pointer argument");
        }
        let Some(user) = user_from(user) else {
            return fail(StarfasStatus::InvalidArg, "user must be 0 (r) or 1 (t)");
        };
        // SAFETY: live handle per the contract.
        let cfg = unsafe { &(*scenario).cfg };
        match outage_asymptotic(cfg, user, snr_db, &QmcSettings::default()) {
            Ok(r) => {
                // SAFETY: out_op non-null checked; out_err_est optional.
                unsafe {
                    write_out(out_op, r.op);
                    write_out(out_err_est, r.err_est);
                }
                set_error("");
                StarfasStatus::Ok
            }
            Err(e) => fail(StarfasStatus::Compute, &e.to_string()),
        }
    })
}

/// Analytic average capacities (bps/Hz) at `snr_db`.  Each output pointer
/// may be null if that value is not needed.
///
/// # Safety
/// `scenario` must be a live handle; non-null output pointers must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn starfas_capacity(
    scenario: *const StarfasScenario,
    user: u32,
    snr_db: c_double,
    out_common: *mut c_double,
    out_private: *mut c_double,
    out_sum: *mut c_double,
) -> StarfasStatus {
    guarded(|| {
        if scenario.is_null() {
            return fail(StarfasStatus::InvalidArg, "null pointer argument");
        }
        let Some(user) = user_from(user) else {
            return fail(StarfasStatus::InvalidArg, "user must be 0 (r) or 1 (t)");
        };
        // SAFETY: live handle per the contract.
        let cfg = unsafe { &(*scenario).cfg };
        match average_capacity(cfg, user, snr_db) {
            Ok(r) => {
                // SAFETY: each slot is optional and writable when non-null.
                unsafe {
                    write_out(out_common, r.common);
                    write_out(out_private, r.private);
                    write_out(out_sum, r.sum);
                }
                set_error("");
                StarfasStatus::Ok
            }
            Err(e) => fail(StarfasStatus::Compute, &e.to_string()),
        }
    })
}

/// Monte Carlo outage and sum-capacity estimates from one deterministic
/// campaign of `samples` channel draws (min 1000).  Any output pointer
/// may be null.
///
/// # Safety
/// `scenario` must be a live handle; non-null output pointers must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn starfas_simulate(
    scenario: *const StarfasScenario,
    user: u32,
    snr_db: c_double,
    samples: u64,
    seed: u64,
    out_op: *mut c_double,
    out_op_half_width: *mut c_double,
    out_ac_sum: *mut c_double,
    out_ac_half_width: *mut c_double,
) -> StarfasStatus {
    guarded(|| {
        if scenario.is_null() {
            return fail(StarfasStatus::InvalidArg, "null pointer argument");
        }
        let Some(user) = user_from(user) else {
            return fail(StarfasStatus::InvalidArg, "user must be 0 (r) or 1 (t)");
        };
        // SAFETY: live handle per the contract.
        let cfg = unsafe { &(*scenario).cfg };
        match estimate_point(cfg, user, snr_db, samples, seed) {
            Ok(point) => {
                // SAFETY: each slot is optional and writable when non-null.
                unsafe {
                    write_out(out_op, point.op.value);
                    write_out(out_op_half_width, point.op.half_width_95);
                    write_out(out_ac_sum, point.ac_sum.value);
                    write_out(out_ac_half_width, point.ac_sum.half_width_95);
                }
                set_error("");
                StarfasStatus::Ok
            }
            Err(e) => fail(StarfasStatus::Compute, &e.to_string()),
        }
    })
}
