//! C ABI for the seedstab stability-analysis library.
//!
//! Reports are exposed as opaque handles created by [`ss_eval_manifest`] or
//! [`ss_report_from_json`] and released with [`ss_report_free`]. Every
//! fallible call returns an [`SsStatus`] code; on failure a human-readable
//! message is retained per thread and can be read with
//! [`ss_last_error_message`] until the next failing call on that thread.
//!
//! Strings returned through `char**` out-parameters are NUL-terminated,
//! allocated by this library, and must be released with [`ss_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use seedstab::analysis::validate_report;
use seedstab::model::StabilityReport;
use seedstab::stability::{var, VarScale};

/// Result code of every fallible FFI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Input files or JSON could not be parsed or failed validation.
    InvalidInput = 3,
    /// A file could not be read or written.
    IoError = 4,
    /// The computation itself failed (e.g. fewer than two runs).
    ComputeError = 5,
    /// An internal invariant was violated.
    InternalError = 6,
}

/// Opaque stability report handle.
pub struct SsReport(StabilityReport);

/// Aggregate numbers of one report.
///
/// `zeta_mean` and `var` are on the percent scale for higher-better metrics
/// and in raw units otherwise; `con_mean`/`ccon_mean` are fractions in
/// [0, 1] for indicator and token-mean scorers.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsSummary {
    pub zeta_mean: f64,
    pub var: f64,
    pub con_mean: f64,
    pub ccon_mean: f64,
    pub n_seeds: usize,
    pub n_pairs: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|cell| {
        *cell.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn fail(status: SsStatus, message: &str) -> SsStatus {
    set_last_error(message);
    status
}

fn guarded(body: impl FnOnce() -> SsStatus) -> SsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(SsStatus::InternalError, "panic inside seedstab"),
    }
}

/// # Safety
/// `ptr` must be NULL or a NUL-terminated C string valid for reads.
unsafe fn utf8_arg<'a>(ptr: *const c_char) -> Result<&'a str, SsStatus> {
    if ptr.is_null() {
        return Err(SsStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| SsStatus::InvalidUtf8)
}

fn export_report(report: StabilityReport, out: *mut *mut SsReport) -> SsStatus {
    // Caller-checked: `out` is non-null by the time we get here.
    let handle = Box::new(SsReport(report));
    unsafe { *out = Box::into_raw(handle) };
    SsStatus::Ok
}

/// Message of the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread; never free it.
#[no_mangle]
pub extern "C" fn ss_last_error_message() -> *const c_char {
    LAST_ERROR.with(|cell| cell.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string; never free it.
#[no_mangle]
pub extern "C" fn ss_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Runs the full evaluation pipeline on a manifest file and returns a new
/// report handle through `out`.
///
/// # Safety
/// `manifest_path` must be NULL or a valid NUL-terminated C string; `out`
/// must be NULL or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn ss_eval_manifest(
    manifest_path: *const c_char,
    out: *mut *mut SsReport,
) -> SsStatus {
    guarded(|| {
        if out.is_null() {
            return fail(SsStatus::NullArgument, "out pointer is NULL");
        }
        let path = match utf8_arg(manifest_path) {
            Ok(p) => p,
            Err(status) => return fail(status, "manifest_path is NULL or not UTF-8"),
        };
        match eval_manifest_impl(Path::new(path)) {
            Ok(report) => export_report(report, out),
            Err((status, message)) => fail(status, &message),
        }
    })
}

fn eval_manifest_impl(path: &Path) -> Result<StabilityReport, (SsStatus, String)> {
    use seedstab::ingest::{assemble_from_manifest_path, IngestError};
    use seedstab::stability::{aggregate_stability, AgreementScorer};

    let (manifest, set) = assemble_from_manifest_path(path).map_err(|e| {
        let status = match &e {
            IngestError::Io { .. } => SsStatus::IoError,
            _ => SsStatus::InvalidInput,
        };
        (status, format!("{}: {e}", e.code()))
    })?;
    let scorer = AgreementScorer::from_kind(manifest.scorer)
        .map_err(|e| (SsStatus::InvalidInput, format!("{}: {e}", e.code())))?;
    aggregate_stability(&set, manifest.metric, &scorer)
        .map_err(|e| (SsStatus::ComputeError, format!("{}: {e}", e.code())))
}

/// Parses a report from its JSON form and returns a new handle through
/// `out`.
///
/// # Safety
/// `json` must be NULL or a valid NUL-terminated C string; `out` must be
/// NULL or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn ss_report_from_json(
    json: *const c_char,
    out: *mut *mut SsReport,
) -> SsStatus {
    guarded(|| {
        if out.is_null() {
            return fail(SsStatus::NullArgument, "out pointer is NULL");
        }
        let text = match utf8_arg(json) {
            Ok(t) => t,
            Err(status) => return fail(status, "json is NULL or not UTF-8"),
        };
        match serde_json::from_str::<StabilityReport>(text) {
            Ok(report) => export_report(report, out),
            Err(e) => fail(SsStatus::InvalidInput, &format!("ParseError: {e}")),
        }
    })
}

/// Serializes a report to pretty-printed JSON. The returned string must be
/// released with [`ss_string_free`].
///
/// # Safety
/// `report` must be a live handle from this library; `out` must be NULL or
/// point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn ss_report_to_json(
    report: *const SsReport,
    out: *mut *mut c_char,
) -> SsStatus {
    guarded(|| {
        if report.is_null() || out.is_null() {
            return fail(SsStatus::NullArgument, "report or out pointer is NULL");
        }
        let json = match serde_json::to_string_pretty(&(*report).0) {
            Ok(j) => j,
            Err(e) => return fail(SsStatus::InternalError, &e.to_string()),
        };
        match CString::new(json) {
            Ok(cstring) => {
                *out = cstring.into_raw();
                SsStatus::Ok
            }
            Err(_) => fail(SsStatus::InternalError, "JSON contained a NUL byte"),
        }
    })
}

/// Copies the report's task name. The returned string must be released with
/// [`ss_string_free`].
///
/// # Safety
/// `report` must be a live handle from this library; `out` must be NULL or
/// point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn ss_report_task(
    report: *const SsReport,
    out: *mut *mut c_char,
) -> SsStatus {
    guarded(|| {
        if report.is_null() || out.is_null() {
            return fail(SsStatus::NullArgument, "report or out pointer is NULL");
        }
        match CString::new((*report).0.task.clone()) {
            Ok(cstring) => {
                *out = cstring.into_raw();
                SsStatus::Ok
            }
            Err(_) => fail(SsStatus::InternalError, "task name contained a NUL byte"),
        }
    })
}

/// Fills `out` with the report's aggregate numbers.
///
/// # Safety
/// `report` must be a live handle from this library; `out` must be NULL or
/// point to writable storage for one [`SsSummary`].
#[no_mangle]
pub unsafe extern "C" fn ss_report_summary(
    report: *const SsReport,
    out: *mut SsSummary,
) -> SsStatus {
    guarded(|| {
        if report.is_null() || out.is_null() {
            return fail(SsStatus::NullArgument, "report or out pointer is NULL");
        }
        let r = &(*report).0;
        *out = SsSummary {
            zeta_mean: r.zeta_mean,
            var: r.var,
            con_mean: r.con_mean,
            ccon_mean: r.ccon_mean,
            n_seeds: r.n_seeds(),
            n_pairs: r.n_pairs(),
        };
        SsStatus::Ok
    })
}

/// Checks the report's relational invariants and writes the number of
/// violations to `out_violations` (0 means the report is consistent).
///
/// # Safety
/// `report` must be a live handle from this library; `out_violations` must
/// be NULL or point to writable storage for one `size_t`.
#[no_mangle]
pub unsafe extern "C" fn ss_report_validate(
    report: *const SsReport,
    out_violations: *mut usize,
) -> SsStatus {
    guarded(|| {
        if report.is_null() || out_violations.is_null() {
            return fail(SsStatus::NullArgument, "report or out pointer is NULL");
        }
        match validate_report(&(*report).0) {
            Ok(violations) => {
                *out_violations = violations.len();
                SsStatus::Ok
            }
            Err(e) => fail(SsStatus::ComputeError, &format!("{}: {e}", e.code())),
        }
    })
}

/// Population standard deviation of a metric series; `percent_scale != 0`
/// returns exactly 100x the fraction-scale value.
///
/// # Safety
/// `values` must be NULL or point to `len` readable doubles; `out` must be
/// NULL or point to writable storage for one double.
#[no_mangle]
pub unsafe extern "C" fn ss_var(
    values: *const f64,
    len: usize,
    percent_scale: i32,
    out: *mut f64,
) -> SsStatus {
    guarded(|| {
        if values.is_null() || out.is_null() {
            return fail(SsStatus::NullArgument, "values or out pointer is NULL");
        }
        let slice = std::slice::from_raw_parts(values, len);
        let scale = if percent_scale != 0 { VarScale::Percent } else { VarScale::Fraction };
        match var(slice, scale) {
            Ok(v) => {
                *out = v;
                SsStatus::Ok
            }
            Err(e) => fail(SsStatus::ComputeError, &format!("{}: {e}", e.code())),
        }
    })
}

/// Releases a report handle. NULL is a no-op.
///
/// # Safety
/// `report` must be NULL or a handle returned by this library that has not
/// been freed yet.
#[no_mangle]
pub unsafe extern "C" fn ss_report_free(report: *mut SsReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Releases a string returned by this library. NULL is a no-op.
///
/// # Safety
/// `s` must be NULL or a string returned by this library that has not been
/// freed yet.
#[no_mangle]
pub unsafe extern "C" fn ss_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// Keep the null pointer helper honest under Miri-like scrutiny in tests.
const _: fn() = || {
    let _ = ptr::null::<SsReport>();
};
