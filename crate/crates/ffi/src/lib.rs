//! C ABI over the flow laboratory: parse a TOML config, run the flow, read
//! the sampled trace, optionally write the standard artifacts.
//!
//! Conventions:
//! - every function returns a `YmfStatus`; outputs go through pointers;
//! - a failed call stores a message retrievable with
//!   `ymf_last_error_message()` (thread-local, valid until the next call on
//!   the same thread);
//! - `YmfRun` is an opaque handle owned by the caller, released with
//!   `ymf_run_free`;
//! - panics are caught at the boundary and reported as `YMF_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use ymflow::bundle::ModelBundle;
use ymflow::config::RunConfig;
use ymflow::filtration::FiltrationSpec;
use ymflow::flow::FlowTrace;
use ymflow::harness::{self, status_exit_code, status_string, HarnessError};

/// Call outcome. Everything except `YMF_OK` leaves an explanatory message in
/// `ymf_last_error_message()`.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
#[allow(non_camel_case_types)] // C-style spelling is the exported ABI
pub enum YmfStatus {
    YMF_OK = 0,
    /// A required pointer argument was null.
    YMF_NULL_ARGUMENT = 1,
    /// A string argument was not valid UTF-8.
    YMF_INVALID_UTF8 = 2,
    /// The config failed to parse or validate.
    YMF_CONFIG_ERROR = 3,
    /// Bundle construction or curvature evaluation failed numerically.
    YMF_NUMERIC_ERROR = 4,
    /// Filesystem failure while writing artifacts.
    YMF_IO_ERROR = 5,
    /// An index or buffer length was out of range.
    YMF_BAD_INDEX = 6,
    /// Internal panic caught at the ABI boundary.
    YMF_PANIC = 7,
}

/// Per-sample scalar columns of the trace, in the same order as trace.csv.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
#[allow(non_camel_case_types)] // C-style spelling is the exported ABI
pub enum YmfColumn {
    YMF_COL_T = 0,
    YMF_COL_YM_ENERGY = 1,
    YMF_COL_HYM_ENERGY = 2,
    YMF_COL_Y = 3,
    YMF_COL_P = 4,
    YMF_COL_M = 5,
    YMF_COL_KEYINEQ_SLACK = 6,
    YMF_COL_GAUGE_RESIDUAL = 7,
}

/// Opaque completed-run handle.
pub struct YmfRun {
    config: RunConfig,
    bundle: ModelBundle,
    spec: FiltrationSpec,
    trace: FlowTrace,
    wall_clock_seconds: f64,
    status_message: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(sanitized).unwrap());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::default());
}

/// Message for the most recent failure on this thread; empty string when the
/// last call succeeded. The pointer stays valid until the next ymf call on
/// the same thread.
#[no_mangle]
pub extern "C" fn ymf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Version of the underlying laboratory crate, as a static string.
#[no_mangle]
pub extern "C" fn ymf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

fn harness_status(e: &HarnessError) -> YmfStatus {
    match e {
        HarnessError::Config(_) => YmfStatus::YMF_CONFIG_ERROR,
        HarnessError::Bundle(_) | HarnessError::Curvature(_) => YmfStatus::YMF_NUMERIC_ERROR,
        HarnessError::Io { .. } => YmfStatus::YMF_IO_ERROR,
    }
}

fn guarded<F: FnOnce() -> YmfStatus>(f: F) -> YmfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic caught at the ABI boundary");
            YmfStatus::YMF_PANIC
        }
    }
}

unsafe fn read_utf8<'a>(ptr: *const c_char) -> Result<&'a str, YmfStatus> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(YmfStatus::YMF_NULL_ARGUMENT);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        YmfStatus::YMF_INVALID_UTF8
    })
}

/// Parse `toml_text` (NUL-terminated TOML, empty string for the defaults),
/// run the metric flow to completion, and hand back an owned run handle.
/// Blocking: a default-size run takes seconds to minutes.
///
/// # Safety
/// `toml_text` must be a valid NUL-terminated string and `out` a valid
/// pointer; the handle must be released with `ymf_run_free`.
#[no_mangle]
pub unsafe extern "C" fn ymf_run_from_toml(
    toml_text: *const c_char,
    out: *mut *mut YmfRun,
) -> YmfStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output pointer");
            return YmfStatus::YMF_NULL_ARGUMENT;
        }
        let text = match read_utf8(toml_text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let config = match RunConfig::from_toml(text, &[]) {
            Ok(c) => c,
            Err(e) => {
                set_error(&e.to_string());
                return YmfStatus::YMF_CONFIG_ERROR;
            }
        };
        let started = std::time::Instant::now();
        let (bundle, spec, trace) = match harness::execute_run(&config) {
            Ok(t) => t,
            Err(e) => {
                set_error(&e.to_string());
                return harness_status(&e);
            }
        };
        let status_message =
            CString::new(status_string(&trace.status).replace('\0', "")).unwrap();
        let run = Box::new(YmfRun {
            config,
            bundle,
            spec,
            trace,
            wall_clock_seconds: started.elapsed().as_secs_f64(),
            status_message,
        });
        *out = Box::into_raw(run);
        clear_error();
        YmfStatus::YMF_OK
    })
}

unsafe fn borrow_run<'a>(run: *const YmfRun) -> Result<&'a YmfRun, YmfStatus> {
    if run.is_null() {
        set_error("null run handle");
        return Err(YmfStatus::YMF_NULL_ARGUMENT);
    }
    Ok(&*run)
}

/// Flow outcome with CLI semantics: 0 converged, 2 reached t_end short of
/// the threshold, 3 numerical abort.
///
/// # Safety
/// `run` must be a live handle from `ymf_run_from_toml`.
#[no_mangle]
pub unsafe extern "C" fn ymf_run_outcome(run: *const YmfRun, out: *mut i32) -> YmfStatus {
    guarded(|| {
        let r = match borrow_run(run) {
            Ok(r) => r,
            Err(s) => return s,
        };
        if out.is_null() {
            set_error("null output pointer");
            return YmfStatus::YMF_NULL_ARGUMENT;
        }
        *out = status_exit_code(&r.trace.status);
        clear_error();
        YmfStatus::YMF_OK
    })
}

/// Human-readable termination status; owned by the handle.
///
/// # Safety
/// `run` must be a live handle; the pointer is valid until `ymf_run_free`.
#[no_mangle]
pub unsafe extern "C" fn ymf_run_status_message(run: *const YmfRun) -> *const c_char {
    match borrow_run(run) {
        Ok(r) => r.status_message.as_ptr(),
        Err(_) => std::ptr::null(),
    }
}

/// # Safety
/// `run` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ymf_run_sample_count(run: *const YmfRun, out: *mut usize) -> YmfStatus {
    guarded(|| {
        let r = match borrow_run(run) {
            Ok(r) => r,
            Err(s) => return s,
        };
        if out.is_null() {
            set_error("null output pointer");
            return YmfStatus::YMF_NULL_ARGUMENT;
        }
        *out = r.trace.samples.len();
        clear_error();
        YmfStatus::YMF_OK
    })
}

/// Bundle rank (= length of each spectrum row).
///
/// # Safety
/// `run` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ymf_run_rank(run: *const YmfRun, out: *mut usize) -> YmfStatus {
    guarded(|| {
        let r = match borrow_run(run) {
            Ok(r) => r,
            Err(s) => return s,
        };
        if out.is_null() {
            set_error("null output pointer");
            return YmfStatus::YMF_NULL_ARGUMENT;
        }
        *out = r.bundle.rank;
        clear_error();
        YmfStatus::YMF_OK
    })
}

/// Number of proper flags (= length of each second-fundamental-form row).
///
/// # Safety
/// `run` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ymf_run_flag_count(run: *const YmfRun, out: *mut usize) -> YmfStatus {
    guarded(|| {
        let r = match borrow_run(run) {
            Ok(r) => r,
            Err(s) => return s,
        };
        if out.is_null() {
            set_error("null output pointer");
            return YmfStatus::YMF_NULL_ARGUMENT;
        }
        *out = r.spec.proper_flags();
        clear_error();
        YmfStatus::YMF_OK
    })
}

/// Copy one scalar column (all samples, time-ordered) into `buf`, which must
/// hold `len >= sample_count` doubles.
///
/// # Safety
/// `run` must be a live handle; `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ymf_run_trace(
    run: *const YmfRun,
    column: YmfColumn,
    buf: *mut f64,
    len: usize,
) -> YmfStatus {
    guarded(|| {
        let r = match borrow_run(run) {
            Ok(r) => r,
            Err(s) => return s,
        };
        if buf.is_null() {
            set_error("null buffer");
            return YmfStatus::YMF_NULL_ARGUMENT;
        }
        let n = r.trace.samples.len();
        if len < n {
            set_error(&format!("buffer holds {len} values, need {n}"));
            return YmfStatus::YMF_BAD_INDEX;
        }
        let out = std::slice::from_raw_parts_mut(buf, n);
        for (dst, s) in out.iter_mut().zip(&r.trace.samples) {
            *dst = match column {
                YmfColumn::YMF_COL_T => s.t,
                YmfColumn::YMF_COL_YM_ENERGY => s.ym_energy,
                YmfColumn::YMF_COL_HYM_ENERGY => s.hym_energy,
                YmfColumn::YMF_COL_Y => s.y,
                YmfColumn::YMF_COL_P => s.p,
                YmfColumn::YMF_COL_M => s.m,
                YmfColumn::YMF_COL_KEYINEQ_SLACK => s.keyineq_slack,
                YmfColumn::YMF_COL_GAUGE_RESIDUAL => s.gauge_residual,
            };
        }
        clear_error();
        YmfStatus::YMF_OK
    })
}

unsafe fn copy_vec(values: &[f64], buf: *mut f64, len: usize) -> YmfStatus {
    if buf.is_null() {
        set_error("null buffer");
        return YmfStatus::YMF_NULL_ARGUMENT;
    }
    if len < values.len() {
        set_error(&format!(
            "buffer holds {len} values, need {}",
            values.len()
        ));
        return YmfStatus::YMF_BAD_INDEX;
    }
    std::slice::from_raw_parts_mut(buf, values.len()).copy_from_slice(values);
    clear_error();
    YmfStatus::YMF_OK
}

/// Grid-averaged descending ΛF spectrum at one sample; `buf` needs
/// `len >= rank` doubles.
///
/// # Safety
/// `run` must be a live handle; `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ymf_run_spectrum(
    run: *const YmfRun,
    sample: usize,
    buf: *mut f64,
    len: usize,
) -> YmfStatus {
    guarded(|| {
        let r = match borrow_run(run) {
            Ok(r) => r,
            Err(s) => return s,
        };
        match r.trace.samples.get(sample) {
            Some(s) => copy_vec(&s.spectrum, buf, len),
            None => {
                set_error(&format!(
                    "sample index {sample} out of range ({} samples)",
                    r.trace.samples.len()
                ));
                YmfStatus::YMF_BAD_INDEX
            }
        }
    })
}

/// Per-flag second-fundamental-form norms² at one sample; `buf` needs
/// `len >= flag_count` doubles.
///
/// # Safety
/// `run` must be a live handle; `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ymf_run_sff(
    run: *const YmfRun,
    sample: usize,
    buf: *mut f64,
    len: usize,
) -> YmfStatus {
    guarded(|| {
        let r = match borrow_run(run) {
            Ok(r) => r,
            Err(s) => return s,
        };
        match r.trace.samples.get(sample) {
            Some(s) => copy_vec(&s.sff, buf, len),
            None => {
                set_error(&format!(
                    "sample index {sample} out of range ({} samples)",
                    r.trace.samples.len()
                ));
                YmfStatus::YMF_BAD_INDEX
            }
        }
    })
}

/// Write trace.csv, manifest.json, and summary.txt for this run into
/// `out_dir` (created if needed).
///
/// # Safety
/// `run` must be a live handle and `out_dir` a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ymf_run_write_artifacts(
    run: *const YmfRun,
    out_dir: *const c_char,
) -> YmfStatus {
    guarded(|| {
        let r = match borrow_run(run) {
            Ok(r) => r,
            Err(s) => return s,
        };
        let dir = match read_utf8(out_dir) {
            Ok(d) => d,
            Err(s) => return s,
        };
        match harness::write_artifacts(
            &r.config,
            &r.bundle,
            &r.spec,
            &r.trace,
            r.wall_clock_seconds,
            Path::new(dir),
        ) {
            Ok(_) => {
                clear_error();
                YmfStatus::YMF_OK
            }
            Err(e) => {
                set_error(&e.to_string());
                harness_status(&e)
            }
        }
    })
}

/// Run the invariant battery for a config; `out_failed` receives the number
/// of failed checks (0 = all pass).
///
/// # Safety
/// `toml_text` must be a valid NUL-terminated string and `out_failed` a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ymf_verify_from_toml(
    toml_text: *const c_char,
    out_failed: *mut i32,
) -> YmfStatus {
    guarded(|| {
        let text = match read_utf8(toml_text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        if out_failed.is_null() {
            set_error("null output pointer");
            return YmfStatus::YMF_NULL_ARGUMENT;
        }
        let config = match RunConfig::from_toml(text, &[]) {
            Ok(c) => c,
            Err(e) => {
                set_error(&e.to_string());
                return YmfStatus::YMF_CONFIG_ERROR;
            }
        };
        match harness::verify(&config, None) {
            Ok(items) => {
                let failed = items.iter().filter(|i| !i.pass).count() as i32;
                if failed > 0 {
                    let names: Vec<&str> = items
                        .iter()
                        .filter(|i| !i.pass)
                        .map(|i| i.name)
                        .collect();
                    set_error(&format!("failed checks: {}", names.join(", ")));
                } else {
                    clear_error();
                }
                *out_failed = failed;
                YmfStatus::YMF_OK
            }
            Err(e) => {
                set_error(&e.to_string());
                harness_status(&e)
            }
        }
    })
}

/// Release a run handle. Null is a no-op.
///
/// # Safety
/// `run` must be null or a handle not freed before; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn ymf_run_free(run: *mut YmfRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}
