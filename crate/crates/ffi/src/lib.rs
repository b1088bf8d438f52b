//! C ABI over the `gslq` solvers.
//!
//! Problems and reports are opaque handles. Every fallible call returns a
//! [`GslqStatus`]; on failure the message is kept per thread and can be read
//! with [`gslq_last_error_message`]. Strings returned by this library must be
//! released with [`gslq_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gslq::admm::Penalty;
use gslq::cli::{self, Flags, RunConfig, SolveRun};
use gslq::error::Error;
use gslq::io::{parse_config, Problem};
use gslq::palm::SolveStatus;
use gslq::report::evaluate_gain;
use nalgebra::DMatrix;

/// Result codes. The nonzero values match the command-line exit codes where one exists.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GslqStatus {
    Ok = 0,
    NullPointer = 1,
    /// Malformed JSON, bad dimensions, rejected parameters or invalid UTF-8.
    Parse = 2,
    /// The solver stopped without meeting its tolerance. A report is still produced.
    NotConverged = 3,
    Numerical = 4,
    /// A caller buffer is too small.
    BufferTooSmall = 5,
    /// A Rust panic was caught at the boundary.
    Internal = 6,
}

/// Loaded problem data.
pub struct GslqProblem {
    inner: Problem,
}

/// Result of one solve.
pub struct GslqReport {
    run: SolveRun,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: GslqStatus, msg: impl Into<String>) -> GslqStatus {
    set_error(msg);
    status
}

fn from_error(e: &Error) -> GslqStatus {
    let status = match cli::exit_code(e) {
        cli::EXIT_NUMERICAL => GslqStatus::Numerical,
        _ => GslqStatus::Parse,
    };
    fail(status, e.to_string())
}

/// Runs `f` with panics turned into [`GslqStatus::Internal`].
fn guarded(f: impl FnOnce() -> GslqStatus) -> GslqStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(GslqStatus::Internal, format!("internal error: {msg}"))
        }
    }
}

/// Reads an optional C string. Null means "absent".
unsafe fn opt_str<'a>(s: *const c_char) -> Result<Option<&'a str>, GslqStatus> {
    if s.is_null() {
        return Ok(None);
    }
    CStr::from_ptr(s).to_str().map(Some).map_err(|_| fail(GslqStatus::Parse, "string is not valid UTF-8"))
}

unsafe fn config(json: *const c_char) -> Result<RunConfig, GslqStatus> {
    match opt_str(json)? {
        None => Ok(RunConfig::default()),
        Some(text) => parse_config(text, "config").map_err(|e| from_error(&e)),
    }
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

/// Parses a problem from JSON text. On success `*out` owns a new handle.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gslq_problem_from_json(json: *const c_char, out: *mut *mut GslqProblem) -> GslqStatus {
    guarded(|| {
        if out.is_null() {
            return fail(GslqStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let text = match opt_str(json) {
            Ok(Some(t)) => t,
            Ok(None) => return fail(GslqStatus::NullPointer, "json is null"),
            Err(s) => return s,
        };
        match Problem::from_json_str(text, "problem") {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(GslqProblem { inner }));
                GslqStatus::Ok
            }
            Err(e) => from_error(&e),
        }
    })
}

/// Releases a problem handle. Null is ignored.
///
/// # Safety
/// `problem` must come from [`gslq_problem_from_json`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gslq_problem_free(problem: *mut GslqProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// State and control dimensions of a problem.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn gslq_problem_dims(problem: *const GslqProblem, n: *mut usize, m: *mut usize) -> GslqStatus {
    guarded(|| {
        if problem.is_null() || n.is_null() || m.is_null() {
            return fail(GslqStatus::NullPointer, "null argument");
        }
        let sys = &(*problem).inner.system;
        *n = sys.n();
        *m = sys.m();
        GslqStatus::Ok
    })
}

unsafe fn solve(
    problem: *const GslqProblem,
    config_json: *const c_char,
    out: *mut *mut GslqReport,
    run: impl FnOnce(&Problem, &RunConfig) -> gslq::error::Result<SolveRun>,
) -> GslqStatus {
    guarded(|| {
        if out.is_null() {
            return fail(GslqStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        if problem.is_null() {
            return fail(GslqStatus::NullPointer, "problem is null");
        }
        let cfg = match config(config_json) {
            Ok(c) => c,
            Err(s) => return s,
        };
        match run(&(*problem).inner, &cfg) {
            Ok(run) => {
                let status = match run.status {
                    SolveStatus::Converged => GslqStatus::Ok,
                    SolveStatus::MaxIterations | SolveStatus::NotStarted => {
                        set_error(format!("solver stopped with status {:?}", run.status));
                        GslqStatus::NotConverged
                    }
                };
                *out = Box::into_raw(Box::new(GslqReport { run }));
                status
            }
            Err(e) => from_error(&e),
        }
    })
}

/// Runs PALM. `config_json` uses the command-line config keys and may be null.
/// Both `Ok` and `NotConverged` leave a report in `*out`.
///
/// # Safety
/// `problem` must be a live handle, `config_json` null or NUL-terminated, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn gslq_solve_palm(
    problem: *const GslqProblem,
    config_json: *const c_char,
    strict_params: bool,
    rho_continuation: bool,
    out: *mut *mut GslqReport,
) -> GslqStatus {
    let flags = Flags { strict_params, rho_continuation };
    solve(problem, config_json, out, |p, c| cli::solve_palm(p, c, flags).map(|(run, _)| run))
}

/// Runs the group-sparse ADMM heuristic.
///
/// # Safety
/// Same contract as [`gslq_solve_palm`].
#[no_mangle]
pub unsafe extern "C" fn gslq_solve_admm(
    problem: *const GslqProblem,
    config_json: *const c_char,
    out: *mut *mut GslqReport,
) -> GslqStatus {
    solve(problem, config_json, out, |p, c| cli::solve_admm(p, c, Penalty::GroupL0).map(|(run, _)| run))
}

/// Runs the ADMM baseline with the group-l1 penalty.
///
/// # Safety
/// Same contract as [`gslq_solve_palm`].
#[no_mangle]
pub unsafe extern "C" fn gslq_solve_l1(
    problem: *const GslqProblem,
    config_json: *const c_char,
    out: *mut *mut GslqReport,
) -> GslqStatus {
    solve(problem, config_json, out, |p, c| cli::solve_admm(p, c, Penalty::GroupL1).map(|(run, _)| run))
}

/// Releases a report handle. Null is ignored.
///
/// # Safety
/// `report` must come from a solve call and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gslq_report_free(report: *mut GslqReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// The report as JSON, in the same layout as `report.json`. Free with [`gslq_string_free`].
/// Returns null on failure.
///
/// # Safety
/// `report` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gslq_report_json(report: *const GslqReport) -> *mut c_char {
    let mut text = None;
    guarded(|| {
        if report.is_null() {
            return fail(GslqStatus::NullPointer, "report is null");
        }
        match (*report).run.report.to_json() {
            Ok(t) => {
                text = Some(t);
                GslqStatus::Ok
            }
            Err(e) => from_error(&e),
        }
    });
    text.map_or(ptr::null_mut(), to_c_string)
}

/// Copies the gain `K` (m x n, row-major) into `buf`, which holds `len` doubles.
///
/// # Safety
/// `report` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn gslq_report_gain(report: *const GslqReport, buf: *mut f64, len: usize) -> GslqStatus {
    guarded(|| {
        if report.is_null() || buf.is_null() {
            return fail(GslqStatus::NullPointer, "null argument");
        }
        write_row_major(&(*report).run.report.gain(), buf, len)
    })
}

unsafe fn write_row_major(k: &DMatrix<f64>, buf: *mut f64, len: usize) -> GslqStatus {
    if len < k.len() {
        return fail(GslqStatus::BufferTooSmall, format!("need {} doubles, got {len}", k.len()));
    }
    let dst = std::slice::from_raw_parts_mut(buf, k.len());
    for (idx, v) in dst.iter_mut().enumerate() {
        *v = k[(idx / k.ncols(), idx % k.ncols())];
    }
    GslqStatus::Ok
}

/// Closed-loop H2 cost and spectral abscissa of `u = -Kx`, with `K` given row-major (m x n).
/// `*h2` is set to +infinity when the loop is not stable.
///
/// # Safety
/// `problem` must be a live handle, `k` valid for `m * n` reads and the outputs valid.
#[no_mangle]
pub unsafe extern "C" fn gslq_eval_gain(
    problem: *const GslqProblem,
    k: *const f64,
    rows: usize,
    cols: usize,
    abscissa: *mut f64,
    h2: *mut f64,
) -> GslqStatus {
    guarded(|| {
        if problem.is_null() || k.is_null() || abscissa.is_null() || h2.is_null() {
            return fail(GslqStatus::NullPointer, "null argument");
        }
        let p = &(*problem).inner;
        let (n, m) = (p.system.n(), p.system.m());
        if (rows, cols) != (m, n) {
            return fail(GslqStatus::Parse, format!("gain must be {m}x{n}, got {rows}x{cols}"));
        }
        let gain = DMatrix::from_row_slice(rows, cols, std::slice::from_raw_parts(k, rows * cols));
        let result = p.standard_form().and_then(|sf| evaluate_gain(&p.system, &sf, &gain));
        match result {
            Ok(eval) => {
                *abscissa = eval.spectral_abscissa;
                *h2 = eval.h2_cost.unwrap_or(f64::INFINITY);
                GslqStatus::Ok
            }
            Err(e) => from_error(&e),
        }
    })
}

/// Message of the last failed call on this thread, or null. Free with [`gslq_string_free`].
#[no_mangle]
pub extern "C" fn gslq_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |s| s.clone().into_raw()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gslq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
