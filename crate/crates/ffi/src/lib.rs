//! C interface to the nsx solver.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `_free` function. Strings returned by accessors are
//! borrowed from the handle and stay valid until it is freed. On failure a
//! function returns a non-zero [`NsxStatus`] and [`nsx_last_error`] describes
//! it on the calling thread.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::Arc;

use nsx_core::mixed::{self, SolveConfig, SolveError, SolveResult, Verdict};
use nsx_core::nnet::MlpModel;
use nsx_core::ConstraintFile;

/// Status codes; the first three double as solver verdicts.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NsxStatus {
    Ok = 0,
    Unsat = 1,
    Unknown = 2,
    /// A required pointer was null or an option was out of range.
    InvalidArgument = 64,
    /// The constraint text or a model file could not be read.
    InputFormat = 65,
    Internal = 70,
}

/// Solver options. Obtain defaults from [`nsx_solve_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NsxSolveOptions {
    pub max_enumerations: usize,
    pub trials: usize,
    pub alpha: f64,
    pub beta: f64,
    pub compat_unsat: bool,
    pub seed: u64,
}

/// A parsed constraint file with its models loaded.
pub struct NsxProblem {
    file: ConstraintFile,
    models: Vec<Arc<MlpModel>>,
}

/// The outcome of one solve.
pub struct NsxResult {
    verdict: NsxStatus,
    summary: CString,
    report: CString,
    values: BTreeMap<String, CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = s);
}

fn fail(status: NsxStatus, msg: impl Into<String>) -> NsxStatus {
    set_error(msg);
    status
}

fn guarded(f: impl FnOnce() -> NsxStatus) -> NsxStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(NsxStatus::Internal, "panic inside nsx"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, NsxStatus> {
    if p.is_null() {
        return Err(fail(NsxStatus::InvalidArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(NsxStatus::InputFormat, format!("{what} is not UTF-8")))
}

fn cstring(s: String) -> CString {
    CString::new(s.replace('\0', " ")).unwrap_or_default()
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn nsx_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failure on this thread; empty if none.
#[no_mangle]
pub extern "C" fn nsx_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn nsx_solve_options_default() -> NsxSolveOptions {
    let c = SolveConfig::default();
    NsxSolveOptions {
        max_enumerations: c.search.max_enumerations,
        trials: c.max_trial1,
        alpha: c.loss.alpha,
        beta: c.loss.beta,
        compat_unsat: c.compat_unsat,
        seed: c.search.seed,
    }
}

/// Parse constraint `source` and load its models, resolving relative model
/// paths against `base_dir` (the working directory when null).
///
/// # Safety
/// `source` and a non-null `base_dir` must be NUL-terminated strings; `out`
/// must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn nsx_problem_parse(
    source: *const c_char,
    base_dir: *const c_char,
    out: *mut *mut NsxProblem,
) -> NsxStatus {
    guarded(|| {
        if out.is_null() {
            return fail(NsxStatus::InvalidArgument, "out is null");
        }
        *out = ptr::null_mut();
        let src = match text(source, "source") {
            Ok(s) => s,
            Err(st) => return st,
        };
        let base = if base_dir.is_null() {
            "."
        } else {
            match text(base_dir, "base_dir") {
                Ok(s) => s,
                Err(st) => return st,
            }
        };
        let file = match nsx_core::parse(src) {
            Ok(f) => f,
            Err(e) => return fail(NsxStatus::InputFormat, e.to_string()),
        };
        let models = match mixed::load_models(&file, Path::new(base)) {
            Ok(m) => m,
            Err(e) => return fail(NsxStatus::InputFormat, e.to_string()),
        };
        *out = Box::into_raw(Box::new(NsxProblem { file, models }));
        NsxStatus::Ok
    })
}

/// # Safety
/// `p` must be null or a handle from [`nsx_problem_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nsx_problem_free(p: *mut NsxProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Canonical text of the problem, owned by the caller (free with
/// [`nsx_string_free`]); null when `p` is null.
///
/// # Safety
/// `p` must be null or a live problem handle.
#[no_mangle]
pub unsafe extern "C" fn nsx_problem_print(p: *const NsxProblem) -> *mut c_char {
    match p.as_ref() {
        Some(p) => cstring(nsx_core::print(&p.file)).into_raw(),
        None => ptr::null_mut(),
    }
}

/// # Safety
/// `s` must be null or a string returned by this library as caller-owned.
#[no_mangle]
pub unsafe extern "C" fn nsx_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

fn config(o: &NsxSolveOptions) -> Result<SolveConfig, String> {
    if o.max_enumerations == 0 || o.trials == 0 {
        return Err("max_enumerations and trials must be at least 1".into());
    }
    let mut c = SolveConfig::default();
    c.search.max_enumerations = o.max_enumerations;
    c.search.seed = o.seed;
    c.max_trial1 = o.trials;
    c.loss.alpha = o.alpha;
    c.loss.beta = o.beta;
    c.loss.validate().map_err(|e| e.to_string())?;
    c.compat_unsat = o.compat_unsat;
    Ok(c)
}

fn result_of(r: &SolveResult) -> NsxResult {
    let (verdict, values) = match &r.verdict {
        Verdict::Sat(a) => {
            let values = a
                .iter()
                .map(|(k, v)| {
                    let s = match v {
                        nsx_core::Value::Str(s) => s.clone(),
                        v => v.to_string(),
                    };
                    (k.clone(), cstring(s))
                })
                .collect();
            (NsxStatus::Ok, values)
        }
        Verdict::Unsat => (NsxStatus::Unsat, BTreeMap::new()),
        Verdict::Unknown => (NsxStatus::Unknown, BTreeMap::new()),
    };
    NsxResult { verdict, summary: cstring(r.summary_line()), report: cstring(r.report()), values }
}

/// Solve `p`. Returns the verdict (`Ok` for SAT, `Unsat`, `Unknown`) and
/// stores the result in `*out`, or an error status with `*out` null.
/// `options` may be null for defaults.
///
/// # Safety
/// `p` must be a live problem handle, `options` null or valid, `out` valid
/// for a write.
#[no_mangle]
pub unsafe extern "C" fn nsx_solve(
    p: *const NsxProblem,
    options: *const NsxSolveOptions,
    out: *mut *mut NsxResult,
) -> NsxStatus {
    guarded(|| {
        if out.is_null() {
            return fail(NsxStatus::InvalidArgument, "out is null");
        }
        *out = ptr::null_mut();
        let Some(p) = p.as_ref() else {
            return fail(NsxStatus::InvalidArgument, "problem is null");
        };
        let opts = options.as_ref().copied().unwrap_or_else(|| nsx_solve_options_default());
        let cfg = match config(&opts) {
            Ok(c) => c,
            Err(e) => return fail(NsxStatus::InvalidArgument, e),
        };
        match mixed::solve(&p.file, &p.models, &cfg) {
            Ok(r) => {
                let res = result_of(&r);
                let v = res.verdict;
                *out = Box::into_raw(Box::new(res));
                v
            }
            Err(e @ SolveError::Sym(_)) => fail(NsxStatus::Internal, e.to_string()),
            Err(e) => fail(NsxStatus::InputFormat, e.to_string()),
        }
    })
}

/// # Safety
/// `r` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn nsx_result_verdict(r: *const NsxResult) -> NsxStatus {
    match r.as_ref() {
        Some(r) => r.verdict,
        None => fail(NsxStatus::InvalidArgument, "result is null"),
    }
}

/// `SAT name=value ...`, `UNSAT` or `UNKNOWN`.
///
/// # Safety
/// `r` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn nsx_result_summary(r: *const NsxResult) -> *const c_char {
    r.as_ref().map_or(ptr::null(), |r| r.summary.as_ptr())
}

/// Full `key=value` report, one entry per line.
///
/// # Safety
/// `r` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn nsx_result_report(r: *const NsxResult) -> *const c_char {
    r.as_ref().map_or(ptr::null(), |r| r.report.as_ptr())
}

/// Value bound to `name` in a SAT result, as text (strings unquoted); null
/// when the result is not SAT or `name` is unbound.
///
/// # Safety
/// `r` must be null or a live result handle; `name` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn nsx_result_value(r: *const NsxResult, name: *const c_char) -> *const c_char {
    let (Some(r), Ok(name)) = (r.as_ref(), text(name, "name")) else {
        return ptr::null();
    };
    r.values.get(name).map_or(ptr::null(), |v| v.as_ptr())
}

/// # Safety
/// `r` must be null or a handle from [`nsx_solve`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nsx_result_free(r: *mut NsxResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}
