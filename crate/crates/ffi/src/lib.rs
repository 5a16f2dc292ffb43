//! C ABI for the toolkit.
//!
//! Objects are opaque handles created by `*_parse`/`*_new` functions and
//! released with the matching `*_free`. Every fallible call returns a
//! [`BicStatus`]; on failure [`bic_last_error`] describes the error for the
//! calling thread. Strings returned through `char **` out-parameters are
//! owned by the caller and must be released with [`bic_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bic::constraint::BooleanConstraint;
use bic::error::BicError;
use bic::parser::{format_constraint, parse_constraint};
use bic::reductions::{reduce, MaxOptions, Schedule};
use bic::refuter::{refute_parallel, Budget, RefuteOutcome};
use bic::shannon::{elemental, prove, prove_convex, ConvexOutcome, GeneratorSet};
use serde_json::{json, Value};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BicStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Syntax = 3,
    InvalidInput = 4,
    DimensionMismatch = 5,
    Panic = 6,
}

/// Outcome of an analysis; the values match the command-line exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BicVerdict {
    Proved = 0,
    Refuted = 1,
    Inconclusive = 2,
}

/// A parsed constraint.
pub struct BicConstraint {
    inner: BooleanConstraint,
}

/// A generator set: the elemental inequalities plus user-supplied ones.
pub struct BicGenerators {
    inner: GeneratorSet,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &BicError) -> BicStatus {
    match e {
        BicError::Syntax { .. } => BicStatus::Syntax,
        BicError::DimensionMismatch { .. } => BicStatus::DimensionMismatch,
        _ => BicStatus::InvalidInput,
    }
}

fn fail(status: BicStatus, msg: &str) -> BicStatus {
    set_error(msg);
    status
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard<F: FnOnce() -> Result<(), BicStatus>>(f: F) -> BicStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BicStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(BicStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: bic::error::Result<T>) -> Result<T, BicStatus> {
    r.map_err(|e| fail(status_of(&e), &e.to_string()))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, BicStatus> {
    if p.is_null() {
        return Err(fail(BicStatus::NullPointer, &format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(BicStatus::InvalidUtf8, &format!("{what} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, BicStatus> {
    p.as_ref().ok_or_else(|| fail(BicStatus::NullPointer, &format!("{what} is null")))
}

unsafe fn put<T>(out: *mut T, v: T, what: &str) -> Result<(), BicStatus> {
    if out.is_null() {
        return Err(fail(BicStatus::NullPointer, &format!("{what} is null")));
    }
    out.write(v);
    Ok(())
}

fn c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("no interior nul").into_raw()
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bic_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn bic_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn bic_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses constraint text into a new handle.
///
/// # Safety
/// `text` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bic_constraint_parse(text: *const c_char, out: *mut *mut BicConstraint) -> BicStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let c = lift(parse_constraint(text))?;
        put(out, Box::into_raw(Box::new(BicConstraint { inner: c })), "out")
    })
}

/// # Safety
/// `c` must come from [`bic_constraint_parse`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn bic_constraint_free(c: *mut BicConstraint) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Number of variables, or 0 for null.
///
/// # Safety
/// `c` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bic_constraint_num_vars(c: *const BicConstraint) -> usize {
    c.as_ref().map_or(0, |c| c.inner.n())
}

/// Number of clauses, or 0 for null.
///
/// # Safety
/// `c` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bic_constraint_num_clauses(c: *const BicConstraint) -> usize {
    c.as_ref().map_or(0, |c| c.inner.clauses.len())
}

/// Normalized text of the constraint.
///
/// # Safety
/// `c` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bic_constraint_to_string(c: *const BicConstraint, out: *mut *mut c_char) -> BicStatus {
    guard(|| {
        let c = ref_arg(c, "constraint")?;
        put(out, c_string(format_constraint(&c.inner)), "out")
    })
}

/// The elemental generators over the variables of `c`.
///
/// # Safety
/// `c` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bic_generators_new(c: *const BicConstraint, out: *mut *mut BicGenerators) -> BicStatus {
    guard(|| {
        let c = ref_arg(c, "constraint")?;
        let g = lift(elemental(c.inner.n()))?;
        put(out, Box::into_raw(Box::new(BicGenerators { inner: g })), "out")
    })
}

/// Adds user-valid inequalities, one per line, named over the variables of
/// `c`. `source` labels their provenance and may be null.
///
/// # Safety
/// Handles must be live; strings nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn bic_generators_load(
    g: *mut BicGenerators,
    c: *const BicConstraint,
    text: *const c_char,
    source: *const c_char,
) -> BicStatus {
    guard(|| {
        let g = g.as_mut().ok_or_else(|| fail(BicStatus::NullPointer, "generators is null"))?;
        let c = ref_arg(c, "constraint")?;
        let text = str_arg(text, "text")?;
        let source = if source.is_null() { "ffi" } else { str_arg(source, "source")? };
        lift(g.inner.load_user(text, &c.inner.vars, source))?;
        Ok(())
    })
}

/// Number of generators, or 0 for null.
///
/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bic_generators_len(g: *const BicGenerators) -> usize {
    g.as_ref().map_or(0, |g| g.inner.len())
}

/// # Safety
/// `g` must come from [`bic_generators_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn bic_generators_free(g: *mut BicGenerators) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

unsafe fn finish(verdict: BicVerdict, report: Value, out_verdict: *mut BicVerdict, out_json: *mut *mut c_char) -> Result<(), BicStatus> {
    put(out_verdict, verdict, "verdict")?;
    if !out_json.is_null() {
        out_json.write(c_string(report.to_string()));
    }
    Ok(())
}

/// Shannon provability of every clause; `g` may be null for the elemental
/// set. `out_json` may be null.
///
/// # Safety
/// Handles must be live or null as stated; out-pointers writable.
#[no_mangle]
pub unsafe extern "C" fn bic_prove(
    c: *const BicConstraint,
    g: *const BicGenerators,
    out_verdict: *mut BicVerdict,
    out_json: *mut *mut c_char,
) -> BicStatus {
    guard(|| {
        let c = &ref_arg(c, "constraint")?.inner;
        let owned;
        let gens = match g.as_ref() {
            Some(g) => &g.inner,
            None => {
                owned = lift(elemental(c.n()))?;
                &owned
            }
        };
        let mut all = true;
        let mut clauses = Vec::new();
        for cl in &c.clauses {
            let v = if cl.consequents.len() == 1 {
                let o = lift(prove(&cl.consequents[0], gens, &cl.antecedents))?;
                all &= o.is_proved();
                serde_json::to_value(&o)
            } else {
                let o = lift(prove_convex(&cl.consequents, gens, &cl.antecedents))?;
                all &= matches!(o, ConvexOutcome::Proved { .. });
                serde_json::to_value(&o)
            };
            clauses.push(v.expect("serializable"));
        }
        let verdict = if all { BicVerdict::Proved } else { BicVerdict::Inconclusive };
        finish(verdict, json!({ "clauses": clauses }), out_verdict, out_json)
    })
}

/// Counterexample search. `budget` uses the `s=2,D=4,vsdim=2,vsq=2,3`
/// syntax and may be null for the default.
///
/// # Safety
/// `c` must be live; `budget` null or nul-terminated; out-pointers writable.
#[no_mangle]
pub unsafe extern "C" fn bic_refute(
    c: *const BicConstraint,
    budget: *const c_char,
    workers: usize,
    out_verdict: *mut BicVerdict,
    out_json: *mut *mut c_char,
) -> BicStatus {
    guard(|| {
        let c = &ref_arg(c, "constraint")?.inner;
        let budget: Budget = if budget.is_null() {
            Budget::default()
        } else {
            lift(str_arg(budget, "budget")?.parse())?
        };
        let out = lift(refute_parallel(c, &budget, workers.max(1)))?;
        let verdict = match out {
            RefuteOutcome::Counterexample(_) => BicVerdict::Refuted,
            RefuteOutcome::NotFound { .. } => BicVerdict::Inconclusive,
        };
        finish(verdict, serde_json::to_value(&out).expect("serializable"), out_verdict, out_json)
    })
}

/// Routes every clause through the reductions. `schedule` (`p=1,2 qmax=8`)
/// and `budget` may be null for defaults; `g` may be null for the elemental
/// set.
///
/// # Safety
/// Handles live or null as stated; strings nul-terminated; out-pointers writable.
#[no_mangle]
pub unsafe extern "C" fn bic_reduce(
    c: *const BicConstraint,
    g: *const BicGenerators,
    schedule: *const c_char,
    budget: *const c_char,
    out_verdict: *mut BicVerdict,
    out_json: *mut *mut c_char,
) -> BicStatus {
    guard(|| {
        let c = &ref_arg(c, "constraint")?.inner;
        let owned;
        let gens = match g.as_ref() {
            Some(g) => &g.inner,
            None => {
                owned = lift(elemental(c.n()))?;
                &owned
            }
        };
        let schedule: Schedule = if schedule.is_null() {
            Schedule::default()
        } else {
            lift(str_arg(schedule, "schedule")?.parse())?
        };
        let budget: Budget = if budget.is_null() {
            Budget::default()
        } else {
            lift(str_arg(budget, "budget")?.parse())?
        };
        let mut verdicts = Vec::new();
        let mut reports = Vec::new();
        for cl in &c.clauses {
            let r = lift(reduce(cl, &c.vars, gens, &schedule, &budget, &MaxOptions::default()))?;
            verdicts.push(r.verdict());
            reports.push(serde_json::to_value(&r).expect("serializable"));
        }
        let verdict = if verdicts.iter().all(|v| *v == Some(true)) {
            BicVerdict::Proved
        } else if verdicts.contains(&Some(false)) {
            BicVerdict::Refuted
        } else {
            BicVerdict::Inconclusive
        };
        finish(verdict, json!({ "clauses": reports }), out_verdict, out_json)
    })
}

/// Runs the command-line tool on `argv[0..argc]` (program name first) and
/// returns its exit code. Output strings are written when the pointers are
/// non-null. Returns 3 with a last-error message on bad arguments.
///
/// # Safety
/// `argv` must point to `argc` nul-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn bic_cli_run(
    argc: usize,
    argv: *const *const c_char,
    out_stdout: *mut *mut c_char,
    out_stderr: *mut *mut c_char,
) -> c_int {
    let mut args = Vec::with_capacity(argc);
    if argc > 0 && argv.is_null() {
        set_error("argv is null");
        return 3;
    }
    for i in 0..argc {
        match str_arg(*argv.add(i), "argument") {
            Ok(s) => args.push(s.to_string()),
            Err(_) => return 3,
        }
    }
    let out = match catch_unwind(|| bic::cli::run(args)) {
        Ok(o) => o,
        Err(_) => {
            set_error("internal panic");
            return 3;
        }
    };
    if !out_stdout.is_null() {
        out_stdout.write(c_string(out.stdout));
    }
    if !out_stderr.is_null() {
        out_stderr.write(c_string(out.stderr));
    }
    out.code
}
