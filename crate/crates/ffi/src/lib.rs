//! C interface. Instances and capacities are opaque handles created by the
//! `*_parse` functions and released with the matching `*_free`. Every fallible
//! call returns a [`ClStatus`]; on failure [`cl_last_error`] describes it.
//! Strings returned through `char **` belong to the caller and are released
//! with [`cl_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use coherence_lab::arbitrage::check_no_arbitrage;
use coherence_lab::capacity::{choquet_integral, is_convex, parse_capacity, Capacity, CapacityError};
use coherence_lab::coherence::{CoherenceError, Grade};
use coherence_lab::gamble::DEFAULT_CLIQUE_CAP;
use coherence_lab::instance::DecisionInstance;
use coherence_lab::io::parse_instance;
use coherence_lab::rational::{format_rational, parse_rational};
use coherence_lab::report::{analysis_report, analyze, prepare, AnalysisOptions};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidInput = 4,
    InternalContradiction = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClGrade {
    None = 0,
    Simple = 1,
    Theta0 = 2,
    Theta1 = 3,
    Full = 4,
}

impl From<Grade> for ClGrade {
    fn from(g: Grade) -> Self {
        match g {
            Grade::None => ClGrade::None,
            Grade::Simple => ClGrade::Simple,
            Grade::Theta0 => ClGrade::Theta0,
            Grade::Theta1 => ClGrade::Theta1,
            Grade::Full => ClGrade::Full,
        }
    }
}

/// A parsed decision instance.
pub struct ClInstance {
    inner: DecisionInstance,
}

/// A parsed capacity.
pub struct ClCapacity {
    inner: Capacity,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(ClStatus, String);

impl From<CoherenceError> for Failure {
    fn from(e: CoherenceError) -> Self {
        let status = match e {
            CoherenceError::InternalContradiction(_) | CoherenceError::Lp(_) => ClStatus::InternalContradiction,
            _ => ClStatus::InvalidInput,
        };
        Failure(status, e.to_string())
    }
}

impl From<CapacityError> for Failure {
    fn from(e: CapacityError) -> Self {
        let status = match e {
            CapacityError::InternalContradiction(_) | CapacityError::Lp(_) => ClStatus::InternalContradiction,
            _ => ClStatus::InvalidInput,
        };
        Failure(status, e.to_string())
    }
}

/// Runs `body`, converting errors and panics into a status and the last-error message.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> ClStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            ClStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {message}"));
            ClStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(ClStatus::NullArgument, "null string argument".into()));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(ClStatus::InvalidUtf8, e.to_string()))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure(ClStatus::NullArgument, "null handle".into()))
}

unsafe fn store<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(ClStatus::NullArgument, "null output pointer".into()));
    }
    out.write(value);
    Ok(())
}

/// Checks `out` before allocating so a failed call never leaks the string.
unsafe fn store_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(ClStatus::NullArgument, "null output pointer".into()));
    }
    let c = CString::new(s).map_err(|e| Failure(ClStatus::InvalidInput, e.to_string()))?;
    out.write(c.into_raw());
    Ok(())
}

fn cap_or_default(clique_cap: usize) -> usize {
    if clique_cap == 0 {
        DEFAULT_CLIQUE_CAP
    } else {
        clique_cap
    }
}

/// Message for the last failed call on this thread, or NULL after a success.
/// The pointer stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn cl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn cl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses an instance from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cl_instance_parse(json: *const c_char, out: *mut *mut ClInstance) -> ClStatus {
    guard(|| {
        let text = text(json)?;
        let inner = parse_instance(text).map_err(|e| Failure(ClStatus::ParseError, e.to_string()))?;
        store(out, Box::into_raw(Box::new(ClInstance { inner })))
    })
}

/// # Safety
/// `instance` must be NULL or a handle from [`cl_instance_parse`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cl_instance_free(instance: *mut ClInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// # Safety
/// `instance` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn cl_instance_shape(
    instance: *const ClInstance,
    states: *mut usize,
    acts: *mut usize,
) -> ClStatus {
    guard(|| {
        let inst = &handle(instance)?.inner;
        store(states, inst.state_count())?;
        store(acts, inst.acts().len())
    })
}

/// Strongest coherence grade after normalization. `clique_cap` 0 selects the default.
///
/// # Safety
/// `instance` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cl_instance_grade(instance: *const ClInstance, clique_cap: usize, out: *mut ClGrade) -> ClStatus {
    guard(|| {
        let inst = &handle(instance)?.inner;
        let prepared = prepare(inst, false)?;
        let ladder = coherence_lab::coherence::coherence_ladder(&prepared.instance, cap_or_default(clique_cap))?;
        store(out, ladder.grade.into())
    })
}

/// Whether the value order admits no arbitrage.
///
/// # Safety
/// `instance` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cl_instance_no_arbitrage(instance: *const ClInstance, out: *mut bool) -> ClStatus {
    guard(|| {
        let inst = &handle(instance)?.inner;
        let prepared = prepare(inst, false)?;
        store(out, check_no_arbitrage(&prepared.instance)?.ok)
    })
}

/// Full analysis as the JSON report the command line prints.
///
/// # Safety
/// `instance` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cl_instance_analyze_json(
    instance: *const ClInstance,
    clique_cap: usize,
    seed: u64,
    out: *mut *mut c_char,
) -> ClStatus {
    guard(|| {
        let inst = &handle(instance)?.inner;
        let opts = AnalysisOptions {
            clique_cap: cap_or_default(clique_cap),
            seed,
            synthesize_truncations: false,
        };
        let a = analyze(inst, opts)?;
        store_string(out, analysis_report(inst, &a).render_json())
    })
}

/// Parses a capacity from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cl_capacity_parse(json: *const c_char, out: *mut *mut ClCapacity) -> ClStatus {
    guard(|| {
        let inner = parse_capacity(text(json)?).map_err(|e| Failure(ClStatus::ParseError, e.to_string()))?;
        store(out, Box::into_raw(Box::new(ClCapacity { inner })))
    })
}

/// # Safety
/// `capacity` must be NULL or a handle from [`cl_capacity_parse`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cl_capacity_free(capacity: *mut ClCapacity) {
    if !capacity.is_null() {
        drop(Box::from_raw(capacity));
    }
}

/// # Safety
/// `capacity` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cl_capacity_is_convex(capacity: *const ClCapacity, out: *mut bool) -> ClStatus {
    guard(|| store(out, is_convex(&handle(capacity)?.inner)))
}

/// Choquet integral of a profile given as `len` rational strings such as "3/4".
/// The result is written as a newly allocated rational string.
///
/// # Safety
/// `capacity` must be a live handle, `profile` must point to `len` valid
/// strings, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cl_capacity_choquet(
    capacity: *const ClCapacity,
    profile: *const *const c_char,
    len: usize,
    out: *mut *mut c_char,
) -> ClStatus {
    guard(|| {
        let cap = &handle(capacity)?.inner;
        if profile.is_null() && len > 0 {
            return Err(Failure(ClStatus::NullArgument, "null profile".into()));
        }
        let mut values = Vec::with_capacity(len);
        for i in 0..len {
            let s = text(*profile.add(i))?;
            values.push(parse_rational(s).map_err(|e| Failure(ClStatus::ParseError, e.to_string()))?);
        }
        let v = choquet_integral(cap, &values)?;
        store_string(out, format_rational(&v))
    })
}
