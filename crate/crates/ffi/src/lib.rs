//! C ABI for the `dmlab` laboratory.
//!
//! Every function returns a [`DmlabStatus`]; results go through out-pointers.
//! On failure the message is available from [`dmlab_last_error`] on the same
//! thread. Handles are opaque and must be released with their `_free`
//! function; strings returned by the library are released with
//! [`dmlab_string_free`].
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dmlab::compactify::{GFunction, RingFunction};
use dmlab::error::LabError;
use dmlab::families::{builtin, Family};
use dmlab::limits::{functional_value, limit_extrapolate, Schedule};
use dmlab::lsc::lsc_gap;
use dmlab::measures::{integrate_triple, reference_triple, DMTriple};
use dmlab::quad::Quadrature;
use dmlab::quasiconvex::{qc_envelope_upper, GrowthFn};
use dmlab::represent::Integrand;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DmlabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    UnknownName = 3,
    Domain = 4,
    InvalidInput = 5,
    Evaluation = 6,
    Precondition = 7,
    Panic = 8,
}

/// A test sequence `(u_k, w_k)`.
pub struct DmlabFamily(Family);

/// A generated triple `(σ, ν̂, μ̂)`.
pub struct DmlabTriple(DMTriple);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(DmlabStatus, String);

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        let status = match &e {
            LabError::Domain { .. } => DmlabStatus::Domain,
            LabError::UnknownName { .. } => DmlabStatus::UnknownName,
            LabError::Evaluation(_) | LabError::DegenerateFiber(_) => DmlabStatus::Evaluation,
            LabError::Precondition(_)
            | LabError::Subcritical { .. }
            | LabError::Boundedness(_)
            | LabError::IncompleteTriple { .. } => DmlabStatus::Precondition,
            _ => DmlabStatus::InvalidInput,
        };
        Failure(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DmlabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            DmlabStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("panic inside dmlab");
            DmlabStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(DmlabStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(DmlabStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn obj<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(DmlabStatus::NullPointer, format!("{what} is null")))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(DmlabStatus::NullPointer, format!("{what} is null")));
    }
    out.write(value);
    Ok(())
}

fn schedule(k_max_exp: u32) -> Result<Schedule, Failure> {
    Ok(Schedule::up_to(k_max_exp)?)
}

fn quad() -> Quadrature {
    Quadrature::default()
}

/// Message of the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn dmlab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub unsafe extern "C" fn dmlab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[no_mangle]
pub unsafe extern "C" fn dmlab_family_builtin(name: *const c_char, out: *mut *mut DmlabFamily) -> DmlabStatus {
    guard(|| {
        let f = builtin(text(name, "name")?)?;
        put(out, Box::into_raw(Box::new(DmlabFamily(f))), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn dmlab_family_free(family: *mut DmlabFamily) {
    if !family.is_null() {
        drop(Box::from_raw(family));
    }
}

#[no_mangle]
pub unsafe extern "C" fn dmlab_family_domain(family: *const DmlabFamily, lo: *mut f64, hi: *mut f64) -> DmlabStatus {
    guard(|| {
        let [a, b] = obj(family, "family")?.0.domain();
        put(lo, a, "lo")?;
        put(hi, b, "hi")
    })
}

/// `(u_k(x), w_k(x))`.
#[no_mangle]
pub unsafe extern "C" fn dmlab_family_evaluate(
    family: *const DmlabFamily,
    k: u64,
    x: f64,
    u: *mut f64,
    w: *mut f64,
) -> DmlabStatus {
    guard(|| {
        let (uv, wv) = obj(family, "family")?.0.evaluate(k, x)?;
        put(u, uv, "u")?;
        put(w, wv, "w")
    })
}

/// `∫ g(x) f₀(u_k) ψ₀(w_k) (1+|w_k|^p) dx` with catalog names for `g`, `f₀`, `ψ₀`.
#[no_mangle]
pub unsafe extern "C" fn dmlab_functional_value(
    family: *const DmlabFamily,
    k: u64,
    g: *const c_char,
    f0: *const c_char,
    psi0: *const c_char,
    p: f64,
    out: *mut f64,
) -> DmlabStatus {
    guard(|| {
        let fam = &obj(family, "family")?.0;
        let g = GFunction::parse(text(g, "g")?)?;
        let f0 = RingFunction::parse(text(f0, "f0")?)?;
        let psi0 = RingFunction::parse(text(psi0, "psi0")?)?;
        put(out, functional_value(fam, k, &g, &f0, &psi0, p, &quad())?, "out")
    })
}

/// Extrapolated limit over `k = 2^4..2^k_max_exp` and its error bar.
#[no_mangle]
pub unsafe extern "C" fn dmlab_limit_extrapolate(
    family: *const DmlabFamily,
    g: *const c_char,
    f0: *const c_char,
    psi0: *const c_char,
    p: f64,
    k_max_exp: u32,
    value: *mut f64,
    error_bar: *mut f64,
) -> DmlabStatus {
    guard(|| {
        let fam = &obj(family, "family")?.0;
        let g = GFunction::parse(text(g, "g")?)?;
        let f0 = RingFunction::parse(text(f0, "f0")?)?;
        let psi0 = RingFunction::parse(text(psi0, "psi0")?)?;
        let est = limit_extrapolate(fam, &g, &f0, &psi0, p, &schedule(k_max_exp)?, &quad())?;
        put(value, est.value, "value")?;
        put(error_bar, est.error_bar, "error_bar")
    })
}

#[no_mangle]
pub unsafe extern "C" fn dmlab_triple_builtin(name: *const c_char, out: *mut *mut DmlabTriple) -> DmlabStatus {
    guard(|| {
        let t = reference_triple(text(name, "name")?)?;
        put(out, Box::into_raw(Box::new(DmlabTriple(t))), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn dmlab_triple_from_json(json: *const c_char, out: *mut *mut DmlabTriple) -> DmlabStatus {
    guard(|| {
        let t = DMTriple::from_json(text(json, "json")?)?;
        put(out, Box::into_raw(Box::new(DmlabTriple(t))), "out")
    })
}

/// Serializes a triple; release the string with [`dmlab_string_free`].
#[no_mangle]
pub unsafe extern "C" fn dmlab_triple_to_json(triple: *const DmlabTriple, out: *mut *mut c_char) -> DmlabStatus {
    guard(|| {
        let json = obj(triple, "triple")?.0.to_json();
        let c = CString::new(json).map_err(|e| Failure(DmlabStatus::InvalidInput, e.to_string()))?;
        put(out, c.into_raw(), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn dmlab_triple_free(triple: *mut DmlabTriple) {
    if !triple.is_null() {
        drop(Box::from_raw(triple));
    }
}

/// `∫ g ∫ ψ₀ ∫ f₀ dμ̂ dν̂ dσ`.
#[no_mangle]
pub unsafe extern "C" fn dmlab_integrate_triple(
    triple: *const DmlabTriple,
    g: *const c_char,
    f0: *const c_char,
    psi0: *const c_char,
    out: *mut f64,
) -> DmlabStatus {
    guard(|| {
        let t = &obj(triple, "triple")?.0;
        let g = GFunction::parse(text(g, "g")?)?;
        let f0 = RingFunction::parse(text(f0, "f0")?)?;
        let psi0 = RingFunction::parse(text(psi0, "psi0")?)?;
        put(out, integrate_triple(t, &g, &f0, &psi0, &quad())?, "out")
    })
}

/// Upper bound for the quasiconvex envelope of a catalog growth function at `s0`.
#[no_mangle]
pub unsafe extern "C" fn dmlab_qc_envelope_upper(
    psi: *const c_char,
    s0: f64,
    n: usize,
    m: usize,
    seed: u64,
    out: *mut f64,
) -> DmlabStatus {
    guard(|| {
        let psi = GrowthFn::parse(text(psi, "psi")?)?;
        put(out, qc_envelope_upper(&psi, s0, n, m, seed)?.value, "out")
    })
}

/// `lim ∫ h(x,u_k,w_k) − ∫ h(x,u,u')` for a catalog integrand.
#[no_mangle]
pub unsafe extern "C" fn dmlab_lsc_gap(
    family: *const DmlabFamily,
    integrand: *const c_char,
    k_max_exp: u32,
    out: *mut f64,
) -> DmlabStatus {
    guard(|| {
        let fam = &obj(family, "family")?.0;
        let h = Integrand::parse(text(integrand, "integrand")?)?;
        put(out, lsc_gap(fam, &h, &schedule(k_max_exp)?, &quad())?.gap, "out")
    })
}
