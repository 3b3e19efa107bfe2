//! C ABI over `hardy-spectral`.
//!
//! Objects are opaque handles created by `hs_*_new`/`hs_*_from_json` and
//! released with the matching `hs_*_free`. Every fallible call returns an
//! [`HsStatus`]; on failure `hs_last_error` holds a message for the calling
//! thread. Outputs are written through pointers only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hardy_spectral::measure::{ball_overlap, McConfig};
use hardy_spectral::packing::{rozenblum_extract, verify_packing};
use hardy_spectral::spectral::{assemble, count_leq, eigenvalues_covering, eigenvalues_with, lieb_bound, EigenOptions, LiebOptions, SpectralResult};
use hardy_spectral::{delta_at, delta_field, DeltaField, Domain, Error, SphereRule};

/// Result codes. `HS_OK` is zero.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HsStatus {
    HsOk = 0,
    HsNullPointer = 1,
    HsInvalidUtf8 = 2,
    HsConfig = 3,
    HsInvalidParameter = 4,
    HsDimensionMismatch = 5,
    HsNotInDomain = 6,
    HsEmptyInterior = 7,
    HsBudgetExceeded = 8,
    HsNoConvergence = 9,
    HsInsufficientSpectrum = 10,
    HsBufferTooSmall = 11,
    HsPanic = 12,
    HsOther = 13,
}

/// Domain handle.
pub struct HsDomain(Domain);

/// Grid of `δ` values.
pub struct HsField(DeltaField);

/// Computed eigenvalues.
pub struct HsSpectrum(SpectralResult);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn code(e: &Error) -> HsStatus {
    match e {
        Error::Config { .. } | Error::Json(_) => HsStatus::HsConfig,
        Error::InvalidParameter { .. } | Error::Unbounded | Error::UnsupportedDimension(_) => HsStatus::HsInvalidParameter,
        Error::DimensionMismatch { .. } | Error::GridMismatch(_) => HsStatus::HsDimensionMismatch,
        Error::NotInDomain(_) => HsStatus::HsNotInDomain,
        Error::EmptyInterior => HsStatus::HsEmptyInterior,
        Error::BudgetExceeded { .. } => HsStatus::HsBudgetExceeded,
        Error::NoConvergence(_) => HsStatus::HsNoConvergence,
        Error::InsufficientSpectrum { .. } => HsStatus::HsInsufficientSpectrum,
        _ => HsStatus::HsOther,
    }
}

struct Fail(HsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(code(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(HsStatus::HsNullPointer, format!("`{what}` is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> HsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HsStatus::HsOk,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            HsStatus::HsPanic
        }
    }
}

unsafe fn obj<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn put<T>(out: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

fn rule(dim: usize, nodes: usize) -> Result<SphereRule, Fail> {
    Ok(if nodes == 0 { SphereRule::default_for(dim)? } else { SphereRule::new(dim, nodes)? })
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn hs_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Parses a JSON domain description.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hs_domain_from_json(json: *const c_char, out: *mut *mut HsDomain) -> HsStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|e| Fail(HsStatus::HsInvalidUtf8, e.to_string()))?;
        let dom = Domain::from_json(text)?;
        put(out, Box::into_raw(Box::new(HsDomain(dom))), "out")
    })
}

/// # Safety
/// `dom` must be null or a handle from `hs_domain_from_json` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hs_domain_free(dom: *mut HsDomain) {
    if !dom.is_null() {
        drop(Box::from_raw(dom));
    }
}

/// Spatial dimension, 0 for a null handle.
///
/// # Safety
/// `dom` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hs_domain_dim(dom: *const HsDomain) -> usize {
    dom.as_ref().map_or(0, |d| d.0.dim())
}

/// # Safety
/// `x` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hs_domain_contains(dom: *const HsDomain, x: *const f64, len: usize, out: *mut bool) -> HsStatus {
    guard(|| {
        let d = obj(dom, "dom")?;
        let inside = d.0.contains(slice(x, len, "x")?)?;
        put(out, inside, "out")
    })
}

/// Mean distance `δ(x)`. `nodes == 0` selects the default sphere rule.
///
/// # Safety
/// `x` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hs_delta_at(dom: *const HsDomain, x: *const f64, len: usize, nodes: usize, out: *mut f64) -> HsStatus {
    guard(|| {
        let d = obj(dom, "dom")?;
        let v = delta_at(&d.0, slice(x, len, "x")?, &rule(d.0.dim(), nodes)?)?;
        put(out, v, "out")
    })
}

/// Monte Carlo `|Ω ∩ B_ρ(x)| / |B_ρ(x)|` and its standard error.
///
/// # Safety
/// `x` must point to `len` doubles; `value` and `stderr` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hs_ball_overlap(
    dom: *const HsDomain,
    x: *const f64,
    len: usize,
    rho: f64,
    samples: usize,
    seed: u64,
    value: *mut f64,
    stderr: *mut f64,
) -> HsStatus {
    guard(|| {
        let d = obj(dom, "dom")?;
        let est = ball_overlap(&d.0, slice(x, len, "x")?, rho, samples, seed)?;
        put(value, est.value, "value")?;
        put(stderr, est.stderr, "stderr")
    })
}

/// Lower bound `d/(4ρ²)(1 − sup overlap)` for `λ₁`; `pass` receives 1 when
/// the bound holds against `lambda1`.
///
/// # Safety
/// `bound` and `pass` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hs_lieb_bound(
    dom: *const HsDomain,
    rho: f64,
    lambda1: f64,
    samples: usize,
    seed: u64,
    bound: *mut f64,
    pass: *mut i32,
) -> HsStatus {
    guard(|| {
        let d = obj(dom, "dom")?;
        let opts = LiebOptions { mc: McConfig::new(samples, seed), ..LiebOptions::default() };
        let r = lieb_bound(&d.0, rho, lambda1, &opts)?;
        put(bound, r.bound_value, "bound")?;
        put(pass, i32::from(r.passed()), "pass")
    })
}

/// `δ` on the grid of spacing `h` over the bounding box.
///
/// # Safety
/// `dom` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hs_field_new(dom: *const HsDomain, h: f64, nodes: usize, out: *mut *mut HsField) -> HsStatus {
    guard(|| {
        let d = obj(dom, "dom")?;
        let f = delta_field(&d.0, h, &rule(d.0.dim(), nodes)?)?;
        put(out, Box::into_raw(Box::new(HsField(f))), "out")
    })
}

/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hs_field_free(field: *mut HsField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Number of grid nodes, 0 for a null handle.
///
/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hs_field_len(field: *const HsField) -> usize {
    field.as_ref().map_or(0, |f| f.0.values().len())
}

/// Nodes inside the domain, 0 for a null handle.
///
/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hs_field_interior(field: *const HsField) -> usize {
    field.as_ref().map_or(0, |f| f.0.interior_count())
}

/// Copies `δ` at every node into `out` (NaN outside the domain), in grid
/// order with the first axis fastest.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hs_field_values(field: *const HsField, out: *mut f64, len: usize) -> HsStatus {
    guard(|| {
        let f = obj(field, "field")?;
        let v = f.0.values();
        if out.is_null() {
            return Err(null("out"));
        }
        if len < v.len() {
            return Err(Fail(HsStatus::HsBufferTooSmall, format!("need {} values, buffer holds {len}", v.len())));
        }
        ptr::copy_nonoverlapping(v.as_ptr(), out, v.len());
        Ok(())
    })
}

/// The `k` lowest Dirichlet eigenvalues at spacing `h`.
///
/// # Safety
/// `dom` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hs_spectrum_new(dom: *const HsDomain, h: f64, k: usize, out: *mut *mut HsSpectrum) -> HsStatus {
    guard(|| {
        let d = obj(dom, "dom")?;
        let op = assemble(&d.0, h)?;
        let res = eigenvalues_with(&op, k, &EigenOptions { vectors: false, ..EigenOptions::default() })?;
        put(out, Box::into_raw(Box::new(HsSpectrum(res))), "out")
    })
}

/// Every eigenvalue `≤ lambda` at spacing `h`, plus the next one.
///
/// # Safety
/// `dom` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hs_spectrum_covering(dom: *const HsDomain, h: f64, lambda: f64, out: *mut *mut HsSpectrum) -> HsStatus {
    guard(|| {
        let d = obj(dom, "dom")?;
        let op = assemble(&d.0, h)?;
        let res = eigenvalues_covering(&op, lambda, &EigenOptions { vectors: false, ..EigenOptions::default() })?;
        put(out, Box::into_raw(Box::new(HsSpectrum(res))), "out")
    })
}

/// # Safety
/// `spec` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hs_spectrum_free(spec: *mut HsSpectrum) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// # Safety
/// `spec` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hs_spectrum_len(spec: *const HsSpectrum) -> usize {
    spec.as_ref().map_or(0, |s| s.0.eigenvalues.len())
}

/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hs_spectrum_eigenvalues(spec: *const HsSpectrum, out: *mut f64, len: usize) -> HsStatus {
    guard(|| {
        let s = obj(spec, "spec")?;
        let v = &s.0.eigenvalues;
        if out.is_null() {
            return Err(null("out"));
        }
        if len < v.len() {
            return Err(Fail(HsStatus::HsBufferTooSmall, format!("need {} values, buffer holds {len}", v.len())));
        }
        ptr::copy_nonoverlapping(v.as_ptr(), out, v.len());
        Ok(())
    })
}

/// `N_≤(λ)`; fails with `HS_INSUFFICIENT_SPECTRUM` past the computed range.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hs_count_leq(spec: *const HsSpectrum, lambda: f64, out: *mut usize) -> HsStatus {
    guard(|| {
        let s = obj(spec, "spec")?;
        put(out, count_leq(&s.0, lambda)?, "out")
    })
}

/// Greedy disjoint packing in `{δ ≥ (4λ)^{-1/2}}` checked against `spec`;
/// writes the number of balls and whether every certificate held.
///
/// # Safety
/// Handles must be live; `count` and `pass` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hs_rozenblum(
    field: *const HsField,
    spec: *const HsSpectrum,
    lambda: f64,
    theta: f64,
    samples: usize,
    seed: u64,
    count: *mut usize,
    pass: *mut i32,
) -> HsStatus {
    guard(|| {
        let f = obj(field, "field")?;
        let s = obj(spec, "spec")?;
        let pk = rozenblum_extract(f.0.domain(), &f.0, lambda, theta, &McConfig::new(samples, seed))?;
        let rep = verify_packing(&pk, &s.0)?;
        put(count, pk.len(), "count")?;
        put(pass, i32::from(rep.passed()), "pass")
    })
}
