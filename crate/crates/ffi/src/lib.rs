//! C ABI over `gms-core`.
//!
//! Every object crosses the boundary as an opaque pointer created by a
//! `*_from_json`/constructor call and released with the matching `*_free`.
//! Functions return a [`GmsStatus`]; results are written through out
//! pointers only on success. After a failure,
//! [`gms_last_error_message`] describes what went wrong on the calling
//! thread. Strings handed out by the library must be released with
//! [`gms_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gms_core::cosets::{canonical_form, same_double_coset, CanonicalLabel};
use gms_core::topology::{self, GmsMetricConfig};
use gms_core::{measure_distance, Error, PwMap, RMeasure, StripGrid};
use num_complex::Complex64;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GmsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed JSON or a document of the wrong shape.
    Parse = 3,
    /// Input violates a documented precondition (e.g. unnormalized law).
    Precondition = 4,
    /// Structural validation failed (bad segments, partitions, bounds).
    Invalid = 5,
    Numeric = 6,
    /// The operation is not defined for sampled maps.
    Unsupported = 7,
    Io = 8,
    /// A Rust panic was caught at the boundary.
    Panic = 9,
}

/// A finite positive measure on `(0, ∞)`.
pub struct GmsMeasure(RMeasure);

/// A measure-class-preserving piecewise map of `[0, 1]`.
pub struct GmsMap(PwMap);

/// Canonical double-coset label `(ν₁, ν₂, …; ν∞)`.
pub struct GmsLabel(CanonicalLabel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Fail(GmsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Precondition(_) => GmsStatus::Precondition,
            Error::Invalid { .. } | Error::OutOfRange { .. } => GmsStatus::Invalid,
            Error::DegreeOverflow { .. } | Error::Numeric { .. } => GmsStatus::Numeric,
            Error::Unsupported(_) => GmsStatus::Unsupported,
            Error::Json(_) => GmsStatus::Parse,
            Error::Io(_) | Error::Csv(_) => GmsStatus::Io,
        };
        Fail(status, e.to_string())
    }
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> GmsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GmsStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            GmsStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(GmsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Fail(GmsStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn put_box<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(Box::into_raw(Box::new(value)));
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    let c = CString::new(s).map_err(|e| Fail(GmsStatus::Parse, e.to_string()))?;
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(c.into_raw());
    Ok(())
}

/// Message of the last failed call on this thread, or NULL if none failed.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gms_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn gms_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// ---------------------------------------------------------------- measures

/// Parses a measure from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gms_measure_from_json(json: *const c_char, out: *mut *mut GmsMeasure) -> GmsStatus {
    guard(|| {
        let m = RMeasure::from_json(text(json, "json")?)?;
        put_box(out, GmsMeasure(m))
    })
}

/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gms_measure_to_json(m: *const GmsMeasure, out: *mut *mut c_char) -> GmsStatus {
    guard(|| put_string(out, borrow(m, "measure")?.0.to_json()))
}

/// # Safety
/// `m` must be NULL or a handle that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn gms_measure_free(m: *mut GmsMeasure) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Total mass `ν(0, ∞)`.
///
/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gms_measure_mass(m: *const GmsMeasure, out: *mut f64) -> GmsStatus {
    guard(|| put(out, borrow(m, "measure")?.0.mass()))
}

/// First moment `∫ t dν`.
///
/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gms_measure_moment(m: *const GmsMeasure, out: *mut f64) -> GmsStatus {
    guard(|| put(out, borrow(m, "measure")?.0.moment()))
}

/// `χ(z) = ∫ t^z dν(t)` at `z = re + i·im`, with `0 <= re <= 1`.
///
/// # Safety
/// `m` must be a live handle; both out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn gms_measure_char_fn(
    m: *const GmsMeasure,
    re: f64,
    im: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> GmsStatus {
    guard(|| {
        let v = borrow(m, "measure")?.0.char_fn(Complex64::new(re, im))?;
        if out_im.is_null() {
            return Err(null("output pointer"));
        }
        put(out_re, v.re)?;
        put(out_im, v.im)
    })
}

/// Largest `|χ_a − χ_b|` over the default strip grid.
///
/// # Safety
/// `a`, `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gms_measure_distance(a: *const GmsMeasure, b: *const GmsMeasure, out: *mut f64) -> GmsStatus {
    guard(|| {
        let d = measure_distance(&borrow(a, "measure a")?.0, &borrow(b, "measure b")?.0, &StripGrid::default())?;
        put(out, d)
    })
}

// -------------------------------------------------------------------- maps

/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gms_map_from_json(json: *const c_char, out: *mut *mut GmsMap) -> GmsStatus {
    guard(|| {
        let g = PwMap::from_json(text(json, "json")?)?;
        put_box(out, GmsMap(g))
    })
}

/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gms_map_to_json(g: *const GmsMap, out: *mut *mut c_char) -> GmsStatus {
    guard(|| put_string(out, borrow(g, "map")?.0.to_json()))
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gms_map_identity(out: *mut *mut GmsMap) -> GmsStatus {
    guard(|| put_box(out, GmsMap(PwMap::identity())))
}

/// # Safety
/// `g` must be NULL or a handle that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn gms_map_free(g: *mut GmsMap) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gms_map_evaluate(g: *const GmsMap, x: f64, out: *mut f64) -> GmsStatus {
    guard(|| put(out, borrow(g, "map")?.0.evaluate(x)?))
}

/// The convex map whose derivative has law `nu` (a probability measure
/// with unit first moment).
///
/// # Safety
/// `nu` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gms_map_convex_section(nu: *const GmsMeasure, out: *mut *mut GmsMap) -> GmsStatus {
    guard(|| {
        let g = PwMap::convex_section(&borrow(nu, "measure")?.0)?;
        put_box(out, GmsMap(g))
    })
}

/// Law of the derivative `g'` under Lebesgue measure.
///
/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gms_map_derivative_law(g: *const GmsMap, out: *mut *mut GmsMeasure) -> GmsStatus {
    guard(|| put_box(out, GmsMeasure(borrow(g, "map")?.0.derivative_law())))
}

/// `g ∘ h`, applying `h` first.
///
/// # Safety
/// `g`, `h` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gms_map_compose(g: *const GmsMap, h: *const GmsMap, out: *mut *mut GmsMap) -> GmsStatus {
    guard(|| {
        let c = PwMap::compose(&borrow(g, "map g")?.0, &borrow(h, "map h")?.0)?;
        put_box(out, GmsMap(c))
    })
}

/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gms_map_invert(g: *const GmsMap, out: *mut *mut GmsMap) -> GmsStatus {
    guard(|| put_box(out, GmsMap(borrow(g, "map")?.0.invert()?)))
}

/// Truncated inverse-limit distance with dyadic levels `1..=depth` and the
/// default strip grid.
///
/// # Safety
/// `g`, `h` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gms_distance(g: *const GmsMap, h: *const GmsMap, depth: u32, out: *mut f64) -> GmsStatus {
    guard(|| {
        let cfg = GmsMetricConfig::new(depth, StripGrid::default())?;
        put(out, topology::gms_distance(&borrow(g, "map g")?.0, &borrow(h, "map h")?.0, &cfg)?)
    })
}

// ------------------------------------------------------------------ labels

/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gms_canonical_form(g: *const GmsMap, out: *mut *mut GmsLabel) -> GmsStatus {
    guard(|| put_box(out, GmsLabel(canonical_form(&borrow(g, "map")?.0)?)))
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gms_label_from_json(json: *const c_char, out: *mut *mut GmsLabel) -> GmsStatus {
    guard(|| {
        let l = CanonicalLabel::from_json(text(json, "json")?)?;
        put_box(out, GmsLabel(l))
    })
}

/// # Safety
/// `l` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gms_label_to_json(l: *const GmsLabel, out: *mut *mut c_char) -> GmsStatus {
    guard(|| put_string(out, borrow(l, "label")?.0.to_json()))
}

/// Number of finite parts `ν₁, ν₂, …` of the label.
///
/// # Safety
/// `l` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gms_label_line_count(l: *const GmsLabel, out: *mut usize) -> GmsStatus {
    guard(|| put(out, borrow(l, "label")?.0.nu.len()))
}

/// # Safety
/// `l` must be NULL or a handle that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn gms_label_free(l: *mut GmsLabel) {
    if !l.is_null() {
        drop(Box::from_raw(l));
    }
}

/// Whether `g` and `h` lie in the same double coset.
///
/// # Safety
/// `g`, `h` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gms_same_double_coset(g: *const GmsMap, h: *const GmsMap, out: *mut bool) -> GmsStatus {
    guard(|| put(out, same_double_coset(&borrow(g, "map g")?.0, &borrow(h, "map h")?.0)?))
}
