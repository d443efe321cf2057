//! C ABI over `cm_moduli`.
//!
//! Handles are opaque and owned by the caller; every `*_new` or producing
//! call has a matching `*_free`. Strings returned through `char **` are
//! allocated here and must be released with `cm_string_free`. On failure
//! the status code is returned and `cm_last_error` describes the cause.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cm_moduli::class_poly::{
    hilbert_class_poly, main3_minpoly, ring_class_poly, GeneratorSpec, IntPolynomial,
};
use cm_moduli::cli::{exit_code, parse_exact};
use cm_moduli::modular::{eval_j, Tau};
use cm_moduli::numerics::{decimal_digits, recognize_integer_complex, to_decimal};
use cm_moduli::quad_fields::{class_number, theta_point};
use cm_moduli::{Error, PrecisionContext};

/// Result of every fallible call. Values match the CLI exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Precision = 3,
    ClassNumber = 4,
    Verification = 5,
    Internal = 6,
}

/// Precision settings shared by evaluations.
pub struct CmContext {
    ctx: PrecisionContext,
}

/// A monic polynomial with exact coefficients.
pub struct CmPolynomial {
    poly: IntPolynomial,
    disc: i64,
    level: Option<i64>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("NUL bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CmStatus {
    match exit_code(e) {
        2 => CmStatus::InvalidArgument,
        4 => CmStatus::ClassNumber,
        5 => CmStatus::Verification,
        _ => CmStatus::Precision,
    }
}

/// Run `f`, converting errors and panics into a status.
fn guard<F>(f: F) -> CmStatus
where
    F: FnOnce() -> Result<(), (CmStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CmStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CmStatus::Internal
        }
    }
}

fn lib_err(e: Error) -> (CmStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (CmStatus, String) {
    (CmStatus::NullPointer, format!("{what} is null"))
}

unsafe fn context<'a>(ctx: *const CmContext) -> Result<&'a PrecisionContext, (CmStatus, String)> {
    ctx.as_ref().map(|c| &c.ctx).ok_or_else(|| null("context"))
}

unsafe fn out_ptr<'a, T>(out: *mut T) -> Result<&'a mut T, (CmStatus, String)> {
    out.as_mut().ok_or_else(|| null("output pointer"))
}

unsafe fn string_arg<'a>(s: *const c_char, what: &str) -> Result<&'a str, (CmStatus, String)> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| (CmStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).expect("no interior NUL").into_raw()
}

/// Message for the last failed call on this thread, or NULL. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Free a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn cm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// New context with `bits` of working precision; 0 selects the default.
/// The escalation cap honours `CM_MODULI_MAX_BITS`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cm_context_new(bits: u32, out: *mut *mut CmContext) -> CmStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let mut ctx = PrecisionContext::from_env().map_err(lib_err)?;
        if bits != 0 {
            ctx = ctx.with_working_bits(bits).map_err(lib_err)?;
        }
        *out = Box::into_raw(Box::new(CmContext { ctx }));
        Ok(())
    })
}

/// # Safety
/// `ctx` must come from `cm_context_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn cm_context_free(ctx: *mut CmContext) {
    if !ctx.is_null() {
        drop(Box::from_raw(ctx));
    }
}

/// Class number of the discriminant `disc < 0`, `disc ≡ 0, 1 mod 4`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cm_class_number(disc: i64, out: *mut usize) -> CmStatus {
    guard(|| {
        let out = out_ptr(out)?;
        *out = class_number(disc).map_err(lib_err)?;
        Ok(())
    })
}

/// `j` at `tau = re + i·im` (decimal or fraction strings), or at
/// `θ_K = (disc + √disc)/2` when `re` is NULL. Writes the eval JSON
/// document `{"value_re", "value_im", "bits", "recognized"}`.
///
/// # Safety
/// Pointers must be valid; `im` is read only when `re` is non-NULL.
#[no_mangle]
pub unsafe extern "C" fn cm_eval_j(
    ctx: *const CmContext,
    re: *const c_char,
    im: *const c_char,
    disc: i64,
    out_json: *mut *mut c_char,
) -> CmStatus {
    guard(|| {
        let ctx = context(ctx)?;
        let out = out_ptr(out_json)?;
        let tau = if re.is_null() {
            theta_point(disc).map_err(lib_err)?.tau
        } else {
            let re = parse_exact(string_arg(re, "re")?).map_err(lib_err)?;
            let im = parse_exact(string_arg(im, "im")?).map_err(lib_err)?;
            Tau::from_rationals(&re, &im).map_err(lib_err)?
        };
        let st = eval_j(&tau, ctx).map_err(lib_err)?;
        let digits = decimal_digits(st.agreed_bits);
        let doc = serde_json::json!({
            "value_re": to_decimal(st.value.real(), digits),
            "value_im": to_decimal(st.value.imag(), digits),
            "bits": st.bits,
            "recognized": recognize_integer_complex(&st.value, ctx).ok().map(|n| n.to_string()),
        });
        *out = into_c_string(doc.to_string());
        Ok(())
    })
}

fn emit_poly(
    out: *mut *mut CmPolynomial,
    make: impl FnOnce() -> Result<CmPolynomial, Error>,
) -> Result<(), (CmStatus, String)> {
    let out = unsafe { out_ptr(out)? };
    *out = Box::into_raw(Box::new(make().map_err(lib_err)?));
    Ok(())
}

/// Hilbert class polynomial of the fundamental discriminant `disc`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cm_hilbert_class_poly(
    ctx: *const CmContext,
    disc: i64,
    out: *mut *mut CmPolynomial,
) -> CmStatus {
    guard(|| {
        let ctx = context(ctx)?;
        emit_poly(out, || {
            Ok(CmPolynomial {
                poly: hilbert_class_poly(disc, ctx)?,
                disc,
                level: None,
            })
        })
    })
}

/// Ring class polynomial for the order of conductor `level`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cm_ring_class_poly(
    ctx: *const CmContext,
    disc: i64,
    level: i64,
    out: *mut *mut CmPolynomial,
) -> CmStatus {
    guard(|| {
        let ctx = context(ctx)?;
        emit_poly(out, || {
            Ok(CmPolynomial {
                poly: ring_class_poly(disc, level, ctx)?,
                disc,
                level: Some(level),
            })
        })
    })
}

/// Minimal polynomial of the ray class generator for `modulus`. `p = 0`
/// selects the smallest admissible prime.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cm_raygen_poly(
    ctx: *const CmContext,
    disc: i64,
    modulus: i64,
    p: u64,
    out: *mut *mut CmPolynomial,
) -> CmStatus {
    guard(|| {
        let ctx = context(ctx)?;
        emit_poly(out, || {
            let spec = GeneratorSpec::for_modulus(disc, modulus, (p != 0).then_some(p))?;
            Ok(CmPolynomial {
                poly: main3_minpoly(&spec, ctx)?,
                disc,
                level: Some(modulus),
            })
        })
    })
}

/// # Safety
/// `poly` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn cm_polynomial_free(poly: *mut CmPolynomial) {
    if !poly.is_null() {
        drop(Box::from_raw(poly));
    }
}

/// Degree, or -1 for NULL.
///
/// # Safety
/// `poly` must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn cm_polynomial_degree(poly: *const CmPolynomial) -> i64 {
    poly.as_ref().map_or(-1, |p| p.poly.degree() as i64)
}

/// Whether every coefficient is an integer.
///
/// # Safety
/// `poly` must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn cm_polynomial_is_integral(poly: *const CmPolynomial) -> bool {
    poly.as_ref().is_some_and(|p| p.poly.is_integral())
}

/// Coefficient of `X^i` as a decimal string (`a/b` if not integral).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cm_polynomial_coeff(
    poly: *const CmPolynomial,
    i: usize,
    out: *mut *mut c_char,
) -> CmStatus {
    guard(|| {
        let p = poly.as_ref().ok_or_else(|| null("polynomial"))?;
        let out = out_ptr(out)?;
        let c = p.poly.coeff_strings().into_iter().nth(i).ok_or_else(|| {
            (
                CmStatus::InvalidArgument,
                format!("index {i} exceeds degree {}", p.poly.degree()),
            )
        })?;
        *out = into_c_string(c);
        Ok(())
    })
}

/// Polynomial JSON `{"disc", "level", "coeffs", "monic", "bits"}`,
/// coefficients ascending.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cm_polynomial_json(
    poly: *const CmPolynomial,
    out: *mut *mut c_char,
) -> CmStatus {
    guard(|| {
        let p = poly.as_ref().ok_or_else(|| null("polynomial"))?;
        let out = out_ptr(out)?;
        let doc = serde_json::to_string(&p.poly.to_json(p.disc, p.level))
            .map_err(|e| (CmStatus::Internal, e.to_string()))?;
        *out = into_c_string(doc);
        Ok(())
    })
}
