//! C ABI over `gaussnl`.
//!
//! Objects are opaque heap handles created by `gnl_*_new`-style constructors
//! and released with the matching `*_free`. Every fallible call returns a
//! `GnlStatus`; on failure `gnl_last_error_message` describes the error for
//! the calling thread. Measurement settings cross the boundary as twelve
//! doubles `ξ1 ξ2 ξ3 ξ'1 ξ'2 ξ'3`, each as `(q, p)`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use gaussnl::bell::{self, BellExpression};
use gaussnl::entanglement::{renyi2_entropy, tripartite_renyi2_pure};
use gaussnl::gaussian::{build_pure_standard_form, scaled_symmetric_mixed, symmetric_pure, CovarianceMatrix, PureStateParams};
use gaussnl::optimizer::OptimizerOptions;
use gaussnl::svetlichny::{self, MaximizationResult, MeasurementSettings};
use gaussnl::Error;

/// Number of doubles in a settings array.
pub const GNL_SETTINGS_LEN: usize = 12;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GnlStatus {
    Ok = 0,
    NullPointer = 1,
    TriangleViolation = 2,
    Domain = 3,
    NumericalDomain = 4,
    DimensionMismatch = 5,
    InvalidCovariance = 6,
    Parse = 7,
    Consistency = 8,
    Io = 9,
    BufferTooSmall = 10,
    InvalidUtf8 = 11,
    Panic = 12,
}

/// Covariance matrix handle.
pub struct GnlCovariance(CovarianceMatrix);

/// Bell expression handle.
pub struct GnlBellExpression(BellExpression);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> GnlStatus {
    match e {
        Error::TriangleViolation(_) => GnlStatus::TriangleViolation,
        Error::NumericalDomain(_) => GnlStatus::NumericalDomain,
        Error::Domain(_) => GnlStatus::Domain,
        Error::DimensionMismatch { .. } => GnlStatus::DimensionMismatch,
        Error::InvalidCovariance(_) => GnlStatus::InvalidCovariance,
        Error::Parse { .. } => GnlStatus::Parse,
        Error::Consistency(_) => GnlStatus::Consistency,
        Error::Io(_) => GnlStatus::Io,
    }
}

enum Fail {
    Lib(Error),
    Null(&'static str),
    Status(GnlStatus, String),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

/// Runs `f`, converting errors and panics into a status.
fn guard<F>(f: F) -> GnlStatus
where
    F: FnOnce() -> Result<(), Fail>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            GnlStatus::Ok
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            GnlStatus::NullPointer
        }
        Ok(Err(Fail::Status(s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            GnlStatus::Panic
        }
    }
}

unsafe fn non_null<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn read_settings(p: *const f64) -> Result<MeasurementSettings, Fail> {
    if p.is_null() {
        return Err(Fail::Null("settings"));
    }
    let s = std::slice::from_raw_parts(p, GNL_SETTINGS_LEN);
    Ok(MeasurementSettings::from_slice(s)?)
}

unsafe fn write_settings(p: *mut f64, s: &MeasurementSettings) {
    if !p.is_null() {
        let out = std::slice::from_raw_parts_mut(p, GNL_SETTINGS_LEN);
        out.copy_from_slice(&s.to_vec());
    }
}

unsafe fn emit_cm(out: *mut *mut GnlCovariance, cm: CovarianceMatrix) -> Result<(), Fail> {
    let slot = out_ref(out, "out")?;
    *slot = Box::into_raw(Box::new(GnlCovariance(cm)));
    Ok(())
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn gnl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, static string.
#[no_mangle]
pub extern "C" fn gnl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Pure three-mode state in standard form with local invariants `a1, a2, a3`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn gnl_cm_pure(a1: f64, a2: f64, a3: f64, out: *mut *mut GnlCovariance) -> GnlStatus {
    guard(|| {
        let cm = build_pure_standard_form(&PureStateParams::new(a1, a2, a3)?)?;
        emit_cm(out, cm)
    })
}

/// Fully symmetric pure state.
///
/// # Safety
/// As [`gnl_cm_pure`].
#[no_mangle]
pub unsafe extern "C" fn gnl_cm_symmetric(a: f64, out: *mut *mut GnlCovariance) -> GnlStatus {
    guard(|| emit_cm(out, symmetric_pure(a)?))
}

/// Symmetric state rescaled to purity `mu`.
///
/// # Safety
/// As [`gnl_cm_pure`].
#[no_mangle]
pub unsafe extern "C" fn gnl_cm_symmetric_mixed(a: f64, mu: f64, out: *mut *mut GnlCovariance) -> GnlStatus {
    guard(|| emit_cm(out, scaled_symmetric_mixed(a, mu)?))
}

/// Validated covariance matrix from `(2 modes)²` row-major entries.
///
/// # Safety
/// `entries` must point to `len` readable doubles; `out` as in [`gnl_cm_pure`].
#[no_mangle]
pub unsafe extern "C" fn gnl_cm_from_row_major(
    modes: usize,
    entries: *const f64,
    len: usize,
    out: *mut *mut GnlCovariance,
) -> GnlStatus {
    guard(|| {
        if entries.is_null() {
            return Err(Fail::Null("entries"));
        }
        let slice = std::slice::from_raw_parts(entries, len);
        emit_cm(out, CovarianceMatrix::from_row_slice(modes, slice)?)
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `cm` must come from a `gnl_cm_*` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gnl_cm_free(cm: *mut GnlCovariance) {
    if !cm.is_null() {
        drop(Box::from_raw(cm));
    }
}

/// Number of modes, 0 for a null handle.
///
/// # Safety
/// `cm` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gnl_cm_modes(cm: *const GnlCovariance) -> usize {
    cm.as_ref().map_or(0, |c| c.0.modes())
}

/// Writes the `(2n)²` entries row-major into `buf`; `written` receives the
/// required length even when `cap` is too small.
///
/// # Safety
/// `buf` must hold `cap` doubles; `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gnl_cm_entries(
    cm: *const GnlCovariance,
    buf: *mut f64,
    cap: usize,
    written: *mut usize,
) -> GnlStatus {
    guard(|| {
        let cm = non_null(cm, "cm")?;
        let values = cm.0.to_row_vec();
        copy_out(&values, buf, cap, written)
    })
}

unsafe fn copy_out(values: &[f64], buf: *mut f64, cap: usize, written: *mut usize) -> Result<(), Fail> {
    *out_ref(written, "written")? = values.len();
    if cap < values.len() {
        return Err(Fail::Status(
            GnlStatus::BufferTooSmall,
            format!("buffer holds {cap} values, {} needed", values.len()),
        ));
    }
    if buf.is_null() {
        return Err(Fail::Null("buf"));
    }
    std::slice::from_raw_parts_mut(buf, values.len()).copy_from_slice(values);
    Ok(())
}

/// `(det σ)^(-1/2)`.
///
/// # Safety
/// `cm` a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gnl_cm_purity(cm: *const GnlCovariance, out: *mut f64) -> GnlStatus {
    guard(|| {
        let v = non_null(cm, "cm")?.0.purity();
        *out_ref(out, "out")? = v;
        Ok(())
    })
}

/// Symplectic eigenvalues in descending order.
///
/// # Safety
/// As [`gnl_cm_entries`].
#[no_mangle]
pub unsafe extern "C" fn gnl_cm_symplectic_eigenvalues(
    cm: *const GnlCovariance,
    buf: *mut f64,
    cap: usize,
    written: *mut usize,
) -> GnlStatus {
    guard(|| {
        let nu = non_null(cm, "cm")?.0.symplectic_eigenvalues();
        copy_out(&nu, buf, cap, written)
    })
}

/// `½ ln det σ`.
///
/// # Safety
/// `cm` a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gnl_renyi2_entropy(cm: *const GnlCovariance, out: *mut f64) -> GnlStatus {
    guard(|| {
        let v = renyi2_entropy(&non_null(cm, "cm")?.0);
        *out_ref(out, "out")? = v;
        Ok(())
    })
}

/// Residual Rényi-2 tripartite entanglement of a pure state.
///
/// # Safety
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gnl_tripartite_renyi2_pure(a1: f64, a2: f64, a3: f64, out: *mut f64) -> GnlStatus {
    guard(|| {
        let v = tripartite_renyi2_pure(&PureStateParams::new(a1, a2, a3)?);
        *out_ref(out, "out")? = v;
        Ok(())
    })
}

/// Closed-form maximum of `|S|` for the symmetric pure state.
///
/// # Safety
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gnl_symmetric_max_analytic(a: f64, out: *mut f64) -> GnlStatus {
    guard(|| {
        let v = svetlichny::symmetric_max_analytic(a)?;
        *out_ref(out, "out")? = v;
        Ok(())
    })
}

/// Signed Svetlichny functional at `settings` (twelve doubles).
///
/// # Safety
/// `cm` a live three-mode handle, `settings` twelve readable doubles, `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn gnl_svetlichny_value(
    cm: *const GnlCovariance,
    settings: *const f64,
    out: *mut f64,
) -> GnlStatus {
    guard(|| {
        let cm = non_null(cm, "cm")?;
        let s = read_settings(settings)?;
        *out_ref(out, "out")? = svetlichny::svetlichny_value(&cm.0, &s)?;
        Ok(())
    })
}

unsafe fn emit_max(r: MaximizationResult, value: *mut f64, settings_out: *mut f64) -> Result<(), Fail> {
    *out_ref(value, "value")? = r.value;
    write_settings(settings_out, &r.settings);
    Ok(())
}

/// Maximum of `|S|` over momentum-antisymmetric settings with default
/// optimizer options and `seed`. `settings_out` (twelve doubles) may be null.
///
/// # Safety
/// `cm` a live handle, `value` writable, `settings_out` null or twelve
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gnl_maximize_restricted(
    cm: *const GnlCovariance,
    seed: u64,
    value: *mut f64,
    settings_out: *mut f64,
) -> GnlStatus {
    guard(|| {
        let cm = non_null(cm, "cm")?;
        let r = svetlichny::maximize_restricted(&cm.0, &OptimizerOptions::with_seed(seed))?;
        emit_max(r, value, settings_out)
    })
}

/// Maximum of `|S|` over all twelve setting coordinates.
///
/// # Safety
/// As [`gnl_maximize_restricted`].
#[no_mangle]
pub unsafe extern "C" fn gnl_maximize_full(
    cm: *const GnlCovariance,
    seed: u64,
    value: *mut f64,
    settings_out: *mut f64,
) -> GnlStatus {
    guard(|| {
        let cm = non_null(cm, "cm")?;
        let r = svetlichny::maximize_full(&cm.0, &OptimizerOptions::with_seed(seed))?;
        emit_max(r, value, settings_out)
    })
}

unsafe fn emit_expr(out: *mut *mut GnlBellExpression, e: BellExpression) -> Result<(), Fail> {
    *out_ref(out, "out")? = Box::into_raw(Box::new(GnlBellExpression(e)));
    Ok(())
}

/// Parses an expression in the text format (NUL-terminated UTF-8).
///
/// # Safety
/// `text` a valid C string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gnl_bell_parse(text: *const c_char, out: *mut *mut GnlBellExpression) -> GnlStatus {
    guard(|| {
        if text.is_null() {
            return Err(Fail::Null("text"));
        }
        let s = CStr::from_ptr(text)
            .to_str()
            .map_err(|e| Fail::Status(GnlStatus::InvalidUtf8, e.to_string()))?;
        emit_expr(out, bell::parse_expression(s)?)
    })
}

/// The built-in Svetlichny expression.
///
/// # Safety
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gnl_bell_svetlichny(out: *mut *mut GnlBellExpression) -> GnlStatus {
    guard(|| emit_expr(out, BellExpression::svetlichny()))
}

/// Releases an expression; null is ignored.
///
/// # Safety
/// `e` must come from `gnl_bell_parse` or `gnl_bell_svetlichny` and not be
/// used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gnl_bell_free(e: *mut GnlBellExpression) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// Local bound of the expression.
///
/// # Safety
/// `e` a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gnl_bell_bound(e: *const GnlBellExpression, out: *mut f64) -> GnlStatus {
    guard(|| {
        *out_ref(out, "out")? = non_null(e, "expression")?.0.bound;
        Ok(())
    })
}

/// Value of the expression at `settings`.
///
/// # Safety
/// Live handles, `settings` twelve readable doubles, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gnl_bell_evaluate(
    e: *const GnlBellExpression,
    cm: *const GnlCovariance,
    settings: *const f64,
    out: *mut f64,
) -> GnlStatus {
    guard(|| {
        let e = non_null(e, "expression")?;
        let cm = non_null(cm, "cm")?;
        let s = read_settings(settings)?;
        *out_ref(out, "out")? = bell::evaluate(&e.0, &cm.0, &s)?;
        Ok(())
    })
}

/// Maximum of `|value|` over the twelve setting coordinates.
///
/// # Safety
/// As [`gnl_maximize_restricted`], plus a live expression handle.
#[no_mangle]
pub unsafe extern "C" fn gnl_bell_maximize(
    e: *const GnlBellExpression,
    cm: *const GnlCovariance,
    seed: u64,
    value: *mut f64,
    settings_out: *mut f64,
) -> GnlStatus {
    guard(|| {
        let e = non_null(e, "expression")?;
        let cm = non_null(cm, "cm")?;
        let r = bell::maximize_expression(&e.0, &cm.0, &OptimizerOptions::with_seed(seed))?;
        emit_max(r, value, settings_out)
    })
}
