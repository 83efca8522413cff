//! C ABI over `ncsms`.
//!
//! Objects cross the boundary as opaque handles created by `*_new` (or an
//! operation writing to an out-pointer) and released by the matching
//! `*_free`. Every fallible function returns an [`NcsmsStatus`]; on failure
//! the message is kept per thread and read with
//! [`ncsms_last_error_message`]. Field values travel as interleaved
//! `re, im` doubles in site-major, row-major matrix order, the same order as
//! the `.mfld` payload.

// `!(x >= a)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use ncsms::io::{read_mfld, write_mfld};
use ncsms::lattice::{GridSpec, MatrixField};
use ncsms::linalg::C64;
use ncsms::meansop::{dyadic_piece, spherical_mean};
use ncsms::ncspace::{
    alpha_threshold, maximal_norm_general_upper, maximal_norm_positive, maximal_norm_selfadjoint, FamilyKind,
    MaximalFamily,
};
use ncsms::special::{bessel_j, m_hat};
use ncsms::Error;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NcsmsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidGrid = 3,
    ShapeMismatch = 4,
    /// Gamma pole or Bessel order out of range.
    Domain = 5,
    /// Frequency support beyond the admissible band, or a lossy dilation.
    Aliasing = 6,
    NonFinite = 7,
    SolverFailure = 8,
    InfeasibleFamily = 9,
    Io = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NcsmsFamilyKind {
    Positive = 0,
    Selfadjoint = 1,
    General = 2,
}

/// Periodic grid.
pub struct NcsmsGrid(GridSpec);

/// Matrix-valued field on a grid.
pub struct NcsmsField(MatrixField);

/// Family under construction: members are copied in by
/// [`ncsms_family_push`].
pub struct NcsmsFamily {
    kind: FamilyKind,
    members: Vec<(f64, MatrixField)>,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_last_error(message: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = message);
}

fn status_of(e: &Error) -> NcsmsStatus {
    match e {
        Error::InvalidGrid(_) => NcsmsStatus::InvalidGrid,
        Error::InvalidArgument(_) | Error::NotHermitian(_) => NcsmsStatus::InvalidArgument,
        Error::ShapeMismatch(_) => NcsmsStatus::ShapeMismatch,
        Error::NonFinite { .. } => NcsmsStatus::NonFinite,
        Error::GammaPole(_) | Error::OrderOutOfRange(_) => NcsmsStatus::Domain,
        Error::SupportExceedsNyquist { .. } | Error::GridTooCoarse(_) | Error::DilationLoss { .. } => {
            NcsmsStatus::Aliasing
        }
        Error::InfeasibleFamily(_) => NcsmsStatus::InfeasibleFamily,
        Error::SolverNonConvergence { .. } => NcsmsStatus::SolverFailure,
        Error::Format { .. } | Error::Io(_) | Error::Json(_) => NcsmsStatus::Io,
    }
}

struct Fail(NcsmsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(NcsmsStatus::NullPointer, format!("{what} is null"))
}

/// Runs `body`, recording the message of any error or panic.
fn guard(body: impl FnOnce() -> Result<(), Fail>) -> NcsmsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => NcsmsStatus::Ok,
        Ok(Err(Fail(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("panic: {message}"));
            NcsmsStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, Fail> {
    ptr.as_ref().ok_or_else(|| null(what))
}

unsafe fn get_mut<'a, T>(ptr: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    ptr.as_mut().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = value;
    Ok(())
}

unsafe fn path_arg(path: *const c_char) -> Result<PathBuf, Fail> {
    if path.is_null() {
        return Err(null("path"));
    }
    let text = CStr::from_ptr(path)
        .to_str()
        .map_err(|_| Fail(NcsmsStatus::InvalidArgument, "path is not UTF-8".into()))?;
    Ok(PathBuf::from(text))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ncsms_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Length in bytes of the last error message of this thread, without the NUL.
#[no_mangle]
pub extern "C" fn ncsms_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().len())
}

/// Copies the last error message of this thread into `buf` with a NUL
/// terminator. Needs `len > ncsms_last_error_length()`.
///
/// # Safety
/// `buf` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ncsms_last_error_message(buf: *mut c_char, len: usize) -> NcsmsStatus {
    if buf.is_null() {
        return NcsmsStatus::NullPointer;
    }
    LAST_ERROR.with(|e| {
        let message = e.borrow();
        if len <= message.len() {
            return NcsmsStatus::BufferTooSmall;
        }
        std::ptr::copy_nonoverlapping(message.as_ptr(), buf.cast::<u8>(), message.len());
        *buf.add(message.len()) = 0;
        NcsmsStatus::Ok
    })
}

/// Grid of `size^n` points on the box `[-length/2, length/2)^n`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ncsms_grid_new(n: usize, size: usize, length: f64, out: *mut *mut NcsmsGrid) -> NcsmsStatus {
    guard(|| put(out, NcsmsGrid(GridSpec::new(n, size, length)?)))
}

/// # Safety
/// `grid` must come from `ncsms_grid_new` (or be null) and not be used after.
#[no_mangle]
pub unsafe extern "C" fn ncsms_grid_free(grid: *mut NcsmsGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Number of lattice sites, 0 for a null grid.
///
/// # Safety
/// `grid` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ncsms_grid_num_sites(grid: *const NcsmsGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.num_sites())
}

/// Field from `len = 2 * sites * d * d` interleaved doubles.
///
/// # Safety
/// `values` must point to `len` readable doubles; `grid` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ncsms_field_new(
    grid: *const NcsmsGrid,
    d: usize,
    values: *const f64,
    len: usize,
    out: *mut *mut NcsmsField,
) -> NcsmsStatus {
    guard(|| {
        let grid = get(grid, "grid")?.0;
        if values.is_null() {
            return Err(null("values"));
        }
        if !len.is_multiple_of(2) {
            return Err(Fail(NcsmsStatus::ShapeMismatch, "odd number of doubles".into()));
        }
        let raw = std::slice::from_raw_parts(values, len);
        let values = raw.chunks_exact(2).map(|c| C64::new(c[0], c[1])).collect();
        put(out, NcsmsField(MatrixField::from_values(grid, d, values)?))
    })
}

/// # Safety
/// `field` must come from this library (or be null) and not be used after.
#[no_mangle]
pub unsafe extern "C" fn ncsms_field_free(field: *mut NcsmsField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Number of doubles held by the field, 0 for a null field.
///
/// # Safety
/// `field` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ncsms_field_value_count(field: *const NcsmsField) -> usize {
    field.as_ref().map_or(0, |f| 2 * f.0.values().len())
}

/// Matrix dimension `d`, 0 for a null field.
///
/// # Safety
/// `field` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ncsms_field_matrix_dim(field: *const NcsmsField) -> usize {
    field.as_ref().map_or(0, |f| f.0.matrix_dim())
}

/// Copies the interleaved values into `out`.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ncsms_field_copy_values(field: *const NcsmsField, out: *mut f64, len: usize) -> NcsmsStatus {
    guard(|| {
        let field = &get(field, "field")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let needed = 2 * field.values().len();
        if len < needed {
            return Err(Fail(
                NcsmsStatus::BufferTooSmall,
                format!("need {needed} doubles, got {len}"),
            ));
        }
        let dst = std::slice::from_raw_parts_mut(out, needed);
        for (pair, z) in dst.chunks_exact_mut(2).zip(field.values()) {
            pair[0] = z.re;
            pair[1] = z.im;
        }
        Ok(())
    })
}

/// Reads a spatial `.mfld` file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ncsms_field_read(path: *const c_char, out: *mut *mut NcsmsField) -> NcsmsStatus {
    guard(|| {
        let path = path_arg(path)?;
        put(out, NcsmsField(read_mfld(path)?))
    })
}

/// Writes a spatial `.mfld` file.
///
/// # Safety
/// `field` must be live and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ncsms_field_write(field: *const NcsmsField, path: *const c_char) -> NcsmsStatus {
    guard(|| {
        let field = &get(field, "field")?.0;
        write_mfld(field, path_arg(path)?)?;
        Ok(())
    })
}

/// `M_t^alpha f`.
///
/// # Safety
/// `field` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ncsms_spherical_mean(
    field: *const NcsmsField,
    alpha: f64,
    t: f64,
    out: *mut *mut NcsmsField,
) -> NcsmsStatus {
    guard(|| {
        let f = &get(field, "field")?.0;
        put(out, NcsmsField(spherical_mean(f, alpha, t)?))
    })
}

/// `M_{j,t}^alpha f`.
///
/// # Safety
/// `field` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ncsms_dyadic_piece(
    field: *const NcsmsField,
    alpha: f64,
    j: u32,
    t: f64,
    out: *mut *mut NcsmsField,
) -> NcsmsStatus {
    guard(|| {
        let f = &get(field, "field")?.0;
        put(out, NcsmsField(dyadic_piece(f, alpha, j, t)?))
    })
}

/// Empty family of the given kind.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ncsms_family_new(kind: NcsmsFamilyKind, out: *mut *mut NcsmsFamily) -> NcsmsStatus {
    let kind = match kind {
        NcsmsFamilyKind::Positive => FamilyKind::Positive,
        NcsmsFamilyKind::Selfadjoint => FamilyKind::Selfadjoint,
        NcsmsFamilyKind::General => FamilyKind::General,
    };
    guard(|| {
        put(
            out,
            NcsmsFamily {
                kind,
                members: Vec::new(),
            },
        )
    })
}

/// Appends a copy of `field` as the member at parameter `t`.
///
/// # Safety
/// `family` and `field` must be live handles.
#[no_mangle]
pub unsafe extern "C" fn ncsms_family_push(family: *mut NcsmsFamily, t: f64, field: *const NcsmsField) -> NcsmsStatus {
    guard(|| {
        let fam = get_mut(family, "family")?;
        let f = &get(field, "field")?.0;
        fam.members.push((t, f.clone()));
        Ok(())
    })
}

/// # Safety
/// `family` must come from `ncsms_family_new` (or be null) and not be used after.
#[no_mangle]
pub unsafe extern "C" fn ncsms_family_free(family: *mut NcsmsFamily) {
    if !family.is_null() {
        drop(Box::from_raw(family));
    }
}

/// Maximal norm of the family at exponent `p` (pass `INFINITY` for
/// `p = inf`). Positive and self-adjoint families are solved exactly and may
/// return their dominating field through `dominator`; general families get
/// the upper bound and leave `dominator` untouched. `dominator` may be null.
///
/// # Safety
/// `family` must be live; `value` valid; `dominator` valid or null.
#[no_mangle]
pub unsafe extern "C" fn ncsms_maximal_norm(
    family: *const NcsmsFamily,
    p: f64,
    value: *mut f64,
    dominator: *mut *mut NcsmsField,
) -> NcsmsStatus {
    guard(|| {
        let fam = get(family, "family")?;
        if value.is_null() {
            return Err(null("value"));
        }
        let built = MaximalFamily::new(fam.kind, fam.members.clone())?;
        let result = match fam.kind {
            FamilyKind::Positive => Some(maximal_norm_positive(&built, p)?),
            FamilyKind::Selfadjoint => Some(maximal_norm_selfadjoint(&built, p)?),
            FamilyKind::General => {
                *value = maximal_norm_general_upper(&built, p)?;
                None
            }
        };
        if let Some(r) = result {
            *value = r.value;
            if !dominator.is_null() {
                put(dominator, NcsmsField(r.dominator.a))?;
            }
        }
        Ok(())
    })
}

/// `J_nu(r)` for `nu > -1/2`, `r >= 0`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ncsms_bessel_j(nu: f64, r: f64, out: *mut f64) -> NcsmsStatus {
    guard(|| write(out, bessel_j(nu, r)?))
}

/// Radial multiplier `m_hat_alpha(rho)` in dimension `n`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ncsms_m_hat(alpha: f64, n: usize, rho: f64, out: *mut f64) -> NcsmsStatus {
    guard(|| write(out, m_hat(alpha, n, rho)?))
}

/// Smallest admissible `alpha` for dimension `n` and exponent `p`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ncsms_alpha_threshold(n: usize, p: f64, out: *mut f64) -> NcsmsStatus {
    guard(|| {
        if n == 0 || !(p >= 1.0) {
            return Err(Fail(
                NcsmsStatus::InvalidArgument,
                format!("need n >= 1 and p >= 1, got n = {n}, p = {p}"),
            ));
        }
        write(out, alpha_threshold(n, p))
    })
}
