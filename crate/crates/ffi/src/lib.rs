//! C ABI over `qcurv`: build a potential field from a scenario or density
//! description, then evaluate potentials, derivative stacks and curvature.
//!
//! Every fallible call returns a [`QcStatus`]; on failure the message is
//! available from [`qc_last_error`] on the same thread. Fields are opaque
//! handles released with [`qc_field_free`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::ptr;

use qcurv::config::Scenario;
use qcurv::curvature::point_curvature;
use qcurv::geometry::isoperimetric_ratio;
use qcurv::{build_density, build_field, DensitySpec, Error, PotentialField, QuadConfig};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Contract = 4,
    DimensionMismatch = 5,
    Numerical = 6,
    IncompleteMetric = 7,
    OutOfRange = 8,
    Io = 9,
    Panic = 10,
}

/// Opaque potential field.
pub struct QcField {
    field: PotentialField,
}

/// Scalar entries of the derivative stack.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QcScalars {
    pub u: f64,
    pub lap: f64,
    pub bilap: f64,
}

/// Pointwise curvature. `q4` and `h` are NaN when `n < 6`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QcCurvature {
    pub scalar: f64,
    pub q2: f64,
    pub q4: f64,
    pub qtop: f64,
    pub b: f64,
    pub h: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> QcStatus {
    match e {
        Error::Config(_) | Error::GridBudget { .. } => QcStatus::Config,
        Error::Contract(_) => QcStatus::Contract,
        Error::Quadrature { .. } => QcStatus::Numerical,
        Error::IncompleteMetric { .. } => QcStatus::IncompleteMetric,
        Error::OutOfRange(_) => QcStatus::OutOfRange,
        Error::Io(_) => QcStatus::Io,
    }
}

struct Fail(QcStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

/// Runs `f`, recording failures and converting panics.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> QcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QcStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            QcStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(QcStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Fail(QcStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn field_ref<'a>(h: *const QcField) -> Result<&'a PotentialField, Fail> {
    h.as_ref()
        .map(|h| &h.field)
        .ok_or_else(|| Fail(QcStatus::NullPointer, "field handle is null".into()))
}

unsafe fn point<'a>(f: &PotentialField, x: *const f64, n: usize) -> Result<&'a [f64], Fail> {
    if x.is_null() {
        return Err(Fail(QcStatus::NullPointer, "point is null".into()));
    }
    if n != f.dimension() {
        return Err(Fail(
            QcStatus::DimensionMismatch,
            format!("point has {n} coordinates, field dimension is {}", f.dimension()),
        ));
    }
    Ok(std::slice::from_raw_parts(x, n))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| Fail(QcStatus::NullPointer, format!("{what} is null")))
}

/// Copies `src` into the caller buffer `dst` when it is non-null.
unsafe fn fill(dst: *mut f64, src: &[f64]) {
    if !dst.is_null() {
        ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    }
}

unsafe fn publish(out: *mut *mut QcField, field: PotentialField) -> Result<(), Fail> {
    let slot = out_ref(out, "output handle")?;
    *slot = Box::into_raw(Box::new(QcField { field }));
    Ok(())
}

/// Message of the last failure on this thread, or null. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn qc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn qc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a field from the text of a scenario file. Relative paths in the
/// scenario are irrelevant here; only the density and quadrature are used.
///
/// # Safety
/// `toml_text` must be a NUL-terminated string; `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn qc_field_from_scenario(toml_text: *const c_char, out: *mut *mut QcField) -> QcStatus {
    guard(|| {
        let text = text(toml_text, "scenario text")?;
        let scenario = Scenario::parse(text, "<scenario>", "scenario", PathBuf::from("."))?;
        publish(out, scenario.build_field()?)
    })
}

/// Builds a field from a scenario file on disk.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn qc_field_from_file(path: *const c_char, out: *mut *mut QcField) -> QcStatus {
    guard(|| {
        let path = text(path, "path")?;
        let scenario = Scenario::load(Path::new(path))?;
        publish(out, scenario.build_field()?)
    })
}

/// Builds a field in dimension `n` from the body of a `[density]` table
/// (`alpha_target = ...` and `[[bumps]]` entries) with default quadrature.
///
/// # Safety
/// `density_toml` must be a NUL-terminated string; `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn qc_field_from_density(n: u32, density_toml: *const c_char, out: *mut *mut QcField) -> QcStatus {
    guard(|| {
        let text = text(density_toml, "density text")?;
        let spec: DensitySpec =
            toml::from_str(text).map_err(|e| Fail(QcStatus::Config, format!("density: {}", e.message().trim_end())))?;
        let density = build_density(n as usize, &spec)?;
        publish(out, build_field(density, QuadConfig::default())?)
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `field` must come from a `qc_field_*` constructor and not be used again.
#[no_mangle]
pub unsafe extern "C" fn qc_field_free(field: *mut QcField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Dimension of the field, 0 for a null handle.
///
/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qc_field_dimension(field: *const QcField) -> usize {
    field.as_ref().map_or(0, |f| f.field.dimension())
}

/// Total-curvature normalization alpha, NaN for a null handle.
///
/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qc_field_alpha(field: *const QcField) -> f64 {
    field.as_ref().map_or(f64::NAN, |f| f.field.alpha())
}

/// Potential `u(x)`.
///
/// # Safety
/// `x` must point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qc_eval_u(field: *const QcField, x: *const f64, n: usize, out: *mut f64) -> QcStatus {
    guard(|| {
        let f = field_ref(field)?;
        let x = point(f, x, n)?;
        *out_ref(out, "output")? = f.eval_u(x);
        Ok(())
    })
}

/// Derivative stack at `x`. Array outputs are optional (null skips them):
/// `grad` and `grad_lap` take `n` doubles, `hess` takes `n*n` (row-major).
///
/// # Safety
/// `x` must point to `n` doubles; non-null outputs must have the sizes above.
#[no_mangle]
pub unsafe extern "C" fn qc_eval_stack(
    field: *const QcField,
    x: *const f64,
    n: usize,
    scalars: *mut QcScalars,
    grad: *mut f64,
    hess: *mut f64,
    grad_lap: *mut f64,
) -> QcStatus {
    guard(|| {
        let f = field_ref(field)?;
        let x = point(f, x, n)?;
        let out = out_ref(scalars, "scalars")?;
        let st = f.eval_stack(x);
        *out = QcScalars {
            u: st.u,
            lap: st.lap,
            bilap: st.bilap,
        };
        fill(grad, &st.grad);
        fill(hess, &st.hess);
        fill(grad_lap, &st.grad_lap);
        Ok(())
    })
}

/// Curvature at `x`; `ric_eigs` (optional) takes `n` doubles, descending.
///
/// # Safety
/// `x` must point to `n` doubles; `ric_eigs` must be null or hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn qc_curvature(
    field: *const QcField,
    x: *const f64,
    n: usize,
    out: *mut QcCurvature,
    ric_eigs: *mut f64,
) -> QcStatus {
    guard(|| {
        let f = field_ref(field)?;
        let x = point(f, x, n)?;
        let out = out_ref(out, "curvature")?;
        let pc = point_curvature(f, x);
        *out = QcCurvature {
            scalar: pc.scalar,
            q2: pc.q2,
            q4: pc.q4.unwrap_or(f64::NAN),
            qtop: pc.qtop,
            b: pc.b,
            h: pc.h.unwrap_or(f64::NAN),
        };
        fill(ric_eigs, &pc.ric_eigs);
        Ok(())
    })
}

/// Isoperimetric ratio of the Euclidean ball of radius `r` (radial fields).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qc_iso_ratio(field: *const QcField, r: f64, out: *mut f64) -> QcStatus {
    guard(|| {
        let f = field_ref(field)?;
        *out_ref(out, "output")? = isoperimetric_ratio(f, r)?;
        Ok(())
    })
}
