//! C ABI over the `maslov` crate.
//!
//! Every fallible call returns a [`MaslovStatus`]; on failure the message is kept in a
//! thread-local buffer readable through [`maslov_last_error`]. Objects cross the boundary as
//! opaque handles owned by the caller and released with the matching `*_free` function.
//! Strings returned by the library are released with [`maslov_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use maslov::ambient::AmbientModel;
use maslov::curvature::verify_prop9;
use maslov::lagmesh::{shapes, LagrangianMesh};
use maslov::scenario::{run_scenario, ScenarioConfig};
use maslov::transport::{decompose_connection, relative_connection, DecomposeOptions};
use maslov::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaslovStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed JSON or an invalid model, mesh or scenario description.
    InvalidInput = 3,
    /// A point left the chart or the surface is not Lagrangian.
    Geometry = 4,
    /// The mesh is too coarse for the requested quantity.
    Resolution = 5,
    /// A period sits too close to a half-integer for its integer part to be trusted.
    HalfIntegerBoundary = 6,
    Numerical = 7,
    NotApplicable = 8,
    BufferTooSmall = 9,
    Io = 10,
    Panic = 11,
}

/// Ambient Kahler model.
pub struct MaslovModel(AmbientModel);

/// Discrete Lagrangian loop or torus.
pub struct MaslovMesh(LagrangianMesh);

/// Phase decomposition of a mesh.
pub struct MaslovReport(maslov::transport::MaslovReport);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> MaslovStatus {
    match e {
        Error::ModelConfig(_) | Error::Dimension(_) | Error::Mesh(_) | Error::Json(_) | Error::Cycle(_) => {
            MaslovStatus::InvalidInput
        }
        Error::Domain(_) | Error::NotLagrangian { .. } | Error::StepRejected { .. } => MaslovStatus::Geometry,
        Error::Refinement(_) | Error::UnresolvedMesh { .. } | Error::DegenerateZeroSet(_) => MaslovStatus::Resolution,
        Error::HalfIntegerBoundary { .. } => MaslovStatus::HalfIntegerBoundary,
        Error::Numerical { .. } => MaslovStatus::Numerical,
        Error::UnsupportedModel(_) | Error::NotApplicable(_) | Error::Degree(_) => MaslovStatus::NotApplicable,
        Error::Io(_) => MaslovStatus::Io,
    }
}

enum Failure {
    Status(MaslovStatus, String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> MaslovStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            MaslovStatus::Ok
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Status(s, message))) => {
            set_error(&message);
            s
        }
        Err(_) => {
            set_error("internal panic");
            MaslovStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure::Status(MaslovStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure::Status(MaslovStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = CString::new(s).map_err(|e| Failure::Status(MaslovStatus::InvalidInput, e.to_string()))?.into_raw();
    Ok(())
}

unsafe fn put_scalar<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = value;
    Ok(())
}

unsafe fn fill<T: Copy>(buf: *mut T, len: usize, values: &[T]) -> Result<(), Failure> {
    if len < values.len() {
        return Err(Failure::Status(
            MaslovStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", values.len()),
        ));
    }
    if values.is_empty() {
        return Ok(());
    }
    if buf.is_null() {
        return Err(null("buffer"));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    Ok(())
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn maslov_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn maslov_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse a model such as `{"kind":"round-sphere","params":{"radius":1}}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn maslov_model_from_json(json: *const c_char, out: *mut *mut MaslovModel) -> MaslovStatus {
    guard(|| {
        let model: AmbientModel = serde_json::from_str(text(json, "json")?).map_err(Error::from)?;
        put(out, MaslovModel(model))
    })
}

/// # Safety
/// `model` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn maslov_model_free(model: *mut MaslovModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Circle of radius `r` about `(cx, cy)` traversed `turns` times, with `n` vertices.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn maslov_mesh_circle(
    model: *const MaslovModel,
    cx: f64,
    cy: f64,
    r: f64,
    turns: u32,
    n: usize,
    out: *mut *mut MaslovMesh,
) -> MaslovStatus {
    guard(|| {
        let model = &handle(model, "model")?.0;
        put(out, MaslovMesh(LagrangianMesh::build_loop(model, shapes::circle(cx, cy, r, turns), n)?))
    })
}

/// Latitude circle at polar angle `theta` on a sphere model.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn maslov_mesh_latitude(
    model: *const MaslovModel,
    theta: f64,
    n: usize,
    out: *mut *mut MaslovMesh,
) -> MaslovStatus {
    guard(|| {
        let model = &handle(model, "model")?.0;
        put(out, MaslovMesh(LagrangianMesh::build_loop(model, shapes::latitude(theta), n)?))
    })
}

/// Product of circles of radii `r1`, `r2` in `C^2`, on an `n1 x n2` grid.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn maslov_mesh_product_torus(
    model: *const MaslovModel,
    r1: f64,
    r2: f64,
    n1: usize,
    n2: usize,
    out: *mut *mut MaslovMesh,
) -> MaslovStatus {
    guard(|| {
        let model = &handle(model, "model")?.0;
        put(out, MaslovMesh(LagrangianMesh::build_torus_grid(model, shapes::product_torus(r1, r2), n1, n2)?))
    })
}

/// # Safety
/// `json` must be a NUL-terminated mesh file; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn maslov_mesh_from_json(json: *const c_char, out: *mut *mut MaslovMesh) -> MaslovStatus {
    guard(|| put(out, MaslovMesh(LagrangianMesh::from_json(text(json, "json")?)?)))
}

/// # Safety
/// `mesh` must be a live handle; the string written to `out` is freed with `maslov_string_free`.
#[no_mangle]
pub unsafe extern "C" fn maslov_mesh_to_json(mesh: *const MaslovMesh, out: *mut *mut c_char) -> MaslovStatus {
    guard(|| put_string(out, handle(mesh, "mesh")?.0.to_json()?))
}

/// Vertex count, or 0 for a null handle.
///
/// # Safety
/// `mesh` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn maslov_mesh_num_vertices(mesh: *const MaslovMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.0.num_vertices())
}

/// 1 for loops, 2 for tori, 0 for a null handle.
///
/// # Safety
/// `mesh` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn maslov_mesh_dim(mesh: *const MaslovMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.0.dim())
}

/// # Safety
/// `mesh` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn maslov_mesh_free(mesh: *mut MaslovMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Largest per-edge gap between transport angles and the mean curvature form.
///
/// # Safety
/// `mesh` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn maslov_mesh_connection_residual(mesh: *const MaslovMesh, out: *mut f64) -> MaslovStatus {
    guard(|| put_scalar(out, verify_prop9(&handle(mesh, "mesh")?.0)?.prop9_residual))
}

/// Phase decomposition for the `power`-th power of the determinant bundle.
///
/// # Safety
/// `mesh` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn maslov_decompose(
    mesh: *const MaslovMesh,
    power: u32,
    out: *mut *mut MaslovReport,
) -> MaslovStatus {
    guard(|| {
        let mesh = &handle(mesh, "mesh")?.0;
        let conn = relative_connection(mesh)?;
        let options = DecomposeOptions { power, ..DecomposeOptions::default() };
        put(out, MaslovReport(decompose_connection(mesh, &conn, &options)?))
    })
}

fn report_ref<'a>(report: *const MaslovReport) -> Result<&'a maslov::transport::MaslovReport, Failure> {
    unsafe { handle(report, "report").map(|r| &r.0) }
}

/// Number of homology cycles, or 0 for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn maslov_report_num_cycles(report: *const MaslovReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.maslov.len())
}

/// Copy the Maslov integers into `buf`, which must hold `maslov_report_num_cycles` values.
///
/// # Safety
/// `report` must be a live handle; `buf` must have room for `len` values.
#[no_mangle]
pub unsafe extern "C" fn maslov_report_maslov(report: *const MaslovReport, buf: *mut i64, len: usize) -> MaslovStatus {
    guard(|| fill(buf, len, &report_ref(report)?.maslov))
}

/// Copy the connection periods (radians) into `buf`.
///
/// # Safety
/// `report` must be a live handle; `buf` must have room for `len` values.
#[no_mangle]
pub unsafe extern "C" fn maslov_report_periods(report: *const MaslovReport, buf: *mut f64, len: usize) -> MaslovStatus {
    guard(|| fill(buf, len, &report_ref(report)?.periods))
}

/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn maslov_report_is_special(report: *const MaslovReport, out: *mut bool) -> MaslovStatus {
    guard(|| put_scalar(out, report_ref(report)?.is_special))
}

/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn maslov_report_is_bohr_sommerfeld(report: *const MaslovReport, out: *mut bool) -> MaslovStatus {
    guard(|| put_scalar(out, report_ref(report)?.is_bohr_sommerfeld))
}

/// # Safety
/// `report` must be a live handle; the string written to `out` is freed with `maslov_string_free`.
#[no_mangle]
pub unsafe extern "C" fn maslov_report_to_json(report: *const MaslovReport, out: *mut *mut c_char) -> MaslovStatus {
    guard(|| put_string(out, serde_json::to_string(report_ref(report)?).map_err(Error::from)?))
}

/// # Safety
/// `report` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn maslov_report_free(report: *mut MaslovReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Run a built-in scenario without writing files. `config_json` may be null for defaults.
/// The report JSON goes to `out`; `passed` receives whether every check held.
///
/// # Safety
/// `name` must be a NUL-terminated string, `config_json` null or NUL-terminated, and both
/// output pointers writable.
#[no_mangle]
pub unsafe extern "C" fn maslov_run_scenario(
    name: *const c_char,
    config_json: *const c_char,
    out: *mut *mut c_char,
    passed: *mut bool,
) -> MaslovStatus {
    guard(|| {
        let name = text(name, "name")?;
        let config = if config_json.is_null() {
            ScenarioConfig::default()
        } else {
            ScenarioConfig::from_json(text(config_json, "config")?)?
        };
        let report = run_scenario(name, &config)?;
        put_scalar(passed, report.passed)?;
        put_string(out, report.to_json()?)
    })
}

#[cfg(test)]
mod tests;
