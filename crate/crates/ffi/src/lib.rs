//! C ABI over `meandist`.
//!
//! Graphs live behind the opaque [`MdGraph`] handle. Every fallible call
//! returns an [`MdStatus`] and writes its result through an out pointer; on
//! failure the message is available from [`md_last_error_message`] until the
//! next call on the same thread. Strings returned by the library must be
//! released with [`md_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use meandist::distance::GraphMetric;
use meandist::error::Error;
use meandist::io::{graph_from_json, graph_to_json, to_report_json};
use meandist::mean::{rho_at_point, rho_exact};
use meandist::report::{analyze, AnalyzeOptions};
use meandist::spectral::{dirichlet_eigenvalue, spectral_gap, SpectralOptions, SpectralResult};
use meandist::MetricGraph;

/// Opaque graph handle.
pub struct MdGraph {
    graph: MetricGraph,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidJson = 3,
    InvalidGraph = 4,
    UnknownId = 5,
    InvalidPoint = 6,
    InvalidArgument = 7,
    NoConvergence = 8,
    Panic = 9,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> MdStatus {
    match e {
        Error::Json(_) => MdStatus::InvalidJson,
        Error::InvalidGraph(_) => MdStatus::InvalidGraph,
        Error::UnknownVertex(_) | Error::UnknownEdge(_) => MdStatus::UnknownId,
        Error::InvalidPoint(_) | Error::OffsetOutOfRange { .. } => MdStatus::InvalidPoint,
        Error::NoConvergence { .. } => MdStatus::NoConvergence,
        _ => MdStatus::InvalidArgument,
    }
}

struct Fail(MdStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MdStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MdStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            MdStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(MdStatus::NullPointer, format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(MdStatus::InvalidUtf8, format!("`{name}` is not UTF-8")))
}

unsafe fn graph_arg<'a>(g: *const MdGraph) -> Result<&'a MetricGraph, Fail> {
    g.as_ref()
        .map(|h| &h.graph)
        .ok_or_else(|| Fail(MdStatus::NullPointer, "graph handle is null".into()))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(MdStatus::NullPointer, "output pointer is null".into()));
    }
    out.write(value);
    Ok(())
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s).expect("no interior NUL in JSON").into_raw()
}

/// Message of the last failed call on this thread, or NULL. Owned by the
/// library; valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn md_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses and validates a graph in the JSON graph format.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn md_graph_from_json(json: *const c_char, out: *mut *mut MdGraph) -> MdStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        let graph = graph_from_json(text)?;
        write_out(out, Box::into_raw(Box::new(MdGraph { graph })))
    })
}

/// Releases a handle; NULL is ignored.
///
/// # Safety
/// `g` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn md_graph_free(g: *mut MdGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Canonical JSON of the graph; free with [`md_string_free`].
///
/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn md_graph_to_json(g: *const MdGraph, out: *mut *mut c_char) -> MdStatus {
    guard(|| {
        let g = graph_arg(g)?;
        write_out(out, to_c_string(graph_to_json(g)))
    })
}

/// Releases a string returned by the library; NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn md_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Vertex count, or 0 for NULL.
///
/// # Safety
/// `g` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn md_graph_vertex_count(g: *const MdGraph) -> usize {
    g.as_ref().map_or(0, |h| h.graph.vertex_count())
}

/// Edge count, or 0 for NULL.
///
/// # Safety
/// `g` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn md_graph_edge_count(g: *const MdGraph) -> usize {
    g.as_ref().map_or(0, |h| h.graph.edge_count())
}

/// Total length, or NaN for NULL.
///
/// # Safety
/// `g` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn md_graph_total_length(g: *const MdGraph) -> f64 {
    g.as_ref().map_or(f64::NAN, |h| h.graph.total_length())
}

/// Exact mean distance.
///
/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn md_rho(g: *const MdGraph, out: *mut f64) -> MdStatus {
    guard(|| {
        let g = graph_arg(g)?;
        write_out(out, rho_exact(&GraphMetric::new(g), false).rho)
    })
}

/// Exact diameter.
///
/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn md_diameter(g: *const MdGraph, out: *mut f64) -> MdStatus {
    guard(|| {
        let g = graph_arg(g)?;
        write_out(out, GraphMetric::new(g).diameter())
    })
}

/// Mean distance function at a point `edgeId:offset`.
///
/// # Safety
/// `g` must be a live handle; `point` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn md_rho_at_point(g: *const MdGraph, point: *const c_char, out: *mut f64) -> MdStatus {
    guard(|| {
        let g = graph_arg(g)?;
        let x = g.parse_point(str_arg(point, "point")?)?;
        write_out(out, rho_at_point(&GraphMetric::new(g), x))
    })
}

/// Distance between two points given as `edgeId:offset`.
///
/// # Safety
/// `g` must be a live handle; `from`, `to` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn md_point_distance(
    g: *const MdGraph,
    from: *const c_char,
    to: *const c_char,
    out: *mut f64,
) -> MdStatus {
    guard(|| {
        let g = graph_arg(g)?;
        let x = g.parse_point(str_arg(from, "from")?)?;
        let y = g.parse_point(str_arg(to, "to")?)?;
        write_out(out, GraphMetric::new(g).point_distance(x, y))
    })
}

unsafe fn write_spectral(r: SpectralResult, value: *mut f64, error_estimate: *mut f64) -> Result<(), Fail> {
    write_out(value, r.value)?;
    if !error_estimate.is_null() {
        error_estimate.write(r.error_estimate);
    }
    Ok(())
}

/// Spectral gap with relative tolerance `tol`. `error_estimate` may be NULL.
///
/// # Safety
/// `g` must be a live handle; `value` writable; `error_estimate` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn md_spectral_gap(
    g: *const MdGraph,
    tol: f64,
    value: *mut f64,
    error_estimate: *mut f64,
) -> MdStatus {
    guard(|| {
        let g = graph_arg(g)?;
        let r = spectral_gap(g, &SpectralOptions::with_tol(tol))?;
        write_spectral(r, value, error_estimate)
    })
}

/// First eigenvalue with a Dirichlet condition at `vertex`.
///
/// # Safety
/// `g` must be a live handle; `vertex` NUL-terminated; `value` writable;
/// `error_estimate` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn md_dirichlet_eigenvalue(
    g: *const MdGraph,
    vertex: *const c_char,
    tol: f64,
    value: *mut f64,
    error_estimate: *mut f64,
) -> MdStatus {
    guard(|| {
        let g = graph_arg(g)?;
        let v = str_arg(vertex, "vertex")?;
        let r = dirichlet_eigenvalue(g, v, &SpectralOptions::with_tol(tol))?;
        write_spectral(r, value, error_estimate)
    })
}

/// Full analysis report as JSON; free with [`md_string_free`]. Spectral
/// non-convergence is reported inside the JSON, not as a status.
///
/// # Safety
/// `g` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn md_analyze_json(
    g: *const MdGraph,
    tol: f64,
    mc_samples: u64,
    seed: u64,
    out: *mut *mut c_char,
) -> MdStatus {
    guard(|| {
        let g = graph_arg(g)?;
        if !(tol > 0.0) {
            return Err(Fail(MdStatus::InvalidArgument, format!("tol must be positive, got {tol}")));
        }
        let opts = AnalyzeOptions { tol, mc_samples, seed, timings: false };
        let text = to_report_json(&analyze(g, &opts))?;
        write_out(out, to_c_string(text))
    })
}
