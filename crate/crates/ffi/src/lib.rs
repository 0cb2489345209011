//! C ABI for the pcesolve MaxCut solver.
//!
//! Graphs and solve results are opaque handles owned by the caller and released
//! with their `*_free` function. Every fallible call returns a [`PceStatus`];
//! on failure [`pce_last_error_message`] describes the error for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use pcesolve::encoding::min_qubits;
use pcesolve::experiments::sample_bound;
use pcesolve::graph::{cut_value, parse_graph, Assignment, Edge, Graph, GraphFormat};
use pcesolve::loss::{default_alpha, LossForm};
use pcesolve::solver::{solve, SolveOptions, SolveResult};
use pcesolve::{Error, StopRule, TrainConfig};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PceStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    TooLarge = 4,
    Io = 5,
    BufferTooSmall = 6,
    NotAvailable = 7,
    NonFinite = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PceFormat {
    Gset = 0,
    WeightedList = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PceLossForm {
    Quadratic = 0,
    QuadraticReg = 1,
    Tanh = 2,
    TanhReg = 3,
}

/// Solver settings. Zero `layers`, nonpositive `alpha` and a zero
/// `has_best_known` select the library defaults.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PceSolveOptions {
    pub k: usize,
    pub layers: usize,
    pub alpha: f64,
    pub beta: f64,
    pub loss: PceLossForm,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub stop_window: usize,
    pub stop_threshold: f64,
    pub seed: u64,
    pub shots: u64,
    pub has_best_known: bool,
    pub best_known: f64,
}

pub struct PceGraph(Graph);

pub struct PceSolveResult(SolveResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> PceStatus {
    match e {
        Error::Parse { .. } => PceStatus::Parse,
        Error::TooLarge { .. } | Error::CapacityExceeded { .. } => PceStatus::TooLarge,
        Error::Io(_) => PceStatus::Io,
        Error::NonFinite { .. } => PceStatus::NonFinite,
        _ => PceStatus::InvalidArgument,
    }
}

struct Fail(PceStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(PceStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PceStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PceStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            PceStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    unsafe { out.write(value) };
    Ok(())
}

/// Message of the last failed call on this thread, or null. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn pce_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn pce_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parse a NUL-terminated instance text.
///
/// # Safety
/// `text` must be a valid C string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pce_graph_parse(text: *const c_char, format: PceFormat, out: *mut *mut PceGraph) -> PceStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        let text = unsafe { CStr::from_ptr(text) }
            .to_str()
            .map_err(|_| Fail(PceStatus::Parse, "text is not UTF-8".into()))?;
        let format = match format {
            PceFormat::Gset => GraphFormat::Gset,
            PceFormat::WeightedList => GraphFormat::WeightedList,
        };
        let g = parse_graph(text, format)?;
        unsafe { write_out(out, Box::into_raw(Box::new(PceGraph(g)))) }
    })
}

/// Build a graph from 0-based edge arrays of length `num_edges`.
///
/// # Safety
/// `us`, `vs` and `ws` must each point to `num_edges` readable elements.
#[no_mangle]
pub unsafe extern "C" fn pce_graph_from_edges(
    num_vertices: usize,
    us: *const usize,
    vs: *const usize,
    ws: *const f64,
    num_edges: usize,
    out: *mut *mut PceGraph,
) -> PceStatus {
    guard(|| {
        let edges = if num_edges == 0 {
            Vec::new()
        } else {
            if us.is_null() || vs.is_null() || ws.is_null() {
                return Err(null("edge array"));
            }
            let (us, vs, ws) = unsafe {
                (
                    std::slice::from_raw_parts(us, num_edges),
                    std::slice::from_raw_parts(vs, num_edges),
                    std::slice::from_raw_parts(ws, num_edges),
                )
            };
            (0..num_edges).map(|i| Edge { u: us[i], v: vs[i], w: ws[i] }).collect()
        };
        let g = Graph::new(num_vertices, edges)?;
        unsafe { write_out(out, Box::into_raw(Box::new(PceGraph(g)))) }
    })
}

/// # Safety
/// `g` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pce_graph_free(g: *mut PceGraph) {
    if !g.is_null() {
        drop(unsafe { Box::from_raw(g) });
    }
}

/// # Safety
/// `g` must be a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn pce_graph_num_vertices(g: *const PceGraph, out: *mut usize) -> PceStatus {
    guard(|| unsafe { write_out(out, deref(g, "graph")?.0.num_vertices()) })
}

/// # Safety
/// `g` must be a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn pce_graph_num_edges(g: *const PceGraph, out: *mut usize) -> PceStatus {
    guard(|| unsafe { write_out(out, deref(g, "graph")?.0.num_edges()) })
}

/// Cut value `Σ W(1 − x_i x_j)` of a ±1 assignment of length `len`.
///
/// # Safety
/// `bits` must point to `len` readable bytes.
#[no_mangle]
pub unsafe extern "C" fn pce_cut_value(g: *const PceGraph, bits: *const i8, len: usize, out: *mut f64) -> PceStatus {
    guard(|| {
        let g = unsafe { deref(g, "graph")? };
        if bits.is_null() && len > 0 {
            return Err(null("bits"));
        }
        let bits = if len == 0 { Vec::new() } else { unsafe { std::slice::from_raw_parts(bits, len) }.to_vec() };
        let v = cut_value(&g.0, &Assignment::new(bits)?)?;
        unsafe { write_out(out, v) }
    })
}

/// Smallest `n` with `3·C(n, k) ≥ m`.
#[no_mangle]
pub extern "C" fn pce_min_qubits(m: usize, k: usize) -> usize {
    min_qubits(m, k)
}

#[no_mangle]
pub extern "C" fn pce_default_alpha(n: usize, k: usize) -> f64 {
    default_alpha(n, k)
}

/// # Safety
/// `g` must be a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn pce_sample_bound(
    epsilon: f64,
    delta: f64,
    g: *const PceGraph,
    alpha: f64,
    out: *mut u64,
) -> PceStatus {
    guard(|| {
        let g = unsafe { deref(g, "graph")? };
        unsafe { write_out(out, sample_bound(epsilon, delta, &g.0, alpha)?) }
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pce_solve_options_default(out: *mut PceSolveOptions) -> PceStatus {
    let d = SolveOptions::default();
    let (window, threshold) = match d.train.stop {
        StopRule::Window { window, threshold } => (window, threshold),
        StopRule::Patience { .. } => (StopRule::DEFAULT_WINDOW, StopRule::DEFAULT_THRESHOLD),
    };
    guard(|| unsafe {
        write_out(
            out,
            PceSolveOptions {
                k: d.k,
                layers: 0,
                alpha: 0.0,
                beta: d.beta,
                loss: PceLossForm::TanhReg,
                learning_rate: d.train.learning_rate,
                max_epochs: d.train.max_epochs,
                stop_window: window,
                stop_threshold: threshold,
                seed: d.train.seed,
                shots: d.train.shots,
                has_best_known: false,
                best_known: 0.0,
            },
        )
    })
}

fn options_from(o: &PceSolveOptions) -> SolveOptions {
    SolveOptions {
        k: o.k,
        layers: (o.layers > 0).then_some(o.layers),
        alpha: (o.alpha > 0.0).then_some(o.alpha),
        beta: o.beta,
        form: match o.loss {
            PceLossForm::Quadratic => LossForm::Quadratic,
            PceLossForm::QuadraticReg => LossForm::QuadraticReg,
            PceLossForm::Tanh => LossForm::Tanh,
            PceLossForm::TanhReg => LossForm::TanhReg,
        },
        train: TrainConfig {
            learning_rate: o.learning_rate,
            max_epochs: o.max_epochs,
            stop: StopRule::Window {
                window: o.stop_window,
                threshold: o.stop_threshold,
            },
            seed: o.seed,
            shots: o.shots,
            ..TrainConfig::default()
        },
        best_known: o.has_best_known.then_some(o.best_known),
        exact_reference: true,
    }
}

/// Run the full pipeline.
///
/// # Safety
/// `g` must be a live graph handle, `opts` readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pce_solve(
    g: *const PceGraph,
    opts: *const PceSolveOptions,
    out: *mut *mut PceSolveResult,
) -> PceStatus {
    guard(|| {
        let g = unsafe { deref(g, "graph")? };
        let opts = unsafe { deref(opts, "options")? };
        let res = solve(&g.0, &options_from(opts))?;
        unsafe { write_out(out, Box::into_raw(Box::new(PceSolveResult(res)))) }
    })
}

/// # Safety
/// `r` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pce_result_free(r: *mut PceSolveResult) {
    if !r.is_null() {
        drop(unsafe { Box::from_raw(r) });
    }
}

/// # Safety
/// `r` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn pce_result_cut(r: *const PceSolveResult, out: *mut f64) -> PceStatus {
    guard(|| unsafe { write_out(out, deref(r, "result")?.0.cut) })
}

/// Ratio against the supplied best-known cut; `NotAvailable` if none was given.
///
/// # Safety
/// `r` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn pce_result_ratio(r: *const PceSolveResult, out: *mut f64) -> PceStatus {
    guard(|| {
        let ratio = unsafe { deref(r, "result")? }.0.ratio;
        let v = ratio.ok_or_else(|| Fail(PceStatus::NotAvailable, "no best-known value was supplied".into()))?;
        unsafe { write_out(out, v) }
    })
}

/// Ratio against the brute-force optimum; `NotAvailable` for large graphs.
///
/// # Safety
/// `r` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn pce_result_ratio_exact(r: *const PceSolveResult, out: *mut f64) -> PceStatus {
    guard(|| {
        let ratio = unsafe { deref(r, "result")? }.0.ratio_exact;
        let v = ratio.ok_or_else(|| Fail(PceStatus::NotAvailable, "graph too large for the exact optimum".into()))?;
        unsafe { write_out(out, v) }
    })
}

/// # Safety
/// `r` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn pce_result_epochs(r: *const PceSolveResult, out: *mut usize) -> PceStatus {
    guard(|| unsafe { write_out(out, deref(r, "result")?.0.epochs) })
}

/// Copy the ±1 assignment into `buf`; `BufferTooSmall` if `len` is under the vertex count.
///
/// # Safety
/// `buf` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn pce_result_assignment(r: *const PceSolveResult, buf: *mut i8, len: usize) -> PceStatus {
    guard(|| {
        let bits = unsafe { deref(r, "result")? }.0.x_star.as_slice();
        if len < bits.len() {
            return Err(Fail(
                PceStatus::BufferTooSmall,
                format!("buffer holds {len} entries but the assignment has {}", bits.len()),
            ));
        }
        if bits.is_empty() {
            return Ok(());
        }
        if buf.is_null() {
            return Err(null("buffer"));
        }
        unsafe { std::ptr::copy_nonoverlapping(bits.as_ptr(), buf, bits.len()) };
        Ok(())
    })
}
