//! C ABI for the drr-gossip simulator.
//!
//! Handles are opaque pointers owned by this library: everything returned
//! through an out-parameter must be released with the matching `_free`
//! function. Calls return a `DrrgStatus`; on any non-`Ok` status a
//! thread-local message is readable via `drrg_last_error_message`. All
//! functions are panic-safe: a Rust panic is reported as
//! `DRRG_STATUS_INTERNAL` instead of unwinding across the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use drr_gossip::error::Error;
use drr_gossip::protocols::{
    run_protocol, DrrMode, ProtocolConfig, ProtocolKind, ProtocolResult, TopologySpec, ValueDist,
};
use drr_gossip::topology::{self, Graph};

/// Status codes mirroring the library's error taxonomy.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrrgStatus {
    Ok = 0,
    InvalidArgument = 1,
    ConstructionFailure = 2,
    InputFormat = 3,
    ModelViolation = 4,
    Usage = 5,
    EmptyInput = 6,
    Io = 7,
    NullPointer = 8,
    Utf8 = 9,
    Internal = 10,
}

/// Protocols runnable through the C API.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrrgProtocol {
    DrrGossipMax = 0,
    DrrGossipAve = 1,
    UniformPushSum = 2,
    DrrOnly = 3,
    LocalDrrOnly = 4,
}

impl DrrgProtocol {
    fn kind(self) -> ProtocolKind {
        match self {
            DrrgProtocol::DrrGossipMax => ProtocolKind::DrrGossipMax,
            DrrgProtocol::DrrGossipAve => ProtocolKind::DrrGossipAve,
            DrrgProtocol::UniformPushSum => ProtocolKind::UniformPushSum,
            DrrgProtocol::DrrOnly => ProtocolKind::DrrOnly,
            DrrgProtocol::LocalDrrOnly => ProtocolKind::LocalDrrOnly,
        }
    }
}

/// Opaque graph handle.
pub struct DrrgGraph {
    inner: Graph,
    spec: TopologySpec,
}

/// Opaque result handle for one finished protocol run.
pub struct DrrgResult {
    inner: ProtocolResult,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> DrrgStatus {
    match err {
        Error::InvalidArgument(_) => DrrgStatus::InvalidArgument,
        Error::ConstructionFailure { .. } => DrrgStatus::ConstructionFailure,
        Error::InputFormat { .. } => DrrgStatus::InputFormat,
        Error::ModelViolation(_) => DrrgStatus::ModelViolation,
        Error::Usage(_) => DrrgStatus::Usage,
        Error::EmptyInput => DrrgStatus::EmptyInput,
        Error::DegenerateRegressor(_) => DrrgStatus::InvalidArgument,
        Error::Io { .. } => DrrgStatus::Io,
    }
}

fn fail(err: Error) -> DrrgStatus {
    set_error(&err.to_string());
    status_of(&err)
}

/// Run `body` with panic containment, storing errors for retrieval.
fn guarded(body: impl FnOnce() -> DrrgStatus) -> DrrgStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            DrrgStatus::Internal
        }
    }
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) -> DrrgStatus {
    if out.is_null() {
        set_error("null out-pointer");
        return DrrgStatus::NullPointer;
    }
    *out = Box::into_raw(Box::new(value));
    DrrgStatus::Ok
}

fn graph_out(
    result: Result<Graph, Error>,
    spec: TopologySpec,
    out: *mut *mut DrrgGraph,
) -> DrrgStatus {
    match result {
        Ok(inner) => unsafe { write_out(out, DrrgGraph { inner, spec }) },
        Err(e) => fail(e),
    }
}

/// Copy the last error message into `buf` (NUL-terminated, truncated to
/// `cap`); returns the full message length excluding the terminator.
///
/// # Safety
/// `buf` must be NULL or point to at least `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn drrg_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            unsafe {
                ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn drrg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Complete graph on `n` nodes.
#[no_mangle]
pub extern "C" fn drrg_graph_complete(n: usize, out: *mut *mut DrrgGraph) -> DrrgStatus {
    guarded(|| {
        graph_out(
            topology::build_complete(n),
            TopologySpec::Complete { n },
            out,
        )
    })
}

/// Random simple d-regular graph, deterministic in `(n, d, seed)`.
#[no_mangle]
pub extern "C" fn drrg_graph_d_regular(
    n: usize,
    d: usize,
    seed: u64,
    out: *mut *mut DrrgGraph,
) -> DrrgStatus {
    guarded(|| {
        graph_out(
            topology::build_d_regular(n, d, seed),
            TopologySpec::DRegular { n, d },
            out,
        )
    })
}

/// Idealized chord ring on `2^bits` nodes.
#[no_mangle]
pub extern "C" fn drrg_graph_chord(bits: u32, out: *mut *mut DrrgGraph) -> DrrgStatus {
    guarded(|| graph_out(topology::build_chord(bits), TopologySpec::Chord { bits }, out))
}

/// Custom graph from a whitespace-separated "u v" edge-list file.
///
/// # Safety
/// `path` must be a valid NUL-terminated string or NULL.
#[no_mangle]
pub unsafe extern "C" fn drrg_graph_from_edge_file(
    path: *const c_char,
    out: *mut *mut DrrgGraph,
) -> DrrgStatus {
    guarded(|| {
        if path.is_null() {
            set_error("null path");
            return DrrgStatus::NullPointer;
        }
        let path = match CStr::from_ptr(path).to_str() {
            Ok(s) => s.to_string(),
            Err(_) => {
                set_error("path is not valid utf-8");
                return DrrgStatus::Utf8;
            }
        };
        graph_out(
            topology::load_adjacency(&path),
            TopologySpec::File { path },
            out,
        )
    })
}

/// # Safety
/// `g` must be a pointer from a `drrg_graph_*` constructor, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn drrg_graph_free(g: *mut DrrgGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `g` must be a live graph handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn drrg_graph_node_count(g: *const DrrgGraph) -> usize {
    if g.is_null() {
        return 0;
    }
    (*g).inner.n()
}

/// # Safety
/// `g` must be a live graph handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn drrg_graph_edge_count(g: *const DrrgGraph) -> u64 {
    if g.is_null() {
        return 0;
    }
    (*g).inner.edge_count()
}

/// Degree of `node`, or -1 if out of range.
///
/// # Safety
/// `g` must be a live graph handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn drrg_graph_degree(g: *const DrrgGraph, node: u32) -> i64 {
    if g.is_null() || (node as usize) >= (*g).inner.n() {
        return -1;
    }
    (*g).inner.degree(topology::NodeId(node)) as i64
}

/// Run one protocol trial on the graph's topology.
///
/// `values_spec` follows the CLI grammar (`uniform:a,b`, `constant:v`,
/// `zipf:s`); pass NULL for the default uniform(0, 1). The ranking mode is
/// inferred from the topology: sampled on complete graphs, local otherwise.
///
/// # Safety
/// `graph` must be a live graph handle; `values_spec` NULL or a valid
/// NUL-terminated string; `out` a valid out-pointer.
#[no_mangle]
pub unsafe extern "C" fn drrg_run(
    graph: *const DrrgGraph,
    protocol: DrrgProtocol,
    delta: f64,
    seed: u64,
    values_spec: *const c_char,
    out: *mut *mut DrrgResult,
) -> DrrgStatus {
    guarded(|| {
        if graph.is_null() {
            set_error("null graph");
            return DrrgStatus::NullPointer;
        }
        let spec = (*graph).spec.clone();
        let mut cfg = ProtocolConfig::new(spec, seed);
        cfg.delta = delta;
        if !values_spec.is_null() {
            let raw = match CStr::from_ptr(values_spec).to_str() {
                Ok(s) => s,
                Err(_) => {
                    set_error("values spec is not valid utf-8");
                    return DrrgStatus::Utf8;
                }
            };
            cfg.values = match ValueDist::parse(raw) {
                Ok(v) => v,
                Err(e) => return fail(e),
            };
        }
        if protocol == DrrgProtocol::DrrOnly {
            cfg.drr_mode = DrrMode::Sampled;
        }
        if protocol == DrrgProtocol::LocalDrrOnly {
            cfg.drr_mode = DrrMode::Local;
        }
        match run_protocol(&cfg, protocol.kind()) {
            Ok(inner) => write_out(out, DrrgResult { inner }),
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `r` must be a pointer from `drrg_run`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn drrg_result_free(r: *mut DrrgResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `r` must be a live result handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn drrg_result_node_count(r: *const DrrgResult) -> usize {
    if r.is_null() {
        return 0;
    }
    (*r).inner.answers.len()
}

/// Final answer at `node`. Returns `InvalidArgument` for nodes that hold no
/// answer (crashed, or a ranking-only protocol).
///
/// # Safety
/// `r` must be a live result handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn drrg_result_answer(
    r: *const DrrgResult,
    node: usize,
    out: *mut f64,
) -> DrrgStatus {
    if r.is_null() || out.is_null() {
        set_error("null pointer");
        return DrrgStatus::NullPointer;
    }
    let answers = &(*r).inner.answers;
    match answers.get(node) {
        Some(Some(v)) => {
            *out = *v;
            DrrgStatus::Ok
        }
        Some(None) => {
            set_error("node holds no answer");
            DrrgStatus::InvalidArgument
        }
        None => {
            set_error("node index out of range");
            DrrgStatus::InvalidArgument
        }
    }
}

/// Ground-truth aggregate, or NaN when the protocol has none.
///
/// # Safety
/// `r` must be a live result handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn drrg_result_oracle(r: *const DrrgResult) -> f64 {
    if r.is_null() {
        return f64::NAN;
    }
    (*r).inner.oracle.unwrap_or(f64::NAN)
}

/// # Safety
/// `r` must be a live result handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn drrg_result_correct(r: *const DrrgResult) -> bool {
    !r.is_null() && (*r).inner.metrics.correct
}

/// Worst per-node relative error, or NaN when no oracle applies.
///
/// # Safety
/// `r` must be a live result handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn drrg_result_max_rel_error(r: *const DrrgResult) -> f64 {
    if r.is_null() {
        return f64::NAN;
    }
    (*r).inner.metrics.max_rel_error.unwrap_or(f64::NAN)
}

/// # Safety
/// `r` must be a live result handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn drrg_result_total_rounds(r: *const DrrgResult) -> u64 {
    if r.is_null() {
        return 0;
    }
    (*r).inner.metrics.total_rounds
}

/// # Safety
/// `r` must be a live result handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn drrg_result_total_messages(r: *const DrrgResult) -> u64 {
    if r.is_null() {
        return 0;
    }
    (*r).inner.metrics.total_msgs_sent
}

/// Full metrics record as a JSON string; free with `drrg_string_free`.
///
/// # Safety
/// `r` must be a live result handle; `out` a valid out-pointer.
#[no_mangle]
pub unsafe extern "C" fn drrg_result_metrics_json(
    r: *const DrrgResult,
    out: *mut *mut c_char,
) -> DrrgStatus {
    guarded(|| {
        if r.is_null() || out.is_null() {
            set_error("null pointer");
            return DrrgStatus::NullPointer;
        }
        match serde_json::to_string(&(*r).inner.metrics) {
            Ok(json) => match CString::new(json) {
                Ok(cstr) => {
                    *out = cstr.into_raw();
                    DrrgStatus::Ok
                }
                Err(_) => {
                    set_error("metrics contained an interior NUL");
                    DrrgStatus::Internal
                }
            },
            Err(e) => {
                set_error(&e.to_string());
                DrrgStatus::Internal
            }
        }
    })
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must be a pointer returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn drrg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
