//! C ABI over the latnet toolkit: opaque handles, status codes, and a
//! thread-local last-error message. Every entry point catches panics and
//! never unwinds across the boundary.
//!
//! Ownership: constructors hand out `*mut` handles that the caller must
//! release with the matching `latnet_*_free`; all other functions borrow.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use latnet::connectivity::{classify, ManifestGraph};
use latnet::error::Error;
use latnet::io;
use latnet::lsar::{lsar_fit, lsar_fit_regularized, r_squared, RegularizationConfig};
use latnet::netgen::{gen_erdos_renyi, gen_ring, stability_report, PartitionedNetwork};
use latnet::simulate::{simulate_with_burn_in, TimeSeriesData};
use latnet::spectral::{ar_tf, hinf_distance, hinf_norm, manifest_tf, optimal_ar, ARModel};

/// Result codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatnetStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DataFormat = 3,
    Singular = 4,
    NumericOverflow = 5,
    UndefinedRatio = 6,
    Io = 7,
    InvalidUtf8 = 8,
    Internal = 9,
}

/// Opaque handle to a partitioned ground-truth network.
pub struct LatnetNetwork(PartitionedNetwork);

/// Opaque handle to a manifest time-series record.
pub struct LatnetTimeSeries(TimeSeriesData);

/// Opaque handle to an AR model.
pub struct LatnetModel(ARModel);

/// Opaque handle to a classified manifest interaction graph.
pub struct LatnetGraph(ManifestGraph);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> LatnetStatus {
    match err {
        Error::InvalidArgument(_) => LatnetStatus::InvalidArgument,
        Error::DataFormat(_) => LatnetStatus::DataFormat,
        Error::SingularAt { .. } => LatnetStatus::Singular,
        Error::NumericOverflow { .. } => LatnetStatus::NumericOverflow,
        Error::UndefinedRatio(_) => LatnetStatus::UndefinedRatio,
        Error::Io(_) => LatnetStatus::Io,
    }
}

fn guard<F>(f: F) -> LatnetStatus
where
    F: FnOnce() -> LatnetStatus,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_last_error(&format!("internal panic: {msg}"));
            LatnetStatus::Internal
        }
    }
}

fn fail(err: Error) -> LatnetStatus {
    set_last_error(&err.to_string());
    status_of(&err)
}

/// # Safety
/// `ptr` must be a valid NUL-terminated string.
unsafe fn path_arg(ptr: *const c_char) -> Result<PathBuf, LatnetStatus> {
    if ptr.is_null() {
        set_last_error("null path");
        return Err(LatnetStatus::NullPointer);
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => {
            set_last_error("path is not valid UTF-8");
            Err(LatnetStatus::InvalidUtf8)
        }
    }
}

unsafe fn borrow<'a, T>(ptr: *const T) -> Result<&'a T, LatnetStatus> {
    if ptr.is_null() {
        set_last_error("null handle");
        Err(LatnetStatus::NullPointer)
    } else {
        Ok(&*ptr)
    }
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> LatnetStatus {
    if out.is_null() {
        set_last_error("null output pointer");
        return LatnetStatus::NullPointer;
    }
    *out = Box::into_raw(Box::new(value));
    LatnetStatus::Ok
}

unsafe fn store<T>(out: *mut T, value: T) -> Result<(), LatnetStatus> {
    if out.is_null() {
        set_last_error("null output pointer");
        return Err(LatnetStatus::NullPointer);
    }
    *out = value;
    Ok(())
}

/// Message describing the most recent failure on this thread. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn latnet_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Builds a directed ring network. `manifest` points at `manifest_len`
/// 1-based node indices.
///
/// # Safety
/// `manifest` must reference `manifest_len` readable elements; `out` must
/// be a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn latnet_network_ring(
    n: usize,
    edge_weight: f64,
    self_loop: f64,
    manifest: *const usize,
    manifest_len: usize,
    out: *mut *mut LatnetNetwork,
) -> LatnetStatus {
    guard(|| {
        if manifest.is_null() {
            set_last_error("null manifest index list");
            return LatnetStatus::NullPointer;
        }
        let indices = std::slice::from_raw_parts(manifest, manifest_len);
        match gen_ring(n, edge_weight, self_loop, indices) {
            Ok(net) => emit(out, LatnetNetwork(net)),
            Err(e) => fail(e),
        }
    })
}

/// Builds a seeded weighted Erdős–Rényi network.
///
/// # Safety
/// `out` must be a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn latnet_network_erdos_renyi(
    n: usize,
    p: f64,
    w_min: f64,
    w_max: f64,
    n_manifest: usize,
    seed: u64,
    out: *mut *mut LatnetNetwork,
) -> LatnetStatus {
    guard(|| match gen_erdos_renyi(n, p, w_min, w_max, n_manifest, seed) {
        Ok(net) => emit(out, LatnetNetwork(net)),
        Err(e) => fail(e),
    })
}

/// Reads a network JSON file.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn latnet_network_read_json(
    path: *const c_char,
    out: *mut *mut LatnetNetwork,
) -> LatnetStatus {
    guard(|| {
        let p = match path_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match io::read_network_json(&p) {
            Ok(net) => emit(out, LatnetNetwork(net)),
            Err(e) => fail(e),
        }
    })
}

/// Writes a network to a JSON file.
///
/// # Safety
/// `net` must be a live handle; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn latnet_network_write_json(
    net: *const LatnetNetwork,
    path: *const c_char,
) -> LatnetStatus {
    guard(|| {
        let net = match borrow(net) {
            Ok(n) => n,
            Err(s) => return s,
        };
        let p = match path_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match io::write_network_json(&net.0, &p) {
            Ok(()) => LatnetStatus::Ok,
            Err(e) => fail(e),
        }
    })
}

/// Manifest and latent node counts.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn latnet_network_counts(
    net: *const LatnetNetwork,
    out_n_m: *mut usize,
    out_n_l: *mut usize,
) -> LatnetStatus {
    guard(|| {
        let net = match borrow(net) {
            Ok(n) => n,
            Err(s) => return s,
        };
        if let Err(s) = store(out_n_m, net.0.n_m()) {
            return s;
        }
        if let Err(s) = store(out_n_l, net.0.n_l()) {
            return s;
        }
        LatnetStatus::Ok
    })
}

/// Spectral radii of the full matrix and of the latent block, with the
/// Schur-stability flags they imply.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn latnet_network_stability(
    net: *const LatnetNetwork,
    out_rho_full: *mut f64,
    out_rho_latent: *mut f64,
    out_stable: *mut bool,
    out_latent_stable: *mut bool,
) -> LatnetStatus {
    guard(|| {
        let net = match borrow(net) {
            Ok(n) => n,
            Err(s) => return s,
        };
        let rep = stability_report(&net.0);
        for r in [
            store(out_rho_full, rep.rho_full),
            store(out_rho_latent, rep.rho_latent),
            store(out_stable, rep.stable),
            store(out_latent_stable, rep.latent_stable),
        ] {
            if let Err(s) = r {
                return s;
            }
        }
        LatnetStatus::Ok
    })
}

/// Releases a network handle. Null is ignored.
///
/// # Safety
/// `net` must have come from this library and not been freed before.
#[no_mangle]
pub unsafe extern "C" fn latnet_network_free(net: *mut LatnetNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Simulates `n` samples under seeded white Gaussian manifest input,
/// after discarding `burn_in` leading steps.
///
/// # Safety
/// `net` must be a live handle; `out` must be a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn latnet_simulate(
    net: *const LatnetNetwork,
    n: usize,
    seed: u64,
    burn_in: usize,
    out: *mut *mut LatnetTimeSeries,
) -> LatnetStatus {
    guard(|| {
        let net = match borrow(net) {
            Ok(v) => v,
            Err(s) => return s,
        };
        match simulate_with_burn_in(&net.0, n, seed, None, burn_in) {
            Ok(ts) => emit(out, LatnetTimeSeries(ts)),
            Err(e) => fail(e),
        }
    })
}

/// Reads a time-series CSV file (input columns optional).
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn latnet_timeseries_read_csv(
    path: *const c_char,
    out: *mut *mut LatnetTimeSeries,
) -> LatnetStatus {
    guard(|| {
        let p = match path_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match io::read_timeseries_csv(&p) {
            Ok(ts) => emit(out, LatnetTimeSeries(ts)),
            Err(e) => fail(e),
        }
    })
}

/// Writes a record to a time-series CSV file.
///
/// # Safety
/// `ts` must be a live handle; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn latnet_timeseries_write_csv(
    ts: *const LatnetTimeSeries,
    path: *const c_char,
) -> LatnetStatus {
    guard(|| {
        let ts = match borrow(ts) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let p = match path_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match io::write_timeseries_csv(&ts.0, &p) {
            Ok(()) => LatnetStatus::Ok,
            Err(e) => fail(e),
        }
    })
}

/// Channel count and sample count of a record.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn latnet_timeseries_dims(
    ts: *const LatnetTimeSeries,
    out_channels: *mut usize,
    out_samples: *mut usize,
) -> LatnetStatus {
    guard(|| {
        let ts = match borrow(ts) {
            Ok(v) => v,
            Err(s) => return s,
        };
        if let Err(s) = store(out_channels, ts.0.n_m()) {
            return s;
        }
        if let Err(s) = store(out_samples, ts.0.len()) {
            return s;
        }
        LatnetStatus::Ok
    })
}

/// Releases a time-series handle. Null is ignored.
///
/// # Safety
/// `ts` must have come from this library and not been freed before.
#[no_mangle]
pub unsafe extern "C" fn latnet_timeseries_free(ts: *mut LatnetTimeSeries) {
    if !ts.is_null() {
        drop(Box::from_raw(ts));
    }
}

/// The optimal AR sequence of a known network at the given order.
///
/// # Safety
/// `net` must be a live handle; `out` must be a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn latnet_optimal_ar(
    net: *const LatnetNetwork,
    tau: usize,
    out: *mut *mut LatnetModel,
) -> LatnetStatus {
    guard(|| {
        let net = match borrow(net) {
            Ok(v) => v,
            Err(s) => return s,
        };
        if tau == 0 {
            set_last_error("model order must be at least 1");
            return LatnetStatus::InvalidArgument;
        }
        emit(out, LatnetModel(optimal_ar(&net.0, tau)))
    })
}

/// Least-squares AR fit of a record at the given order.
///
/// # Safety
/// `ts` must be a live handle; `out` must be a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn latnet_lsar_fit(
    ts: *const LatnetTimeSeries,
    tau: usize,
    out: *mut *mut LatnetModel,
) -> LatnetStatus {
    guard(|| {
        let ts = match borrow(ts) {
            Ok(v) => v,
            Err(s) => return s,
        };
        match lsar_fit(&ts.0, tau) {
            Ok(m) => emit(out, LatnetModel(m)),
            Err(e) => fail(e),
        }
    })
}

/// Exponentially regularized AR fit.
///
/// # Safety
/// `ts` must be a live handle; `out` must be a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn latnet_lsar_fit_regularized(
    ts: *const LatnetTimeSeries,
    tau: usize,
    gamma: f64,
    rho0: f64,
    out: *mut *mut LatnetModel,
) -> LatnetStatus {
    guard(|| {
        let ts = match borrow(ts) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let cfg = match RegularizationConfig::new(gamma, rho0) {
            Ok(c) => c,
            Err(e) => return fail(e),
        };
        match lsar_fit_regularized(&ts.0, tau, &cfg) {
            Ok(m) => emit(out, LatnetModel(m)),
            Err(e) => fail(e),
        }
    })
}

/// Reads an AR model JSON file.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn latnet_model_read_json(
    path: *const c_char,
    out: *mut *mut LatnetModel,
) -> LatnetStatus {
    guard(|| {
        let p = match path_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match io::read_armodel_json(&p) {
            Ok(m) => emit(out, LatnetModel(m)),
            Err(e) => fail(e),
        }
    })
}

/// Writes an AR model to a JSON file.
///
/// # Safety
/// `model` must be a live handle; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn latnet_model_write_json(
    model: *const LatnetModel,
    path: *const c_char,
) -> LatnetStatus {
    guard(|| {
        let model = match borrow(model) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let p = match path_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match io::write_armodel_json(&model.0, &p) {
            Ok(()) => LatnetStatus::Ok,
            Err(e) => fail(e),
        }
    })
}

/// Manifest dimension and order of a model.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn latnet_model_dims(
    model: *const LatnetModel,
    out_n_m: *mut usize,
    out_tau: *mut usize,
) -> LatnetStatus {
    guard(|| {
        let model = match borrow(model) {
            Ok(v) => v,
            Err(s) => return s,
        };
        if let Err(s) = store(out_n_m, model.0.dim()) {
            return s;
        }
        if let Err(s) = store(out_tau, model.0.order()) {
            return s;
        }
        LatnetStatus::Ok
    })
}

/// Coefficient `(row, col)` of the order-`order` block.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn latnet_model_coefficient(
    model: *const LatnetModel,
    order: usize,
    row: usize,
    col: usize,
    out: *mut f64,
) -> LatnetStatus {
    guard(|| {
        let model = match borrow(model) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let n_m = model.0.dim();
        if order >= model.0.order() || row >= n_m || col >= n_m {
            set_last_error("coefficient index out of range");
            return LatnetStatus::InvalidArgument;
        }
        match store(out, model.0.mats()[order][(row, col)]) {
            Ok(()) => LatnetStatus::Ok,
            Err(s) => s,
        }
    })
}

/// Releases a model handle. Null is ignored.
///
/// # Safety
/// `model` must have come from this library and not been freed before.
#[no_mangle]
pub unsafe extern "C" fn latnet_model_free(model: *mut LatnetModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// H-infinity distance between a model's transfer function and the
/// manifest transfer function of a network.
///
/// # Safety
/// Handles must be live; `out` must be a writable slot.
#[no_mangle]
pub unsafe extern "C" fn latnet_hinf_fit_error(
    model: *const LatnetModel,
    net: *const LatnetNetwork,
    grid_size: usize,
    out: *mut f64,
) -> LatnetStatus {
    guard(|| {
        let model = match borrow(model) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let net = match borrow(net) {
            Ok(v) => v,
            Err(s) => return s,
        };
        match hinf_distance(&ar_tf(&model.0), &manifest_tf(&net.0), grid_size) {
            Ok(v) => match store(out, v) {
                Ok(()) => LatnetStatus::Ok,
                Err(s) => s,
            },
            Err(e) => fail(e),
        }
    })
}

/// H-infinity norm of the manifest transfer function.
///
/// # Safety
/// `net` must be a live handle; `out` must be a writable slot.
#[no_mangle]
pub unsafe extern "C" fn latnet_manifest_hinf_norm(
    net: *const LatnetNetwork,
    grid_size: usize,
    out: *mut f64,
) -> LatnetStatus {
    guard(|| {
        let net = match borrow(net) {
            Ok(v) => v,
            Err(s) => return s,
        };
        match hinf_norm(&manifest_tf(&net.0), grid_size) {
            Ok(v) => match store(out, v) {
                Ok(()) => LatnetStatus::Ok,
                Err(s) => s,
            },
            Err(e) => fail(e),
        }
    })
}

/// One-step prediction quality of a model on a holdout record.
///
/// # Safety
/// Handles must be live; `out` must be a writable slot.
#[no_mangle]
pub unsafe extern "C" fn latnet_r_squared(
    model: *const LatnetModel,
    holdout: *const LatnetTimeSeries,
    out: *mut f64,
) -> LatnetStatus {
    guard(|| {
        let model = match borrow(model) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let ts = match borrow(holdout) {
            Ok(v) => v,
            Err(s) => return s,
        };
        match r_squared(&model.0, &ts.0) {
            Ok(v) => match store(out, v) {
                Ok(()) => LatnetStatus::Ok,
                Err(s) => s,
            },
            Err(e) => fail(e),
        }
    })
}

/// Classifies manifest pairs with the proportional threshold rule.
///
/// # Safety
/// `model` must be a live handle; `out` must be a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn latnet_classify(
    model: *const LatnetModel,
    alpha: f64,
    out: *mut *mut LatnetGraph,
) -> LatnetStatus {
    guard(|| {
        let model = match borrow(model) {
            Ok(v) => v,
            Err(s) => return s,
        };
        match classify(&model.0, alpha) {
            Ok(g) => emit(out, LatnetGraph(g)),
            Err(e) => fail(e),
        }
    })
}

/// Writes a classified graph as JSON (adjacency lists with orders).
///
/// # Safety
/// `graph` must be a live handle; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn latnet_graph_write_json(
    graph: *const LatnetGraph,
    path: *const c_char,
) -> LatnetStatus {
    guard(|| {
        let graph = match borrow(graph) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let p = match path_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match io::write_graph_json(&graph.0, &p) {
            Ok(()) => LatnetStatus::Ok,
            Err(e) => fail(e),
        }
    })
}

/// Writes the plot-ready `src,dst,kind,weight_or_order` edge list.
///
/// # Safety
/// `graph` must be a live handle; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn latnet_graph_write_edge_csv(
    graph: *const LatnetGraph,
    path: *const c_char,
) -> LatnetStatus {
    guard(|| {
        let graph = match borrow(graph) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let p = match path_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match io::write_graph_edge_csv(&graph.0, &p) {
            Ok(()) => LatnetStatus::Ok,
            Err(e) => fail(e),
        }
    })
}

/// Number of direct edges and indirect pairs in a classified graph.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn latnet_graph_counts(
    graph: *const LatnetGraph,
    out_direct: *mut usize,
    out_indirect: *mut usize,
) -> LatnetStatus {
    guard(|| {
        let graph = match borrow(graph) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let n_m = graph.0.n_m();
        let direct = (0..n_m)
            .flat_map(|q| (0..n_m).map(move |p| (q, p)))
            .filter(|&(q, p)| graph.0.has_direct(q, p))
            .count();
        let indirect = graph.0.indirect_pairs().len();
        if let Err(s) = store(out_direct, direct) {
            return s;
        }
        if let Err(s) = store(out_indirect, indirect) {
            return s;
        }
        LatnetStatus::Ok
    })
}

/// Releases a graph handle. Null is ignored.
///
/// # Safety
/// `graph` must have come from this library and not been freed before.
#[no_mangle]
pub unsafe extern "C" fn latnet_graph_free(graph: *mut LatnetGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}
