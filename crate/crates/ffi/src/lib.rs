//! C ABI over the `hiercp` library.
//!
//! Every fallible function returns an [`HcpStatus`]; on failure the message
//! is kept per thread and read with [`hcp_last_error_message`]. Objects are
//! opaque handles created by the library and released with the matching
//! `*_free` function. Results are written through out-pointers, which are
//! left untouched on failure.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use hiercp::sampler::{self, consensus, GroupAddition, SampleRecord};
use hiercp::{Error, GroupAssignment, JTable, Mode, SamplerConfig, TemporalNetwork};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HcpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Validation = 4,
    Io = 5,
    Config = 6,
    Internal = 7,
    Panic = 8,
}

pub struct HcpNetwork(TemporalNetwork);

pub struct HcpSamples(Vec<SampleRecord>);

pub struct HcpAssignment(GroupAssignment);

pub const HCP_MODE_MAIN: u32 = 0;
pub const HCP_MODE_FIXED_K: u32 = 1;
pub const HCP_MODE_NO_MULTI_NODE: u32 = 2;

/// Sampler settings; start from [`hcp_sampler_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct HcpSamplerConfig {
    pub steps: u64,
    pub runs: u32,
    pub init_k: u32,
    pub multi_node_prob: f64,
    pub thin: u64,
    pub seed: u64,
    pub k_max: u32,
    /// One of the `HCP_MODE_*` constants.
    pub mode: u32,
    /// Nonzero to draw multi-node layers from the second layer onward.
    pub restrict_multi_node_layer1: u8,
    pub burn_in: u64,
    /// Nonzero to take every group-addition branch without a layer draw.
    pub ungated_group_addition: u8,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> HcpStatus {
    match e {
        Error::Parse { .. } | Error::Json(_) => HcpStatus::Parse,
        Error::Range { .. }
        | Error::Validation(_)
        | Error::DimensionMismatch(_)
        | Error::Empty(_) => HcpStatus::Validation,
        Error::Io { .. } => HcpStatus::Io,
        Error::Config(_) | Error::StateSpaceTooLarge { .. } => HcpStatus::Config,
        _ => HcpStatus::Internal,
    }
}

fn fail(status: HcpStatus, msg: impl Into<String>) -> HcpStatus {
    set_last_error(msg);
    status
}

/// Runs `f`, converting errors and panics into a status and message.
fn guard(f: impl FnOnce() -> Result<(), HcpStatus>) -> HcpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            HcpStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => fail(HcpStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: hiercp::Result<T>) -> Result<T, HcpStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn path_arg(path: *const c_char) -> Result<PathBuf, HcpStatus> {
    if path.is_null() {
        return Err(fail(HcpStatus::NullPointer, "path is null"));
    }
    let s = CStr::from_ptr(path)
        .to_str()
        .map_err(|_| fail(HcpStatus::InvalidArgument, "path is not valid UTF-8"))?;
    Ok(PathBuf::from(s))
}

unsafe fn obj<'a, T>(p: *const T, what: &str) -> Result<&'a T, HcpStatus> {
    p.as_ref()
        .ok_or_else(|| fail(HcpStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out<T>(p: *mut T, value: T) -> Result<(), HcpStatus> {
    if p.is_null() {
        return Err(fail(HcpStatus::NullPointer, "output pointer is null"));
    }
    p.write(value);
    Ok(())
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn hcp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hcp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hcp_network_load(
    path: *const c_char,
    out_net: *mut *mut HcpNetwork,
) -> HcpStatus {
    guard(|| {
        let path = path_arg(path)?;
        let net = lift(TemporalNetwork::load(path))?;
        out(out_net, Box::into_raw(Box::new(HcpNetwork(net))))
    })
}

/// Builds a network from `edge_count` triples `(layer, i, j)` stored
/// contiguously in `edges`.
///
/// # Safety
/// `edges` must point to `3 * edge_count` readable values (or be null when
/// `edge_count` is 0); `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hcp_network_from_edges(
    n: usize,
    layers: usize,
    edges: *const u32,
    edge_count: usize,
    out_net: *mut *mut HcpNetwork,
) -> HcpStatus {
    guard(|| {
        let triples: &[u32] = if edge_count == 0 {
            &[]
        } else if edges.is_null() {
            return Err(fail(HcpStatus::NullPointer, "edges is null"));
        } else {
            std::slice::from_raw_parts(edges, 3 * edge_count)
        };
        let net = lift(TemporalNetwork::from_edges(
            n,
            layers,
            triples
                .chunks_exact(3)
                .map(|t| (t[0] as usize, t[1] as usize, t[2] as usize)),
        ))?;
        out(out_net, Box::into_raw(Box::new(HcpNetwork(net))))
    })
}

/// # Safety
/// `net` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hcp_network_free(net: *mut HcpNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// # Safety
/// `net` must be a live handle; the out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn hcp_network_shape(
    net: *const HcpNetwork,
    out_nodes: *mut usize,
    out_layers: *mut usize,
) -> HcpStatus {
    guard(|| {
        let net = &obj(net, "network")?.0;
        out(out_nodes, net.node_count())?;
        out(out_layers, net.layer_count())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hcp_sampler_config_default(config: *mut HcpSamplerConfig) -> HcpStatus {
    let d = SamplerConfig::default();
    guard(|| {
        out(
            config,
            HcpSamplerConfig {
                steps: d.steps,
                runs: d.runs as u32,
                init_k: d.init_k as u32,
                multi_node_prob: d.multi_node_prob,
                thin: d.thin,
                seed: d.seed,
                k_max: d.k_max as u32,
                mode: HCP_MODE_MAIN,
                restrict_multi_node_layer1: 0,
                burn_in: d.burn_in,
                ungated_group_addition: 0,
            },
        )
    })
}

fn to_config(c: &HcpSamplerConfig) -> Result<SamplerConfig, HcpStatus> {
    let mode = match c.mode {
        HCP_MODE_MAIN => Mode::Main,
        HCP_MODE_FIXED_K => Mode::FixedK,
        HCP_MODE_NO_MULTI_NODE => Mode::NoMultiNode,
        other => {
            return Err(fail(
                HcpStatus::InvalidArgument,
                format!("unknown mode {other}"),
            ))
        }
    };
    Ok(SamplerConfig {
        steps: c.steps,
        runs: c.runs as usize,
        init_k: c.init_k as usize,
        multi_node_prob: c.multi_node_prob,
        thin: c.thin,
        seed: c.seed,
        k_max: c.k_max as usize,
        mode,
        restrict_multi_node_layer1: c.restrict_multi_node_layer1 != 0,
        burn_in: c.burn_in,
        group_addition: if c.ungated_group_addition != 0 {
            GroupAddition::Ungated
        } else {
            GroupAddition::LayerGated
        },
    })
}

/// Runs the sampler and returns every saved record, ordered by run.
///
/// # Safety
/// `net` and `config` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hcp_run(
    net: *const HcpNetwork,
    config: *const HcpSamplerConfig,
    out_samples: *mut *mut HcpSamples,
) -> HcpStatus {
    guard(|| {
        let net = &obj(net, "network")?.0;
        let config = to_config(obj(config, "config")?)?;
        let jt = lift(JTable::build(net.node_count().max(1)))?;
        let outputs = lift(sampler::run(&config, net, &jt))?;
        let records = outputs.into_iter().flat_map(|o| o.records).collect();
        out(out_samples, Box::into_raw(Box::new(HcpSamples(records))))
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hcp_samples_load(
    path: *const c_char,
    out_samples: *mut *mut HcpSamples,
) -> HcpStatus {
    guard(|| {
        let path = path_arg(path)?;
        let records = lift(sampler::read_records(path))?;
        out(out_samples, Box::into_raw(Box::new(HcpSamples(records))))
    })
}

/// # Safety
/// `samples` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hcp_samples_save(
    samples: *const HcpSamples,
    path: *const c_char,
) -> HcpStatus {
    guard(|| {
        let samples = &obj(samples, "samples")?.0;
        let path = path_arg(path)?;
        lift(sampler::write_records(path, samples.iter()))
    })
}

/// # Safety
/// `samples` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hcp_samples_len(
    samples: *const HcpSamples,
    out_len: *mut usize,
) -> HcpStatus {
    guard(|| out(out_len, obj(samples, "samples")?.0.len()))
}

/// Copy of record `index` as a new assignment handle, with its run id and
/// step written to the optional `out_run` / `out_step`.
///
/// # Safety
/// `samples` must be a live handle; `out` must be writable; `out_run` and
/// `out_step` may be null.
#[no_mangle]
pub unsafe extern "C" fn hcp_samples_get(
    samples: *const HcpSamples,
    index: usize,
    out_assignment: *mut *mut HcpAssignment,
    out_run: *mut usize,
    out_step: *mut u64,
) -> HcpStatus {
    guard(|| {
        let records = &obj(samples, "samples")?.0;
        let record = records.get(index).ok_or_else(|| {
            fail(
                HcpStatus::InvalidArgument,
                format!("index {index} out of range ({} records)", records.len()),
            )
        })?;
        if !out_run.is_null() {
            out_run.write(record.run);
        }
        if !out_step.is_null() {
            out_step.write(record.step);
        }
        out(
            out_assignment,
            Box::into_raw(Box::new(HcpAssignment(record.assignment.clone()))),
        )
    })
}

/// # Safety
/// `samples` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hcp_samples_free(samples: *mut HcpSamples) {
    if !samples.is_null() {
        drop(Box::from_raw(samples));
    }
}

/// Consensus assignment of the records (modal `k`, then the most frequent
/// pattern per node-layer).
///
/// # Safety
/// `samples` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hcp_consensus(
    samples: *const HcpSamples,
    out_assignment: *mut *mut HcpAssignment,
) -> HcpStatus {
    guard(|| {
        let records = &obj(samples, "samples")?.0;
        let g = lift(consensus(records))?;
        out(out_assignment, Box::into_raw(Box::new(HcpAssignment(g))))
    })
}

/// # Safety
/// `a` must be a live handle; the out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn hcp_assignment_shape(
    a: *const HcpAssignment,
    out_nodes: *mut usize,
    out_layers: *mut usize,
    out_k: *mut usize,
) -> HcpStatus {
    guard(|| {
        let g = &obj(a, "assignment")?.0;
        out(out_nodes, g.node_count())?;
        out(out_layers, g.layer_count())?;
        out(out_k, g.k())
    })
}

/// Membership bits of node-layer `(layer, node)`: bit `r - 1` is group `r`.
///
/// # Safety
/// `a` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hcp_assignment_pattern(
    a: *const HcpAssignment,
    layer: usize,
    node: usize,
    out_pattern: *mut u64,
) -> HcpStatus {
    guard(|| {
        let g = &obj(a, "assignment")?.0;
        if layer >= g.layer_count() || node >= g.node_count() {
            return Err(fail(
                HcpStatus::InvalidArgument,
                format!("node-layer ({node}, {layer}) out of range"),
            ));
        }
        out(out_pattern, g.pattern(layer, node).0)
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hcp_assignment_load(
    path: *const c_char,
    out_assignment: *mut *mut HcpAssignment,
) -> HcpStatus {
    guard(|| {
        let path = path_arg(path)?;
        let g = lift(GroupAssignment::load(path))?;
        out(out_assignment, Box::into_raw(Box::new(HcpAssignment(g))))
    })
}

/// # Safety
/// `a` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hcp_assignment_save(
    a: *const HcpAssignment,
    path: *const c_char,
) -> HcpStatus {
    guard(|| {
        let g = &obj(a, "assignment")?.0;
        let path = path_arg(path)?;
        lift(g.save(path))
    })
}

/// # Safety
/// `a` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hcp_assignment_free(a: *mut HcpAssignment) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}
