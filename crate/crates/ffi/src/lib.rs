// Copyright 2026 The robustctl Authors
// SPDX-License-Identifier: Apache-2.0

//! C ABI over the `robustctl` core library.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_named`
//! functions and released with the matching `*_free`. Every fallible call
//! returns an [`RcStatus`]; on failure a description is available from
//! [`rc_last_error_message`] on the same thread. Panics never unwind into C:
//! they are caught and reported as `RC_STATUS_INTERNAL`.
//!
//! Matrices are exchanged as separate real and imaginary arrays in row-major
//! order. Pulse amplitudes are row-major `[n_controls][n_segments]`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use robustctl::algebra::{lie_closure, system_generators, DEFAULT_CLOSURE_TOL, DEFAULT_MAX_DEPTH};
use robustctl::gates::named_gate;
use robustctl::grape::{
    optimize, propagate, Metric, OptimizationReport, OptimizerConfig, PulseSchedule,
};
use robustctl::models::ControlSystem;
use robustctl::Error;

/// Result of an FFI call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnknownSystem = 3,
    UnknownGate = 4,
    OutOfDomain = 5,
    Numerical = 6,
    BufferTooSmall = 7,
    Internal = 8,
}

/// Pulse metric for [`RcOptimizerConfig`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RcMetric {
    PhaseInsensitive = 0,
    Literal = 1,
}

/// Optimizer settings; obtain defaults from [`rc_optimizer_config_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct RcOptimizerConfig {
    pub total_time: f64,
    pub n_segments: usize,
    pub metric: RcMetric,
    pub restarts: usize,
    pub max_iter: usize,
    pub threshold: f64,
    pub seed: u64,
    pub amplitude_bound: f64,
}

/// Opaque control system.
pub struct RcSystem(ControlSystem);

/// Opaque optimization result.
pub struct RcReport(OptimizationReport);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> RcStatus {
    match err {
        Error::UnknownSystem(_) => RcStatus::UnknownSystem,
        Error::UnknownGate(_) => RcStatus::UnknownGate,
        Error::OutOfDomain { .. } => RcStatus::OutOfDomain,
        Error::NotHermitian(_) | Error::NotUnitary(_) | Error::ClosureIncomplete { .. } => {
            RcStatus::Numerical
        }
        _ => RcStatus::InvalidArgument,
    }
}

fn fail(status: RcStatus, msg: impl Into<String>) -> RcStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, mapping errors and panics to a status.
fn guard(f: impl FnOnce() -> Result<(), RcStatus>) -> RcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            RcStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(RcStatus::Internal, format!("internal error: {msg}"))
        }
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, RcStatus>;
}

impl<T> OrStatus<T> for robustctl::Result<T> {
    fn or_status(self) -> Result<T, RcStatus> {
        self.map_err(|e| fail(status_of(&e), e.to_string()))
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, RcStatus> {
    p.as_ref()
        .ok_or_else(|| fail(RcStatus::NullPointer, format!("{what} is null")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], RcStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(RcStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], RcStatus> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(fail(RcStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn string<'a>(p: *const c_char, what: &str) -> Result<&'a str, RcStatus> {
    if p.is_null() {
        return Err(fail(RcStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(RcStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn write_out<T>(out: *mut T, v: T, what: &str) -> Result<(), RcStatus> {
    if out.is_null() {
        return Err(fail(RcStatus::NullPointer, format!("{what} is null")));
    }
    out.write(v);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length excluding the NUL, so
/// a call with `len == 0` sizes the buffer.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null with `len == 0`.
#[no_mangle]
pub unsafe extern "C" fn rc_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Looks up a catalog system (`A`, `A-variant`, `B`, `C`, `D`, `E`, `1q-wX`,
/// `1q-XwY`, `1q-XwZ`). Release with [`rc_system_free`].
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rc_system_named(name: *const c_char, out: *mut *mut RcSystem) -> RcStatus {
    guard(|| {
        let name = string(name, "name")?;
        let sys = ControlSystem::named(name).or_status()?;
        write_out(out, Box::into_raw(Box::new(RcSystem(sys))), "out")
    })
}

/// Builds a system from its JSON definition.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rc_system_from_json(
    json: *const c_char,
    out: *mut *mut RcSystem,
) -> RcStatus {
    guard(|| {
        let json = string(json, "json")?;
        let sys = ControlSystem::from_json(json).or_status()?;
        write_out(out, Box::into_raw(Box::new(RcSystem(sys))), "out")
    })
}

/// # Safety
/// `sys` must come from this library and not be used afterwards. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn rc_system_free(sys: *mut RcSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Hilbert-space dimension, or 0 for a null handle.
///
/// # Safety
/// `sys` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn rc_system_dim(sys: *const RcSystem) -> usize {
    sys.as_ref().map_or(0, |s| s.0.dim())
}

/// Number of control Hamiltonians, or 0 for a null handle.
///
/// # Safety
/// `sys` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn rc_system_n_controls(sys: *const RcSystem) -> usize {
    sys.as_ref().map_or(0, |s| s.0.n_controls())
}

/// Number of unknown drift parameters, or 0 for a null handle.
///
/// # Safety
/// `sys` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn rc_system_n_params(sys: *const RcSystem) -> usize {
    sys.as_ref().map_or(0, |s| s.0.n_params())
}

/// Dimension of the dynamical Lie algebra at the given parameter values.
///
/// # Safety
/// `params` must hold `n_params` values; `out_dim` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rc_system_lie_dimension(
    sys: *const RcSystem,
    params: *const f64,
    n_params: usize,
    out_dim: *mut usize,
) -> RcStatus {
    guard(|| {
        let sys = &deref(sys, "sys")?.0;
        let params = slice(params, n_params, "params")?;
        let gens = system_generators(sys, params).or_status()?;
        let basis = lie_closure(&gens, DEFAULT_CLOSURE_TOL, DEFAULT_MAX_DEPTH).or_status()?;
        write_out(out_dim, basis.dim(), "out_dim")
    })
}

/// Propagator of a piecewise-constant pulse. `amplitudes` is row-major
/// `[n_controls][n_segments]`; `out_re`/`out_im` receive `dim*dim` values.
///
/// # Safety
/// All pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn rc_propagate(
    sys: *const RcSystem,
    params: *const f64,
    n_params: usize,
    total_time: f64,
    amplitudes: *const f64,
    n_segments: usize,
    out_re: *mut f64,
    out_im: *mut f64,
) -> RcStatus {
    guard(|| {
        let sys = &deref(sys, "sys")?.0;
        let params = slice(params, n_params, "params")?;
        let k = sys.n_controls();
        let flat = slice(amplitudes, k * n_segments, "amplitudes")?;
        if n_segments == 0 {
            return Err(fail(
                RcStatus::InvalidArgument,
                "n_segments must be positive",
            ));
        }
        let rows: Vec<Vec<f64>> = flat.chunks(n_segments).map(<[f64]>::to_vec).collect();
        let schedule = PulseSchedule::new(total_time, rows, f64::INFINITY).or_status()?;
        let u = propagate(sys, params, &schedule).or_status()?;
        let d = sys.dim();
        let re = slice_mut(out_re, d * d, "out_re")?;
        let im = slice_mut(out_im, d * d, "out_im")?;
        for (i, z) in u.to_row_major().into_iter().enumerate() {
            re[i] = z.re;
            im[i] = z.im;
        }
        Ok(())
    })
}

/// Default optimizer settings.
#[no_mangle]
pub extern "C" fn rc_optimizer_config_default() -> RcOptimizerConfig {
    let c = OptimizerConfig::default();
    RcOptimizerConfig {
        total_time: c.total_time,
        n_segments: c.n_segments,
        metric: match c.metric {
            Metric::Literal => RcMetric::Literal,
            Metric::PhaseInsensitive => RcMetric::PhaseInsensitive,
        },
        restarts: c.restarts,
        max_iter: c.max_iter,
        threshold: c.threshold,
        seed: c.seed,
        amplitude_bound: c.amplitude_bound,
    }
}

/// Ensemble GRAPE toward the named gate over `n_configs` parameter vectors
/// stored row-major in `configs` (`n_configs * n_params` values). A report
/// is produced whether or not the threshold was met; check
/// [`rc_report_converged`]. Release with [`rc_report_free`].
///
/// # Safety
/// All pointers must be valid for the stated lengths; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rc_optimize(
    sys: *const RcSystem,
    configs: *const f64,
    n_configs: usize,
    target: *const c_char,
    config: *const RcOptimizerConfig,
    out: *mut *mut RcReport,
) -> RcStatus {
    guard(|| {
        let sys = &deref(sys, "sys")?.0;
        let p = sys.n_params();
        let flat = slice(configs, n_configs * p, "configs")?;
        let points: Vec<Vec<f64>> = if p == 0 {
            vec![Vec::new(); n_configs]
        } else {
            flat.chunks(p).map(<[f64]>::to_vec).collect()
        };
        let target = named_gate(string(target, "target")?, sys.dim()).or_status()?;
        let c = deref(config, "config")?;
        let cfg = OptimizerConfig {
            total_time: c.total_time,
            n_segments: c.n_segments,
            metric: match c.metric {
                RcMetric::Literal => Metric::Literal,
                RcMetric::PhaseInsensitive => Metric::PhaseInsensitive,
            },
            restarts: c.restarts,
            max_iter: c.max_iter,
            threshold: c.threshold,
            seed: c.seed,
            amplitude_bound: c.amplitude_bound,
            ..OptimizerConfig::default()
        };
        let report = optimize(sys, &points, &target, &cfg).or_status()?;
        write_out(out, Box::into_raw(Box::new(RcReport(report))), "out")
    })
}

/// # Safety
/// `report` must come from this library and not be used afterwards. Null
/// is ignored.
#[no_mangle]
pub unsafe extern "C" fn rc_report_free(report: *mut RcReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Largest per-configuration error, or NaN for a null handle.
///
/// # Safety
/// `report` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn rc_report_max_error(report: *const RcReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.0.max_error)
}

/// Whether the threshold was met; false for a null handle.
///
/// # Safety
/// `report` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn rc_report_converged(report: *const RcReport) -> bool {
    report.as_ref().is_some_and(|r| r.0.converged)
}

/// Number of pulse segments, or 0 for a null handle.
///
/// # Safety
/// `report` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn rc_report_n_segments(report: *const RcReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.schedule.n_segments())
}

/// Copies the pulse amplitudes (row-major `[n_controls][n_segments]`) into
/// `out`, which must hold `len` values.
///
/// # Safety
/// `out` must be valid for `len` values.
#[no_mangle]
pub unsafe extern "C" fn rc_report_amplitudes(
    report: *const RcReport,
    out: *mut f64,
    len: usize,
) -> RcStatus {
    guard(|| {
        let s = &deref(report, "report")?.0.schedule;
        let need = s.n_controls() * s.n_segments();
        if len < need {
            return Err(fail(
                RcStatus::BufferTooSmall,
                format!("need {need} values, got {len}"),
            ));
        }
        let out = slice_mut(out, need, "out")?;
        for (dst, src) in out.chunks_mut(s.n_segments()).zip(s.amplitudes()) {
            dst.copy_from_slice(src);
        }
        Ok(())
    })
}
