//! C ABI for `ialign`.
//!
//! Objects are opaque handles created by `ialign_*_new`/`_generate`/`_run_*`
//! functions and released with the matching `_free`. Every fallible call
//! returns an [`IalignStatus`]; on failure a message is available from
//! [`ialign_last_error`] on the same thread. Matrices cross the boundary as
//! row-major arrays of interleaved `(re, im)` doubles.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ialign::alignment::{weighted_leakage, Init};
use ialign::metrics::sum_rate;
use ialign::numerics::CMat;
use ialign::{
    generate_network, run_max_sinr, run_min_leakage, ChannelSet, Error, NetworkConfig, Solution, SolverOptions,
};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IalignStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidConfig = 2,
    ShapeMismatch = 3,
    Numerical = 4,
    InvalidInput = 5,
    BufferTooSmall = 6,
    IndexOutOfRange = 7,
    Panic = 8,
}

pub struct IalignNetwork(NetworkConfig);
pub struct IalignChannels(ChannelSet);
pub struct IalignSolution(Solution);

/// Solver settings; obtain defaults from [`ialign_solver_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct IalignSolverOptions {
    pub max_iterations: u64,
    pub wli_stop: f64,
    pub rel_stop: f64,
    pub restarts: u64,
    pub extra_restarts: u64,
    pub seed: u64,
}

/// Summary of an iterative run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct IalignRunInfo {
    pub iterations: u64,
    pub converged: c_int,
    pub final_value: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn status_of(err: &Error) -> IalignStatus {
    match err {
        Error::InvalidConfig(_) | Error::Topology(_) => IalignStatus::InvalidConfig,
        Error::ShapeMismatch(_) | Error::DimensionOutOfRange { .. } => IalignStatus::ShapeMismatch,
        Error::NotHermitian { .. }
        | Error::NotPositiveDefinite
        | Error::RankDeficient { .. }
        | Error::ZeroDirection
        | Error::IllConditioned { .. }
        | Error::Singular(_) => IalignStatus::Numerical,
        Error::Input(_) | Error::Io(_) => IalignStatus::InvalidInput,
    }
}

fn fail(status: IalignStatus, msg: impl Into<String>) -> IalignStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> Result<(), IalignStatus>) -> IalignStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => IalignStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(IalignStatus::Panic, "internal panic"),
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, IalignStatus>;
}

impl<T> OrStatus<T> for ialign::Result<T> {
    fn or_status(self) -> Result<T, IalignStatus> {
        self.map_err(|e| fail(status_of(&e), e.to_string()))
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, IalignStatus> {
    p.as_ref().ok_or_else(|| fail(IalignStatus::NullPointer, format!("{what} is null")))
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) -> Result<(), IalignStatus> {
    if out.is_null() {
        return Err(fail(IalignStatus::NullPointer, "output pointer is null"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ialign_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ialign_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// `users` identical links with `tx` x `rx` antennas, `streams` streams and
/// power `power` per user.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn ialign_network_new(
    users: usize,
    tx: usize,
    rx: usize,
    streams: usize,
    power: f64,
    out: *mut *mut IalignNetwork,
) -> IalignStatus {
    guard(|| {
        let cfg = NetworkConfig::symmetric(users, tx, rx, streams, power);
        cfg.validate().or_status()?;
        write_out(out, IalignNetwork(cfg))
    })
}

/// Network from its JSON document (fields `users`, `tx_antennas`,
/// `rx_antennas`, `streams`, `power`, optional `reverse_power`).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ialign_network_from_json(json: *const c_char, out: *mut *mut IalignNetwork) -> IalignStatus {
    guard(|| {
        if json.is_null() {
            return Err(fail(IalignStatus::NullPointer, "json is null"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|_| fail(IalignStatus::InvalidInput, "json is not UTF-8"))?;
        let cfg: NetworkConfig =
            serde_json::from_str(text).map_err(|e| fail(IalignStatus::InvalidInput, e.to_string()))?;
        cfg.validate().or_status()?;
        write_out(out, IalignNetwork(cfg))
    })
}

/// Number of users, or 0 for a null handle.
///
/// # Safety
/// `net` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ialign_network_users(net: *const IalignNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.0.users)
}

/// # Safety
/// `net` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ialign_network_free(net: *mut IalignNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Draws i.i.d. CN(0,1) channels for `net` from `seed`.
///
/// # Safety
/// `net` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ialign_channels_generate(
    net: *const IalignNetwork,
    seed: u64,
    out: *mut *mut IalignChannels,
) -> IalignStatus {
    guard(|| {
        let net = as_ref(net, "network")?;
        let ch = generate_network(&net.0, seed).or_status()?;
        write_out(out, IalignChannels(ch))
    })
}

/// # Safety
/// `ch` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ialign_channels_free(ch: *mut IalignChannels) {
    if !ch.is_null() {
        drop(Box::from_raw(ch));
    }
}

#[no_mangle]
pub extern "C" fn ialign_solver_options_default() -> IalignSolverOptions {
    let d = SolverOptions::default();
    IalignSolverOptions {
        max_iterations: d.max_iterations as u64,
        wli_stop: d.wli_stop,
        rel_stop: d.rel_stop,
        restarts: d.restarts as u64,
        extra_restarts: d.extra_restarts as u64,
        seed: 0,
    }
}

fn to_options(o: &IalignSolverOptions) -> SolverOptions {
    SolverOptions {
        max_iterations: o.max_iterations as usize,
        wli_stop: o.wli_stop,
        rel_stop: o.rel_stop,
        restarts: o.restarts as usize,
        extra_restarts: o.extra_restarts as usize,
        init: Init::RandomOrthonormal { seed: o.seed },
    }
}

#[derive(Clone, Copy)]
enum Solver {
    MinLeakage,
    MaxSinr,
}

unsafe fn run(
    solver: Solver,
    ch: *const IalignChannels,
    net: *const IalignNetwork,
    opts: *const IalignSolverOptions,
    out: *mut *mut IalignSolution,
    info: *mut IalignRunInfo,
) -> IalignStatus {
    guard(|| {
        let ch = as_ref(ch, "channels")?;
        let net = as_ref(net, "network")?;
        let opts = match opts.as_ref() {
            Some(o) => to_options(o),
            None => to_options(&ialign_solver_options_default()),
        };
        let (sol, trace) = match solver {
            Solver::MinLeakage => run_min_leakage(&ch.0, &net.0, &opts),
            Solver::MaxSinr => run_max_sinr(&ch.0, &net.0, &opts),
        }
        .or_status()?;
        if let Some(info) = info.as_mut() {
            *info = IalignRunInfo {
                iterations: trace.iterations as u64,
                converged: c_int::from(trace.converged),
                final_value: trace.final_value(),
            };
        }
        write_out(out, IalignSolution(sol))
    })
}

/// Iterative alignment by alternating leakage minimization. `opts` may be
/// null for defaults; `info` may be null. `info.final_value` is the WLI.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ialign_run_min_leakage(
    ch: *const IalignChannels,
    net: *const IalignNetwork,
    opts: *const IalignSolverOptions,
    out: *mut *mut IalignSolution,
    info: *mut IalignRunInfo,
) -> IalignStatus {
    run(Solver::MinLeakage, ch, net, opts, out, info)
}

/// Iterative per-stream Max-SINR. `info.final_value` is the sum rate.
///
/// # Safety
/// As [`ialign_run_min_leakage`].
#[no_mangle]
pub unsafe extern "C" fn ialign_run_max_sinr(
    ch: *const IalignChannels,
    net: *const IalignNetwork,
    opts: *const IalignSolverOptions,
    out: *mut *mut IalignSolution,
    info: *mut IalignRunInfo,
) -> IalignStatus {
    run(Solver::MaxSinr, ch, net, opts, out, info)
}

/// Sum rate in bits per channel use.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ialign_sum_rate(
    ch: *const IalignChannels,
    sol: *const IalignSolution,
    net: *const IalignNetwork,
    out: *mut f64,
) -> IalignStatus {
    guard(|| {
        let (ch, sol, net) = (as_ref(ch, "channels")?, as_ref(sol, "solution")?, as_ref(net, "network")?);
        let r = sum_rate(&ch.0, &sol.0, &net.0).or_status()?;
        *out.as_mut().ok_or_else(|| fail(IalignStatus::NullPointer, "output pointer is null"))? = r.sum_rate;
        Ok(())
    })
}

/// Weighted leakage of interference of a solution.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ialign_weighted_leakage(
    ch: *const IalignChannels,
    sol: *const IalignSolution,
    net: *const IalignNetwork,
    out: *mut f64,
) -> IalignStatus {
    guard(|| {
        let (ch, sol, net) = (as_ref(ch, "channels")?, as_ref(sol, "solution")?, as_ref(net, "network")?);
        let w = weighted_leakage(&ch.0, &sol.0, &net.0).or_status()?;
        *out.as_mut().ok_or_else(|| fail(IalignStatus::NullPointer, "output pointer is null"))? = w;
        Ok(())
    })
}

unsafe fn copy_matrix(
    m: &CMat,
    buf: *mut f64,
    len: usize,
    rows: *mut usize,
    cols: *mut usize,
) -> Result<(), IalignStatus> {
    if let Some(r) = rows.as_mut() {
        *r = m.nrows();
    }
    if let Some(c) = cols.as_mut() {
        *c = m.ncols();
    }
    if buf.is_null() {
        return Ok(());
    }
    let need = 2 * m.nrows() * m.ncols();
    if len < need {
        return Err(fail(IalignStatus::BufferTooSmall, format!("need {need} doubles, got {len}")));
    }
    let out = std::slice::from_raw_parts_mut(buf, need);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            let at = 2 * (i * m.ncols() + j);
            out[at] = z.re;
            out[at + 1] = z.im;
        }
    }
    Ok(())
}

unsafe fn get(
    sol: *const IalignSolution,
    user: usize,
    filters: bool,
    buf: *mut f64,
    len: usize,
    rows: *mut usize,
    cols: *mut usize,
) -> IalignStatus {
    guard(|| {
        let sol = as_ref(sol, "solution")?;
        let list = if filters { &sol.0.filters } else { &sol.0.precoders };
        let m = list
            .get(user)
            .ok_or_else(|| fail(IalignStatus::IndexOutOfRange, format!("user {user} of {}", list.len())))?;
        copy_matrix(m, buf, len, rows, cols)
    })
}

/// Copies precoder `V[user]` (`rows` x `cols`, row-major, interleaved
/// re/im) into `buf` of `len` doubles. With `buf` null only the shape is
/// written, so callers can size the buffer first.
///
/// # Safety
/// `sol` must be live; `buf` must hold `len` doubles; `rows`/`cols` may be null.
#[no_mangle]
pub unsafe extern "C" fn ialign_solution_precoder(
    sol: *const IalignSolution,
    user: usize,
    buf: *mut f64,
    len: usize,
    rows: *mut usize,
    cols: *mut usize,
) -> IalignStatus {
    get(sol, user, false, buf, len, rows, cols)
}

/// Copies receive filter `U[user]`; layout as [`ialign_solution_precoder`].
///
/// # Safety
/// As [`ialign_solution_precoder`].
#[no_mangle]
pub unsafe extern "C" fn ialign_solution_filter(
    sol: *const IalignSolution,
    user: usize,
    buf: *mut f64,
    len: usize,
    rows: *mut usize,
    cols: *mut usize,
) -> IalignStatus {
    get(sol, user, true, buf, len, rows, cols)
}

/// # Safety
/// `sol` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ialign_solution_free(sol: *mut IalignSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}
