//! C interface to `tsp-anytime`.
//!
//! Instances and trajectories are opaque handles owned by the caller and
//! released with their `_free` function. Every fallible call returns a
//! [`TspStatus`]; on failure the message is available from
//! [`tsp_last_error_message`] on the same thread. Panics never cross the
//! boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use tsp_anytime::analysis::{first_hitting_time, wilcoxon_signed_rank, Alternative, Method};
use tsp_anytime::geometry::{tour_length, tsplib, DistanceMode, Group, Instance, Point, Tour};
use tsp_anytime::solvers::{
    held_karp_exact, solve, Crossover, NullRecorder, RunLimits, SolverConfig, Trajectory,
};
use tsp_anytime::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TspStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    InvalidTour = 3,
    InvalidConfig = 4,
    SizeLimit = 5,
    OutOfRange = 6,
    Parse = 7,
    Io = 8,
    Internal = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TspMetric {
    Rounded = 0,
    Exact = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TspSolver {
    /// Iterated local search.
    Ils = 0,
    /// Edge-assembly genetic algorithm.
    Ga = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TspCrossover {
    None = 0,
    Ipt = 1,
    Eax = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TspSolveOptions {
    pub solver: TspSolver,
    pub crossover: TspCrossover,
    pub restart: bool,
    pub seed: u64,
    pub cutoff_ms: u64,
    /// Use the deterministic evaluation-count clock instead of wall time.
    pub evals_clock: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TspEvent {
    pub elapsed_ms: u64,
    pub evals: u64,
    pub length: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TspWilcoxon {
    pub statistic: f64,
    pub p_value: f64,
    pub n_effective: usize,
    pub exact: bool,
    pub degenerate: bool,
}

/// Opaque instance handle.
pub struct TspInstance(Instance);

/// Opaque trajectory handle.
pub struct TspTrajectory(Trajectory);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> TspStatus {
    match e {
        Error::InvalidInput(_)
        | Error::MissingReference(_)
        | Error::MonotonicityViolation { .. } => TspStatus::InvalidInput,
        Error::InvalidTour(_) => TspStatus::InvalidTour,
        Error::InvalidConfig(_) => TspStatus::InvalidConfig,
        Error::SizeLimit { .. } => TspStatus::SizeLimit,
        Error::OutOfRange { .. } => TspStatus::OutOfRange,
        Error::Parse { .. } | Error::Json(_) => TspStatus::Parse,
        Error::Io { .. } => TspStatus::Io,
        _ => TspStatus::Internal,
    }
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), (TspStatus, String)>) -> TspStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            TspStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside tsp-anytime".into());
            TspStatus::Panic
        }
    }
}

fn lib(e: Error) -> (TspStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (TspStatus, String) {
    (TspStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a, T>(
    ptr: *const T,
    len: usize,
    what: &str,
) -> Result<&'a [T], (TspStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn tsp_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tsp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds an instance from `n` coordinate pairs.
///
/// # Safety
/// `xs` and `ys` must point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tsp_instance_from_coords(
    xs: *const f64,
    ys: *const f64,
    n: usize,
    metric: TspMetric,
    out: *mut *mut TspInstance,
) -> TspStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let xs = slice(xs, n, "xs")?;
        let ys = slice(ys, n, "ys")?;
        let points = xs.iter().zip(ys).map(|(&x, &y)| Point::new(x, y)).collect();
        let metric = match metric {
            TspMetric::Rounded => DistanceMode::RoundedEuclidean,
            TspMetric::Exact => DistanceMode::ExactEuclidean,
        };
        let inst = Instance::new("ffi", points, Group::Custom, metric).map_err(lib)?;
        *out = Box::into_raw(Box::new(TspInstance(inst)));
        Ok(())
    })
}

/// Reads a TSPLIB `EUC_2D` file.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tsp_instance_load_tsplib(
    path: *const c_char,
    out: *mut *mut TspInstance,
) -> TspStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| (TspStatus::InvalidInput, "path is not UTF-8".to_owned()))?;
        let inst = tsplib::read(Path::new(path)).map_err(lib)?;
        *out = Box::into_raw(Box::new(TspInstance(inst)));
        Ok(())
    })
}

/// Releases an instance. Null is ignored.
///
/// # Safety
/// `inst` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tsp_instance_free(inst: *mut TspInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Number of cities, or 0 for null.
///
/// # Safety
/// `inst` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tsp_instance_len(inst: *const TspInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.0.len())
}

/// Length of the closed tour visiting `order`, which must be a permutation.
///
/// # Safety
/// `inst` must be a live handle, `order` must point to `n` values and
/// `length` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tsp_tour_length(
    inst: *const TspInstance,
    order: *const usize,
    n: usize,
    length: *mut f64,
) -> TspStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        if length.is_null() {
            return Err(null("length"));
        }
        let order = slice(order, n, "order")?;
        *length = tour_length(&inst.0, &Tour::from_order(order.to_vec())).map_err(lib)?;
        Ok(())
    })
}

/// Optimal tour by dynamic programming (at most 16 cities). `order` receives
/// `tsp_instance_len(inst)` city indices.
///
/// # Safety
/// `inst` must be a live handle; `order` must have room for every city;
/// `length` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tsp_held_karp(
    inst: *const TspInstance,
    order: *mut usize,
    length: *mut f64,
) -> TspStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        if order.is_null() {
            return Err(null("order"));
        }
        if length.is_null() {
            return Err(null("length"));
        }
        let (tour, len) = held_karp_exact(&inst.0).map_err(lib)?;
        std::ptr::copy_nonoverlapping(tour.order().as_ptr(), order, tour.len());
        *length = len;
        Ok(())
    })
}

/// Runs a solver and returns its incumbent trajectory.
///
/// # Safety
/// `inst` and `opts` must be valid pointers; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tsp_solve(
    inst: *const TspInstance,
    opts: *const TspSolveOptions,
    out: *mut *mut TspTrajectory,
) -> TspStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        let opts = opts.as_ref().ok_or_else(|| null("opts"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let mut cfg = match opts.solver {
            TspSolver::Ils => SolverConfig::ils(opts.seed),
            TspSolver::Ga => SolverConfig::ga(opts.seed),
        };
        cfg.restart = opts.restart;
        cfg.crossover = match opts.crossover {
            TspCrossover::None => Crossover::None,
            TspCrossover::Ipt => Crossover::Ipt,
            TspCrossover::Eax => Crossover::Eax,
        };
        let limits = if opts.evals_clock {
            RunLimits::evals(opts.cutoff_ms)
        } else {
            RunLimits::wall(opts.cutoff_ms)
        };
        let traj = solve(&inst.0, &cfg, &limits, &mut NullRecorder).map_err(lib)?;
        *out = Box::into_raw(Box::new(TspTrajectory(traj)));
        Ok(())
    })
}

/// Releases a trajectory. Null is ignored.
///
/// # Safety
/// `traj` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tsp_trajectory_free(traj: *mut TspTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of incumbent events, or 0 for null.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tsp_trajectory_len(traj: *const TspTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.events.len())
}

/// Copies event `index` into `out`.
///
/// # Safety
/// `traj` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tsp_trajectory_event(
    traj: *const TspTrajectory,
    index: usize,
    out: *mut TspEvent,
) -> TspStatus {
    guard(|| {
        let traj = traj.as_ref().ok_or_else(|| null("traj"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let e = traj.0.events.get(index).ok_or_else(|| {
            (
                TspStatus::OutOfRange,
                format!("event {index} of {}", traj.0.events.len()),
            )
        })?;
        *out = TspEvent {
            elapsed_ms: e.elapsed_ms,
            evals: e.evals,
            length: e.length,
        };
        Ok(())
    })
}

/// First time the run was within `(1 + alpha) * reference`. `hit` is false
/// (and `elapsed_ms` untouched) when it never was.
///
/// # Safety
/// `traj` must be a live handle; `hit` and `elapsed_ms` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tsp_first_hitting_time(
    traj: *const TspTrajectory,
    alpha: f64,
    reference: f64,
    hit: *mut bool,
    elapsed_ms: *mut u64,
) -> TspStatus {
    guard(|| {
        let traj = traj.as_ref().ok_or_else(|| null("traj"))?;
        if hit.is_null() || elapsed_ms.is_null() {
            return Err(null("output"));
        }
        match first_hitting_time(&traj.0, alpha, reference).map_err(lib)? {
            Some(t) => {
                *hit = true;
                *elapsed_ms = t;
            }
            None => *hit = false,
        }
        Ok(())
    })
}

/// Wilcoxon signed-rank test of `x` against `y` (paired, length `n`).
///
/// # Safety
/// `x` and `y` must point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tsp_wilcoxon(
    x: *const f64,
    y: *const f64,
    n: usize,
    two_sided: bool,
    out: *mut TspWilcoxon,
) -> TspStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let x = slice(x, n, "x")?;
        let y = slice(y, n, "y")?;
        let alt = if two_sided {
            Alternative::TwoSided
        } else {
            Alternative::Greater
        };
        let r = wilcoxon_signed_rank(x, y, alt).map_err(lib)?;
        *out = TspWilcoxon {
            statistic: r.statistic,
            p_value: r.p_value,
            n_effective: r.n_effective,
            exact: r.method == Method::Exact,
            degenerate: r.degenerate,
        };
        Ok(())
    })
}
