//! C interface to the `gchord` solver.
//!
//! Objects cross the boundary as opaque pointers created by `*_new` /
//! `*_solve` functions and released by the matching `*_free`. Every fallible
//! call returns a [`GchordStatus`]; the message of the most recent failure on
//! the calling thread is available from [`gchord_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gchord::chord::{chord_integral, gaussian_volume, ChordParams};
use gchord::diagnostics::ma_residual;
use gchord::flow::{Flow, FlowConfig, ProblemSpec, RunOutput, RunStatus};
use gchord::support::{make_body, AngleGrid, Shape, SupportFunction};
use gchord::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GchordStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidGrid = 2,
    ConvexityViolation = 3,
    NonPositiveSupport = 4,
    InterpolationError = 5,
    PointOutsideBody = 6,
    QuadratureUnderflow = 7,
    InvalidShape = 8,
    UnsupportedExponent = 9,
    InvalidProblem = 10,
    InvalidConfig = 11,
    DegenerateDenominator = 12,
    StepSizeUnderflow = 13,
    NonConvergence = 14,
    ShapeMismatch = 15,
    PerturbedNotConvex = 16,
    BufferTooSmall = 17,
    Panic = 99,
}

impl From<&Error> for GchordStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidGrid(_) => Self::InvalidGrid,
            Error::ConvexityViolation { .. } => Self::ConvexityViolation,
            Error::NonPositiveSupport { .. } => Self::NonPositiveSupport,
            Error::InterpolationError { .. } => Self::InterpolationError,
            Error::PointOutsideBody { .. } => Self::PointOutsideBody,
            Error::QuadratureUnderflow => Self::QuadratureUnderflow,
            Error::InvalidShape(_) => Self::InvalidShape,
            Error::UnsupportedExponent { .. } => Self::UnsupportedExponent,
            Error::InvalidProblem(_) => Self::InvalidProblem,
            Error::InvalidConfig(_) => Self::InvalidConfig,
            Error::DegenerateDenominator(_) => Self::DegenerateDenominator,
            Error::StepSizeUnderflow { .. } => Self::StepSizeUnderflow,
            Error::NonConvergence { .. } => Self::NonConvergence,
            Error::ShapeMismatch { .. } => Self::ShapeMismatch,
            Error::PerturbedNotConvex { .. } => Self::PerturbedNotConvex,
        }
    }
}

/// Opaque support function on a uniform angle grid.
pub struct GchordBody(SupportFunction);

/// Opaque problem: exponents and density.
pub struct GchordProblem(ProblemSpec);

/// Opaque result of a flow run.
pub struct GchordRun(RunOutput);

/// Flow step control and quadrature resolution.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GchordFlowConfig {
    pub dt0: f64,
    pub dt_min: f64,
    pub max_steps: usize,
    pub eps_stationary: f64,
    pub record_every: usize,
    pub radial_nodes: usize,
    pub direction_nodes: usize,
}

impl From<GchordFlowConfig> for FlowConfig {
    fn from(c: GchordFlowConfig) -> Self {
        FlowConfig {
            dt0: c.dt0,
            dt_min: c.dt_min,
            max_steps: c.max_steps,
            eps_stationary: c.eps_stationary,
            record_every: c.record_every,
            radial_nodes: c.radial_nodes,
            direction_nodes: c.direction_nodes,
        }
    }
}

/// Final state of a run, as plain values.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GchordRunSummary {
    /// `Ok`, `NonConvergence` or `StepSizeUnderflow`.
    pub status: GchordStatus,
    pub steps: usize,
    pub t: f64,
    pub theta: f64,
    pub tau: f64,
    pub rhs_sup: f64,
    pub residual_sup: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(msg));
}

fn guard<F: FnOnce() -> Result<(), GchordStatus>>(f: F) -> GchordStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GchordStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_last_error("internal panic".into());
            GchordStatus::Panic
        }
    }
}

fn fail(e: Error) -> GchordStatus {
    let status = GchordStatus::from(&e);
    set_last_error(e.to_string());
    status
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, GchordStatus> {
    p.as_ref().ok_or_else(|| {
        set_last_error("null pointer argument".into());
        GchordStatus::NullPointer
    })
}

unsafe fn slice<'a>(p: *const f64, len: usize) -> Result<&'a [f64], GchordStatus> {
    if p.is_null() {
        set_last_error("null array argument".into());
        return Err(GchordStatus::NullPointer);
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn store<T>(out: *mut T, value: T) -> Result<(), GchordStatus> {
    if out.is_null() {
        set_last_error("null output pointer".into());
        return Err(GchordStatus::NullPointer);
    }
    out.write(value);
    Ok(())
}

unsafe fn store_handle<T>(out: *mut *mut T, value: T) -> Result<(), GchordStatus> {
    if out.is_null() {
        set_last_error("null output pointer".into());
        return Err(GchordStatus::NullPointer);
    }
    out.write(Box::into_raw(Box::new(value)));
    Ok(())
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL, or
/// 0 when no error has been recorded.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn gchord_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let slot = slot.borrow();
        let Some(msg) = slot.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

#[no_mangle]
pub extern "C" fn gchord_flow_config_default() -> GchordFlowConfig {
    let d = FlowConfig::default();
    GchordFlowConfig {
        dt0: d.dt0,
        dt_min: d.dt_min,
        max_steps: d.max_steps,
        eps_stationary: d.eps_stationary,
        record_every: d.record_every,
        radial_nodes: d.radial_nodes,
        direction_nodes: d.direction_nodes,
    }
}

fn grid(n: usize) -> Result<AngleGrid, GchordStatus> {
    AngleGrid::new(n).map_err(fail)
}

unsafe fn body_from_shape(n: usize, shape: Shape, out: *mut *mut GchordBody) -> GchordStatus {
    guard(|| {
        let h = make_body(&shape, &grid(n)?).map_err(fail)?;
        store_handle(out, GchordBody(h))
    })
}

/// Body from `n` support values sampled at angles `2πi/n`.
///
/// # Safety
/// `values` must point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gchord_body_new(
    values: *const f64,
    n: usize,
    out: *mut *mut GchordBody,
) -> GchordStatus {
    guard(|| {
        let v = slice(values, n)?.to_vec();
        let h = SupportFunction::new(grid(n)?, v).map_err(fail)?;
        h.check_convex().map_err(fail)?;
        store_handle(out, GchordBody(h))
    })
}

/// Disk of the given radius on an `n`-node grid.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gchord_body_disk(n: usize, radius: f64, out: *mut *mut GchordBody) -> GchordStatus {
    body_from_shape(n, Shape::Disk { radius }, out)
}

/// Ellipse with semi-axes `a` (along θ = 0) and `b`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gchord_body_ellipse(
    n: usize,
    a: f64,
    b: f64,
    out: *mut *mut GchordBody,
) -> GchordStatus {
    body_from_shape(n, Shape::Ellipse { a, b }, out)
}

/// # Safety
/// `body` must be null or a pointer returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gchord_body_free(body: *mut GchordBody) {
    if !body.is_null() {
        drop(Box::from_raw(body));
    }
}

/// Grid size of `body`, or 0 for a null pointer.
///
/// # Safety
/// `body` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gchord_body_len(body: *const GchordBody) -> usize {
    body.as_ref().map_or(0, |b| b.0.len())
}

/// Copies the support values into `out` (`len` must equal the grid size).
///
/// # Safety
/// `body` must be a live handle and `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gchord_body_values(
    body: *const GchordBody,
    out: *mut f64,
    len: usize,
) -> GchordStatus {
    guard(|| {
        let h = &deref(body)?.0;
        if out.is_null() {
            return Err(fail_null());
        }
        if len < h.len() {
            set_last_error(format!("buffer holds {len} values, body has {}", h.len()));
            return Err(GchordStatus::BufferTooSmall);
        }
        ptr::copy_nonoverlapping(h.values().as_ptr(), out, h.len());
        Ok(())
    })
}

fn fail_null() -> GchordStatus {
    set_last_error("null output pointer".into());
    GchordStatus::NullPointer
}

/// Gaussian chord integral of `body`.
///
/// # Safety
/// `body` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gchord_chord_integral(
    body: *const GchordBody,
    q: f64,
    radial_nodes: usize,
    direction_nodes: usize,
    out: *mut f64,
) -> GchordStatus {
    guard(|| {
        let params = ChordParams::with_nodes(q, radial_nodes, direction_nodes);
        let v = chord_integral(&deref(body)?.0, &params).map_err(fail)?;
        store(out, v)
    })
}

/// Gaussian mass of `body`.
///
/// # Safety
/// `body` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gchord_gaussian_volume(body: *const GchordBody, out: *mut f64) -> GchordStatus {
    guard(|| {
        let v = gaussian_volume(&deref(body)?.0).map_err(fail)?;
        store(out, v)
    })
}

/// Problem with exponents `p ≥ 0`, `q > 1` and an even positive density of
/// `n` samples.
///
/// # Safety
/// `density` must point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gchord_problem_new(
    p: f64,
    q: f64,
    density: *const f64,
    n: usize,
    out: *mut *mut GchordProblem,
) -> GchordStatus {
    guard(|| {
        let f = slice(density, n)?.to_vec();
        let spec = ProblemSpec::new(p, q, f).map_err(fail)?;
        store_handle(out, GchordProblem(spec))
    })
}

/// # Safety
/// `problem` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gchord_problem_free(problem: *mut GchordProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Writes `∂h/∂t` at `body` into `out` (`len` ≥ grid size).
///
/// # Safety
/// Handles must be live, `config` readable and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gchord_flow_rhs(
    problem: *const GchordProblem,
    config: *const GchordFlowConfig,
    body: *const GchordBody,
    out: *mut f64,
    len: usize,
) -> GchordStatus {
    guard(|| {
        let spec = &deref(problem)?.0;
        let config = FlowConfig::from(*deref(config)?);
        let h = &deref(body)?.0;
        let flow = Flow::new(spec.clone(), config).map_err(fail)?;
        let rhs = flow.flow_rhs(h).map_err(fail)?;
        if out.is_null() {
            return Err(fail_null());
        }
        if len < rhs.len() {
            set_last_error(format!("buffer holds {len} values, need {}", rhs.len()));
            return Err(GchordStatus::BufferTooSmall);
        }
        ptr::copy_nonoverlapping(rhs.as_ptr(), out, rhs.len());
        Ok(())
    })
}

/// Sup-norm of the Monge–Ampère residual of `body` for the given `tau`.
///
/// # Safety
/// Handles must be live, `config` readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gchord_ma_residual(
    problem: *const GchordProblem,
    config: *const GchordFlowConfig,
    body: *const GchordBody,
    tau: f64,
    out: *mut f64,
) -> GchordStatus {
    guard(|| {
        let spec = &deref(problem)?.0;
        let params = FlowConfig::from(*deref(config)?).chord_params(spec.q());
        let (_, sup) = ma_residual(spec, &params, &deref(body)?.0, tau).map_err(fail)?;
        store(out, sup)
    })
}

/// Runs the flow from `initial`. A run that stops without converging still
/// yields a handle; its summary carries the stopping status.
///
/// # Safety
/// Handles must be live, `config` readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gchord_solve(
    problem: *const GchordProblem,
    config: *const GchordFlowConfig,
    initial: *const GchordBody,
    out: *mut *mut GchordRun,
) -> GchordStatus {
    guard(|| {
        let spec = &deref(problem)?.0;
        let config = FlowConfig::from(*deref(config)?);
        let h0 = &deref(initial)?.0;
        let flow = Flow::new(spec.clone(), config).map_err(fail)?;
        let run = flow.run(h0).map_err(fail)?;
        store_handle(out, GchordRun(run))
    })
}

/// # Safety
/// `run` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gchord_run_get_summary(
    run: *const GchordRun,
    out: *mut GchordRunSummary,
) -> GchordStatus {
    guard(|| {
        let r = &deref(run)?.0;
        let status = match r.status {
            RunStatus::Converged => GchordStatus::Ok,
            RunStatus::NonConvergence => GchordStatus::NonConvergence,
            RunStatus::StepSizeUnderflow => GchordStatus::StepSizeUnderflow,
        };
        store(
            out,
            GchordRunSummary {
                status,
                steps: r.state.step,
                t: r.state.t,
                theta: r.state.theta,
                tau: 1.0 / r.state.theta,
                rhs_sup: r.rhs_sup,
                residual_sup: r.residual_sup,
            },
        )
    })
}

/// New body handle holding the final support function of `run`.
///
/// # Safety
/// `run` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gchord_run_final_body(
    run: *const GchordRun,
    out: *mut *mut GchordBody,
) -> GchordStatus {
    guard(|| {
        let h = deref(run)?.0.state.h.clone();
        store_handle(out, GchordBody(h))
    })
}

/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gchord_run_free(run: *mut GchordRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}
