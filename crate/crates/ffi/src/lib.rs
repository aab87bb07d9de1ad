//! C interface to `irs-core`.
//!
//! Every fallible function returns an [`IrsStatus`] and writes results
//! through out-pointers. On failure a description is kept per thread and
//! can be read with [`irs_last_error_message`]. Channel realizations and
//! optimization results are opaque handles that must be released with
//! their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, UnwindSafe};
use std::ptr;

use irs_core::beamform::{ao_optimize, mrt_rate, AoConfig, AoOutcome, ElementSolver};
use irs_core::channel::{ChannelSet, Geometry, LinkTag, PathLossConfig, TrialStreams};
use irs_core::circuit::{reflection_coefficient, CircuitParams, ElementState};
use irs_core::experiments::{init_phases, Powers};
use irs_core::phase_model::PhaseShiftModel;
use irs_core::IrsError;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IrsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    DegenerateResonance = 3,
    PhaseDomain = 4,
    InsufficientSamples = 5,
    SubReferenceDistance = 6,
    ZeroChannel = 7,
    IndexOutOfRange = 8,
    BufferTooSmall = 9,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IrsSolver {
    Quadratic = 0,
    OneD = 1,
    Discrete = 2,
    Align = 3,
}

fn solver_from_code(code: u32) -> Option<ElementSolver> {
    match code {
        c if c == IrsSolver::Quadratic as u32 => Some(ElementSolver::QuadraticFit),
        c if c == IrsSolver::OneD as u32 => Some(ElementSolver::OneDSearch),
        c if c == IrsSolver::Discrete as u32 => Some(ElementSolver::Discrete),
        c if c == IrsSolver::Align as u32 => Some(ElementSolver::PhaseAlignment),
        _ => None,
    }
}

/// One channel realization `(h_d, h_r, G)`.
pub struct IrsChannel(ChannelSet);

/// Phases and objective trace of one alternating optimization.
pub struct IrsAoResult(AoOutcome);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &IrsError) -> IrsStatus {
    match e {
        IrsError::DegenerateResonance { .. } => IrsStatus::DegenerateResonance,
        IrsError::PhaseDomain(_) => IrsStatus::PhaseDomain,
        IrsError::InsufficientSamples(_) => IrsStatus::InsufficientSamples,
        IrsError::SubReferenceDistance(_) => IrsStatus::SubReferenceDistance,
        IrsError::ZeroChannel => IrsStatus::ZeroChannel,
        IrsError::IndexOutOfRange { .. } => IrsStatus::IndexOutOfRange,
        IrsError::InvalidParameter(_) => IrsStatus::InvalidParameter,
    }
}

fn fail(status: IrsStatus, msg: impl Into<String>) -> IrsStatus {
    set_last_error(msg.into());
    status
}

/// Runs `body`, converting errors and panics into status codes.
fn guard<F>(body: F) -> IrsStatus
where
    F: FnOnce() -> Result<(), IrsStatus> + UnwindSafe,
{
    match catch_unwind(body) {
        Ok(Ok(())) => IrsStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(IrsStatus::Panic, "internal panic"),
    }
}

fn check<T>(r: irs_core::Result<T>) -> Result<T, IrsStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), IrsStatus> {
    if p.is_null() {
        Err(fail(IrsStatus::NullPointer, format!("{name} is NULL")))
    } else {
        Ok(())
    }
}

/// Message for the last failed call on this thread, or NULL.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn irs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// NUL-terminated library version.
#[no_mangle]
pub extern "C" fn irs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Reflection coefficient of one element at angular frequency `omega`.
///
/// # Safety
/// `out_re` and `out_im` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn irs_reflection_coefficient(
    l1: f64,
    l2: f64,
    z0: f64,
    omega: f64,
    c: f64,
    r: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> IrsStatus {
    guard(|| {
        non_null(out_re, "out_re")?;
        non_null(out_im, "out_im")?;
        let params = check(CircuitParams::new(l1, l2, z0, omega))?;
        let state = check(ElementState::new(c, r))?;
        let v = check(reflection_coefficient(&params, &state))?;
        *out_re = v.re;
        *out_im = v.im;
        Ok(())
    })
}

/// Reflection amplitude of the `(beta_min, phi, k)` model at `theta` in `[-pi, pi]`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn irs_model_amplitude(beta_min: f64, phi: f64, k: f64, theta: f64, out: *mut f64) -> IrsStatus {
    guard(|| {
        non_null(out, "out")?;
        let model = check(PhaseShiftModel::new(beta_min, phi, k))?;
        *out = check(model.amplitude(theta))?;
        Ok(())
    })
}

/// Draws the channels of `trial` under `seed` for AP-user distance `d`,
/// with the default geometry and path loss otherwise.
///
/// # Safety
/// `out` must be valid for writes. The handle written there must be freed
/// with [`irs_channel_free`].
#[no_mangle]
pub unsafe extern "C" fn irs_channel_sample(
    seed: u64,
    trial: u64,
    d: f64,
    m: usize,
    n: usize,
    out: *mut *mut IrsChannel,
) -> IrsStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        if m == 0 || n == 0 {
            return Err(fail(IrsStatus::InvalidParameter, "m and n must be at least 1"));
        }
        let geom = Geometry::default().with_d(d);
        check(geom.validate())?;
        let ch = check(TrialStreams::new(seed).sample(trial, &geom, &PathLossConfig::default(), m, n))?;
        *out = Box::into_raw(Box::new(IrsChannel(ch)));
        Ok(())
    })
}

/// # Safety
/// `ch` must be NULL or a handle from [`irs_channel_sample`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn irs_channel_free(ch: *mut IrsChannel) {
    if !ch.is_null() {
        drop(Box::from_raw(ch));
    }
}

/// # Safety
/// `ch` must be a live channel handle; `m` and `n` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn irs_channel_dims(ch: *const IrsChannel, m: *mut usize, n: *mut usize) -> IrsStatus {
    guard(|| {
        non_null(ch, "ch")?;
        non_null(m, "m")?;
        non_null(n, "n")?;
        *m = (*ch).0.antennas();
        *n = (*ch).0.elements();
        Ok(())
    })
}

/// Alternating optimization of the reflection phases under the
/// `(beta_min, phi, k)` model, with default tolerances and the element
/// solver `solver` (an [`IrsSolver`] value). Starts from the same phases
/// as the experiment harness uses for `trial` under `seed`.
///
/// # Safety
/// `ch` must be a live channel handle and `out` valid for writes. The
/// result must be freed with [`irs_ao_result_free`].
#[no_mangle]
pub unsafe extern "C" fn irs_optimize(
    ch: *const IrsChannel,
    beta_min: f64,
    phi: f64,
    k: f64,
    solver: u32,
    seed: u64,
    trial: u64,
    out: *mut *mut IrsAoResult,
) -> IrsStatus {
    guard(|| {
        non_null(ch, "ch")?;
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let model = check(PhaseShiftModel::new(beta_min, phi, k))?;
        let ch = &(*ch).0;
        let init = init_phases(&mut TrialStreams::new(seed).rng(trial, LinkTag::InitPhases), ch.elements());
        let solver = solver_from_code(solver)
            .ok_or_else(|| fail(IrsStatus::InvalidParameter, format!("unknown solver code {solver}")))?;
        let cfg = AoConfig::default().with_solver(solver);
        let outcome = check(ao_optimize(ch, &model, &cfg, &init))?;
        *out = Box::into_raw(Box::new(IrsAoResult(outcome)));
        Ok(())
    })
}

/// # Safety
/// `res` must be NULL or a handle from [`irs_optimize`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn irs_ao_result_free(res: *mut IrsAoResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

/// Copies the optimized phases into `buf`, which holds `len` values.
///
/// # Safety
/// `res` must be a live result handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn irs_ao_result_phases(res: *const IrsAoResult, buf: *mut f64, len: usize) -> IrsStatus {
    guard(|| {
        non_null(res, "res")?;
        non_null(buf, "buf")?;
        let thetas = (*res).0.state.thetas();
        if len < thetas.len() {
            return Err(fail(
                IrsStatus::BufferTooSmall,
                format!("need {} values, buffer holds {len}", thetas.len()),
            ));
        }
        std::slice::from_raw_parts_mut(buf, thetas.len()).copy_from_slice(thetas);
        Ok(())
    })
}

/// Final objective `||v^H Phi + h_d^H||^2` and number of sweeps.
///
/// # Safety
/// `res` must be a live result handle; the out-pointers valid for writes.
#[no_mangle]
pub unsafe extern "C" fn irs_ao_result_summary(
    res: *const IrsAoResult,
    objective: *mut f64,
    sweeps: *mut usize,
    converged: *mut bool,
) -> IrsStatus {
    guard(|| {
        non_null(res, "res")?;
        non_null(objective, "objective")?;
        non_null(sweeps, "sweeps")?;
        non_null(converged, "converged")?;
        let o = &(*res).0;
        *objective = o.objective();
        *sweeps = o.sweeps;
        *converged = o.converged;
        Ok(())
    })
}

/// Achievable rate (bps/Hz) with MRT transmit beamforming for an optimized
/// reflection state, with powers in dBm.
///
/// # Safety
/// `ch` and `res` must be live handles from the same realization; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn irs_rate(
    ch: *const IrsChannel,
    res: *const IrsAoResult,
    p_t_dbm: f64,
    sigma2_dbm: f64,
    out: *mut f64,
) -> IrsStatus {
    guard(|| {
        non_null(ch, "ch")?;
        non_null(res, "res")?;
        non_null(out, "out")?;
        let powers = Powers::from_dbm(p_t_dbm, sigma2_dbm);
        let ch = &(*ch).0;
        let state = &(*res).0.state;
        if state.len() != ch.elements() {
            return Err(fail(IrsStatus::InvalidParameter, "result and channel sizes differ"));
        }
        *out = check(mrt_rate(state.v(), ch, powers.p_t, powers.sigma2))?;
        Ok(())
    })
}
