//! C ABI over `hawkes-queue`.
//!
//! A model is created with one of the `hq_model_*` constructors and released
//! with [`hq_model_free`]. Every fallible call returns an [`HqStatus`]; the
//! message of the most recent failure on the calling thread is available
//! through [`hq_last_error`]. Matrices are written row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hawkes_queue::generating::{cgf, CgfQuery};
use hawkes_queue::matrix_kit::{Matrix, Vector};
use hawkes_queue::queue_moments::{autocov_q, moments, steady_state};
use hawkes_queue::simulate::{estimate, ServiceSampler, Statistic};
use hawkes_queue::{Error, HawkesParams, PhaseTypeDist, QueueModel};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Unstable = 3,
    Singular = 4,
    NoConvergence = 5,
    Numeric = 6,
    Simulation = 7,
    Panic = 8,
}

impl From<&Error> for HqStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidParams(_)
            | Error::InvalidSubGenerator(_)
            | Error::InvalidInitialDist(_)
            | Error::DimensionMismatch { .. }
            | Error::NonSquare { .. }
            | Error::OrderCapExceeded { .. }
            | Error::DegenerateObjective
            | Error::Config(_)
            | Error::InsufficientReps(_) => HqStatus::InvalidArgument,
            Error::UnstableProcess { .. } | Error::StableProcess { .. } => HqStatus::Unstable,
            Error::NearSingularGap { .. }
            | Error::SingularMatrix
            | Error::SingularShiftedMatrix { .. }
            | Error::NonHurwitz { .. } => HqStatus::Singular,
            Error::NoConvergence { .. } => HqStatus::NoConvergence,
            Error::CgfBlowup { .. } | Error::Integration(_) => HqStatus::Numeric,
            Error::EventCapExceeded { .. } => HqStatus::Simulation,
        }
    }
}

/// Opaque queue model: Hawkes arrivals feeding a phase-type infinite-server queue.
pub struct HqModel {
    inner: QueueModel,
}

/// Point estimate and its standard error from a simulation run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HqEstimate {
    pub point: f64,
    pub std_error: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), HqStatus>) -> HqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HqStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            HqStatus::Panic
        }
    }
}

fn fail(e: Error) -> HqStatus {
    let s = HqStatus::from(&e);
    set_error(e.to_string());
    s
}

fn null(what: &str) -> HqStatus {
    set_error(format!("null pointer: {what}"));
    HqStatus::NullPointer
}

unsafe fn model_ref<'a>(m: *const HqModel) -> Result<&'a QueueModel, HqStatus> {
    m.as_ref().map(|m| &m.inner).ok_or_else(|| null("model"))
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], HqStatus> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn write_vec(v: &Vector, out: *mut f64) {
    if !out.is_null() {
        ptr::copy_nonoverlapping(v.as_ptr(), out, v.len());
    }
}

unsafe fn write_mat(m: &Matrix, out: *mut f64) {
    if out.is_null() {
        return;
    }
    let n = m.ncols();
    for i in 0..m.nrows() {
        for j in 0..n {
            *out.add(i * n + j) = m[(i, j)];
        }
    }
}

unsafe fn publish(model: QueueModel, out: *mut *mut HqModel) {
    *out = Box::into_raw(Box::new(HqModel { inner: model }));
}

fn arrivals(baseline: f64, jump: f64, decay: f64, initial: f64) -> Result<HawkesParams, HqStatus> {
    HawkesParams::new(baseline, jump, decay, initial).map_err(fail)
}

/// Builds a model from a general sub-generator `s` (n×n, row-major) and
/// initial phase distribution `theta` (length n).
///
/// # Safety
/// `s` must point to n*n doubles, `theta` to n doubles and `out` to writable
/// storage for one pointer. On success `*out` owns a model that must be
/// released with [`hq_model_free`].
#[no_mangle]
pub unsafe extern "C" fn hq_model_new(
    baseline: f64,
    jump: f64,
    decay: f64,
    initial_intensity: f64,
    s: *const f64,
    theta: *const f64,
    n: usize,
    out: *mut *mut HqModel,
) -> HqStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if n == 0 {
            return Err(fail(Error::InvalidParams("need at least one phase".into())));
        }
        let s = slice(s, n * n, "s")?;
        let theta = slice(theta, n, "theta")?;
        let p = arrivals(baseline, jump, decay, initial_intensity)?;
        let dist = PhaseTypeDist::new(Matrix::from_row_slice(n, n, s), Vector::from_column_slice(theta)).map_err(fail)?;
        publish(QueueModel::new(p, dist), out);
        Ok(())
    })
}

/// Builds a model with Erlang(`phases`, `rate`) service.
///
/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn hq_model_new_erlang(
    baseline: f64,
    jump: f64,
    decay: f64,
    initial_intensity: f64,
    phases: usize,
    rate: f64,
    out: *mut *mut HqModel,
) -> HqStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = arrivals(baseline, jump, decay, initial_intensity)?;
        let dist = PhaseTypeDist::erlang(phases, rate).map_err(fail)?;
        publish(QueueModel::new(p, dist), out);
        Ok(())
    })
}

/// Builds a model with hyper-exponential service: branch i is taken with
/// probability `theta[i]` and served at `rates[i]`.
///
/// # Safety
/// `theta` and `rates` must each point to n doubles and `out` to writable
/// storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn hq_model_new_hyperexp(
    baseline: f64,
    jump: f64,
    decay: f64,
    initial_intensity: f64,
    theta: *const f64,
    rates: *const f64,
    n: usize,
    out: *mut *mut HqModel,
) -> HqStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let theta = slice(theta, n, "theta")?;
        let rates = slice(rates, n, "rates")?;
        let p = arrivals(baseline, jump, decay, initial_intensity)?;
        let dist = PhaseTypeDist::hyperexp(theta, rates).map_err(fail)?;
        publish(QueueModel::new(p, dist), out);
        Ok(())
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must be null or a pointer obtained from an `hq_model_new*` call
/// that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn hq_model_free(model: *mut HqModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of service phases, or 0 for a null model.
///
/// # Safety
/// `model` must be null or a live model.
#[no_mangle]
pub unsafe extern "C" fn hq_model_phases(model: *const HqModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.phases())
}

/// Writes E[Q_t] (n), Cov[λ_t, Q_t] (n) and Cov[Q_t, Q_t] (n×n). Any output
/// pointer may be null to skip it.
///
/// # Safety
/// `model` must be a live model and each non-null output must have room for
/// the number of doubles listed above.
#[no_mangle]
pub unsafe extern "C" fn hq_moments(
    model: *const HqModel,
    t: f64,
    mean: *mut f64,
    cov_lq: *mut f64,
    cov_qq: *mut f64,
) -> HqStatus {
    guard(|| {
        let m = model_ref(model)?;
        let q = moments(m, t).map_err(fail)?;
        write_vec(&q.mean, mean);
        write_vec(&q.cov_lq, cov_lq);
        write_mat(&q.cov_qq, cov_qq);
        Ok(())
    })
}

/// Stationary counterparts of [`hq_moments`]; requires jump < decay.
///
/// # Safety
/// Same contract as [`hq_moments`].
#[no_mangle]
pub unsafe extern "C" fn hq_steady_state(
    model: *const HqModel,
    mean: *mut f64,
    cov_lq: *mut f64,
    cov_qq: *mut f64,
) -> HqStatus {
    guard(|| {
        let m = model_ref(model)?;
        let s = steady_state(m).map_err(fail)?;
        write_vec(&s.mean, mean);
        write_vec(&s.cov_lq, cov_lq);
        write_mat(&s.cov_qq, cov_qq);
        Ok(())
    })
}

/// Writes Cov[Q_t, Q_{t−τ}] (n×n) for 0 ≤ τ ≤ t.
///
/// # Safety
/// `model` must be a live model and `out` must have room for n*n doubles.
#[no_mangle]
pub unsafe extern "C" fn hq_autocov(model: *const HqModel, t: f64, tau: f64, out: *mut f64) -> HqStatus {
    guard(|| {
        let m = model_ref(model)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let c = autocov_q(m, t, tau).map_err(fail)?;
        write_mat(&c.value, out);
        Ok(())
    })
}

/// Joint cumulant generating function log E[exp(δ₀λ_t + Σ δᵢ Q_t,i)].
/// `delta` holds n + 1 entries, the intensity coefficient first.
///
/// # Safety
/// `model` must be a live model, `delta` must point to n + 1 doubles and
/// `out` to one writable double.
#[no_mangle]
pub unsafe extern "C" fn hq_cgf(model: *const HqModel, delta: *const f64, t: f64, out: *mut f64) -> HqStatus {
    guard(|| {
        let m = model_ref(model)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let delta = slice(delta, m.phases() + 1, "delta")?.to_vec();
        *out = cgf(m, &CgfQuery { delta, t }).map_err(fail)?;
        Ok(())
    })
}

/// Monte Carlo estimate of the total queue mean (`variance` = 0) or variance
/// (`variance` ≠ 0) at time t. Results depend only on `seed` and `reps`.
///
/// # Safety
/// `model` must be a live model and `out` must point to one writable
/// [`HqEstimate`].
#[no_mangle]
pub unsafe extern "C" fn hq_simulate(
    model: *const HqModel,
    t: f64,
    reps: usize,
    seed: u64,
    variance: i32,
    out: *mut HqEstimate,
) -> HqStatus {
    guard(|| {
        let m = model_ref(model)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let stat = if variance != 0 { Statistic::VarQ { t } } else { Statistic::MeanQ { t } };
        let sampler = ServiceSampler::PhaseType(m.service.clone());
        let r = estimate(&m.arrivals, &sampler, t, reps, &stat, seed).map_err(fail)?;
        *out = HqEstimate { point: r.point, std_error: r.std_error };
        Ok(())
    })
}

/// Message for the most recent failure on this thread, or null if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn hq_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}
