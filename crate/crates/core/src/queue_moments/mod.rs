//! Moments of the Hawkes/PH/∞ queue: closed forms, specialisations for
//! Erlang and hyper-exponential service, an ODE oracle, steady state,
//! unstable arrivals and auto-covariances.

mod autocov;
mod closed_form;
mod erlang;
mod hyperexp;
mod reference;
mod steady;

use rayon::prelude::*;
use serde::Serialize;

pub use autocov::{
    monolithic_autocov, monolithic_autocov_check, autocov_q, autocov_q_ode, minf_autocov, MonolithicReport,
};
pub use closed_form::{closed_form_cov_lq, closed_form_cov_qq, closed_form_mean, closed_form_moments};
pub use erlang::erlang_moments;
pub use hyperexp::hyperexp_moments;
pub use reference::{ode_reference, ode_reference_curve, ode_reference_with};
pub use steady::{steady_state, unstable_mean, QueueSteadyState};

use crate::error::{Error, Result};
use crate::hawkes::HawkesParams;
use crate::matrix_kit::{Matrix, Vector};
use crate::phase_type::{PhaseKind, PhaseTypeDist};

#[derive(Debug, Clone, PartialEq)]
pub struct QueueModel {
    pub arrivals: HawkesParams,
    pub service: PhaseTypeDist,
}

impl QueueModel {
    pub fn new(arrivals: HawkesParams, service: PhaseTypeDist) -> Self {
        Self { arrivals, service }
    }

    pub fn phases(&self) -> usize {
        self.service.phases()
    }
}

/// How a value was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Route {
    /// General closed form.
    ClosedForm,
    /// Closed form for a coincident-rate case.
    SingularBranch,
    /// Numerical integration of the moment ODEs.
    OdeFallback,
}

impl Route {
    pub fn combine(self, other: Route) -> Route {
        self.max(other)
    }

    pub fn label(self) -> &'static str {
        match self {
            Route::ClosedForm => "closed",
            Route::SingularBranch => "singular",
            Route::OdeFallback => "ode",
        }
    }
}

/// A value tagged with the route that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Routed<T> {
    pub value: T,
    pub route: Route,
}

/// E[Q_t], Cov[λ_t, Q_t] and Cov[Q_t, Q_t] at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueMoments {
    pub t: f64,
    pub mean: Vector,
    pub cov_lq: Vector,
    pub cov_qq: Matrix,
    pub route: Route,
}

impl QueueMoments {
    pub(crate) fn zeros(n: usize, route: Route) -> Self {
        Self { t: 0.0, mean: Vector::zeros(n), cov_lq: Vector::zeros(n), cov_qq: Matrix::zeros(n, n), route }
    }

    pub fn total_mean(&self) -> f64 {
        self.mean.sum()
    }

    pub fn total_variance(&self) -> f64 {
        self.cov_qq.sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentCurve {
    pub grid: Vec<f64>,
    pub mean_q: Vec<Vector>,
    pub cov_lq: Vec<Vector>,
    pub cov_qq: Vec<Matrix>,
    pub routes: Vec<Route>,
}

fn is_singular_case(e: &Error) -> bool {
    matches!(e, Error::NearSingularGap { .. } | Error::SingularShiftedMatrix { .. } | Error::SingularMatrix)
}

/// All three moments, choosing the best available route: the general closed
/// form, then the specialised singular branches, then the ODE.
pub fn moments(m: &QueueModel, t: f64) -> Result<QueueMoments> {
    check_time(t)?;
    m.arrivals.stable_gap().or_else(|e| match e {
        Error::NearSingularGap { .. } => Ok(0.0),
        other => Err(other),
    })?;
    match closed_form_moments(m, t) {
        Ok(v) => Ok(v),
        Err(e) if is_singular_case(&e) => match m.service.kind() {
            PhaseKind::Erlang { .. } => erlang_moments(m, t),
            PhaseKind::HyperExponential { .. } => hyperexp_moments(m, t),
            PhaseKind::General => ode_reference(m, t),
        },
        Err(e) => Err(e),
    }
}

pub fn mean_vector(m: &QueueModel, t: f64) -> Result<Routed<Vector>> {
    check_time(t)?;
    match closed_form_mean(m, t) {
        Ok(v) => Ok(Routed { value: v, route: Route::ClosedForm }),
        Err(e) if is_singular_case(&e) => moments(m, t).map(|q| Routed { value: q.mean, route: q.route }),
        Err(e) => Err(e),
    }
}

pub fn cov_lambda_q(m: &QueueModel, t: f64) -> Result<Routed<Vector>> {
    check_time(t)?;
    match closed_form_cov_lq(m, t) {
        Ok(v) => Ok(Routed { value: v, route: Route::ClosedForm }),
        Err(e) if is_singular_case(&e) => moments(m, t).map(|q| Routed { value: q.cov_lq, route: q.route }),
        Err(e) => Err(e),
    }
}

pub fn cov_matrix(m: &QueueModel, t: f64) -> Result<Routed<Matrix>> {
    check_time(t)?;
    match closed_form_cov_qq(m, t) {
        Ok(v) => Ok(Routed { value: v, route: Route::ClosedForm }),
        Err(e) if is_singular_case(&e) => moments(m, t).map(|q| Routed { value: q.cov_qq, route: q.route }),
        Err(e) => Err(e),
    }
}

/// Moments over a time grid, one independent task per time point.
pub fn moment_curve(m: &QueueModel, grid: &[f64]) -> Result<MomentCurve> {
    let points: Vec<QueueMoments> = grid.par_iter().map(|&t| moments(m, t)).collect::<Result<_>>()?;
    Ok(MomentCurve {
        grid: grid.to_vec(),
        mean_q: points.iter().map(|p| p.mean.clone()).collect(),
        cov_lq: points.iter().map(|p| p.cov_lq.clone()).collect(),
        cov_qq: points.iter().map(|p| p.cov_qq.clone()).collect(),
        routes: points.iter().map(|p| p.route).collect(),
    })
}

pub(crate) fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidParams(format!("time must be finite and nonnegative, got {t}")));
    }
    Ok(())
}

/// Smallest |λ_i(S) + k| over the eigenvalues of S.
pub(crate) fn shift_gap(s: &Matrix, k: f64) -> f64 {
    s.clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| ((z.re + k).powi(2) + z.im.powi(2)).sqrt())
        .fold(f64::INFINITY, f64::min)
}
