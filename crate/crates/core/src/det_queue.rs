//! The Hawkes/D/∞ queue: every arrival stays exactly D time units, so
//! Q_t = N_t − N_{t−D}. All second moments come from C(t, τ) = Cov[N_t, N_{t−τ}].

use crate::error::{Error, Result};
use crate::hawkes::{autocov_count, lambda_inf, HawkesParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetQueueModel {
    pub arrivals: HawkesParams,
    /// D
    pub service_length: f64,
}

impl DetQueueModel {
    pub fn new(arrivals: HawkesParams, service_length: f64) -> Result<Self> {
        arrivals.validate()?;
        if !(service_length > 0.0) || !service_length.is_finite() {
            return Err(Error::InvalidParams(format!("service length must be positive, got {service_length}")));
        }
        Ok(Self { arrivals, service_length })
    }
}

fn check(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidParams(format!("time must be finite and nonnegative, got {t}")));
    }
    Ok(())
}

/// E[Q_t].
pub fn mean(m: &DetQueueModel, t: f64) -> Result<f64> {
    check(t)?;
    let p = &m.arrivals;
    let k = p.stable_gap()?;
    let li = lambda_inf(p)?;
    let d = m.service_length;
    let diff = p.initial_intensity - li;
    if t <= d {
        Ok(li * t + diff / k * (1.0 - (-k * t).exp()))
    } else {
        Ok(li * d + diff / k * ((-k * (t - d)).exp() - (-k * t).exp()))
    }
}

/// Var[Q_t].
pub fn variance(m: &DetQueueModel, t: f64) -> Result<f64> {
    check(t)?;
    let p = &m.arrivals;
    let d = m.service_length;
    let c = |x: f64, y: f64| autocov_count(p, x, y);
    if t <= d {
        c(t, 0.0)
    } else {
        Ok(c(t, 0.0)? + c(t - d, 0.0)? - 2.0 * c(t, d)?)
    }
}

/// Cov[Q_t, Q_{t−τ}], piecewise in t relative to τ and D.
pub fn autocov(m: &DetQueueModel, t: f64, tau: f64) -> Result<f64> {
    check(t)?;
    check(tau)?;
    let p = &m.arrivals;
    p.stable_gap()?;
    let d = m.service_length;
    let c = |x: f64, y: f64| autocov_count(p, x, y);
    if t <= tau {
        return Ok(0.0);
    }
    if tau >= d {
        if t <= tau + d {
            Ok(c(t, tau)? - c(t - d, tau - d)?)
        } else {
            Ok(c(t, tau)? + c(t - d, tau)? - c(t, tau + d)? - c(t - d, tau - d)?)
        }
    } else if t <= d {
        c(t, tau)
    } else if t <= tau + d {
        Ok(c(t, tau)? - c(t - tau, d - tau)?)
    } else {
        Ok(c(t, tau)? + c(t - d, tau)? - c(t, tau + d)? - c(t - tau, d - tau)?)
    }
}

/// Stationary variance with deterministic service of length D.
pub fn steady_variance_det(p: &HawkesParams, d: f64) -> Result<f64> {
    let k = p.stable_gap()?;
    let li = lambda_inf(p)?;
    let (a, b) = (p.jump, p.decay);
    let x = 2.0 * a * b - a * a;
    Ok(li * d * (1.0 + x / (k * k)) - li * (1.0 - (-k * d).exp()) * x / k.powi(3))
}

/// Stationary variance with exponential service of rate μ.
pub fn steady_variance_exp(p: &HawkesParams, mu: f64) -> Result<f64> {
    let k = p.stable_gap()?;
    let li = lambda_inf(p)?;
    let (a, b) = (p.jump, p.decay);
    Ok(li / mu * (1.0 + a * (2.0 * b - a) / (2.0 * k * (mu + k))))
}

/// V_D − V_M with μ = 1/D: how much more the stationary occupancy varies
/// under deterministic service than under exponential service of equal mean.
pub fn variance_gap_dm(p: &HawkesParams, d: f64) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::InvalidParams(format!("service length must be positive, got {d}")));
    }
    Ok(steady_variance_det(p, d)? - steady_variance_exp(p, 1.0 / d)?)
}
