//! Web-traffic calculators: what one extra click at time 0 is worth.
//!
//! A page's visitors arrive as a Hawkes process and stay an Exp(μ) time.
//! N̂, Q̂ denote the count and occupancy with an extra arrival at time 0.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hawkes::{lambda_inf, HawkesParams, GAP_TOL};
use crate::numeric::{integrate_scalar, QuadOptions};
use crate::phase_type::PhaseTypeDist;
use crate::queue_moments::{mean_vector, QueueModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClickImpactQuery {
    pub arrivals: HawkesParams,
    /// exponential dwell rate μ
    pub mu: f64,
    /// revenue per visitor per unit time
    pub m: f64,
    /// T
    pub horizon: f64,
}

impl ClickImpactQuery {
    pub fn validate(&self) -> Result<()> {
        self.arrivals.validate()?;
        self.arrivals.stable_gap()?;
        if !(self.mu > 0.0) || !(self.m >= 0.0) || !(self.horizon >= 0.0) {
            return Err(Error::InvalidParams("need mu > 0, m >= 0 and T >= 0".into()));
        }
        if !self.mu.is_finite() || !self.m.is_finite() || !self.horizon.is_finite() {
            return Err(Error::InvalidParams("click query values must be finite".into()));
        }
        Ok(())
    }
}

/// E[N̂_t] − E[N_t] = β/(β−α) − (α/(β−α))e^{−(β−α)t}.
pub fn count_gap(p: &HawkesParams, t: f64) -> Result<f64> {
    let k = p.stable_gap()?;
    Ok(p.decay / k - p.jump / k * (-k * t).exp())
}

/// lim_{t→∞} of `count_gap`: β/(β−α).
pub fn count_gap_limit(p: &HawkesParams) -> Result<f64> {
    Ok(p.decay / p.stable_gap()?)
}

/// σ(T) = ∫₀ᵀ E[Q_t] dt for the unclicked process.
pub fn dwell_time(q: &ClickImpactQuery) -> Result<f64> {
    q.validate()?;
    let p = &q.arrivals;
    let k = p.gap();
    let (mu, t) = (q.mu, q.horizon);
    let li = lambda_inf(p)?;
    if (mu - k).abs() < GAP_TOL {
        let model = QueueModel::new(*p, PhaseTypeDist::exponential(mu)?);
        return integrate_scalar(
            |s| mean_vector(&model, s).map(|v| v.value[0]).unwrap_or(f64::NAN),
            0.0,
            t,
            &QuadOptions::default(),
        );
    }
    let em = (1.0 - (-mu * t).exp()) / mu;
    let ek = (1.0 - (-k * t).exp()) / k;
    Ok(li / mu * (t - em) + (p.initial_intensity - li) / (mu - k) * (ek - em))
}

/// Â(T) − A(T) = m(1 − e^{−μT})/μ + mα/(μ−(β−α)) ((1 − e^{−(β−α)T})/(β−α) − (1 − e^{−μT})/μ).
pub fn revenue_gap(q: &ClickImpactQuery) -> Result<f64> {
    q.validate()?;
    let k = q.arrivals.gap();
    let (mu, t, m, a) = (q.mu, q.horizon, q.m, q.arrivals.jump);
    if (mu - k).abs() < GAP_TOL {
        return Err(Error::NearSingularGap { gap: (mu - k).abs() });
    }
    let em = (1.0 - (-mu * t).exp()) / mu;
    let ek = (1.0 - (-k * t).exp()) / k;
    Ok(m * em + m * a / (mu - k) * (ek - em))
}

/// lim_{T→∞} of `revenue_gap`: m/μ + mα/(μ(β−α)).
pub fn revenue_gap_limit(q: &ClickImpactQuery) -> Result<f64> {
    q.validate()?;
    let k = q.arrivals.gap();
    Ok(q.m / q.mu + q.m * q.arrivals.jump / (q.mu * k))
}
