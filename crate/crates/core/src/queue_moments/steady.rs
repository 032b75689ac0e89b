//! Stationary moments and transient means under unstable arrivals.

use super::{check_time, QueueModel};
use crate::error::{Error, Result};
use crate::matrix_kit::{expm, inverse, shifted_inverse, solve_lyapunov, Matrix, Vector};

#[derive(Debug, Clone, PartialEq)]
pub struct QueueSteadyState {
    /// Q∞
    pub mean: Vector,
    /// C∞
    pub cov_lq: Vector,
    /// V∞
    pub cov_qq: Matrix,
}

/// Q∞ = λ∞(−Sᵀ)⁻¹θ, C∞ = λ∞ α(2β−α)/(2(β−α)) ((β−α)I − Sᵀ)⁻¹θ, and V∞ from
/// SᵀV∞ + V∞S + M = 0 with M = θC∞ᵀ + C∞θᵀ − Sᵀdiag(Q∞) − diag(Q∞)S.
pub fn steady_state(m: &QueueModel) -> Result<QueueSteadyState> {
    let k = m.arrivals.stable_gap()?;
    let p = &m.arrivals;
    let li = p.decay * p.baseline / k;
    let s = m.service.sub_generator();
    let st = s.transpose();
    let theta = m.service.initial_dist();
    let mean = inverse(&-&st)? * theta * li;
    let cov_lq = shifted_inverse(&-&st, k)? * theta * (li * p.jump * (2.0 * p.decay - p.jump) / (2.0 * k));
    let dq = Matrix::from_diagonal(&mean);
    let forcing = theta * cov_lq.transpose() + &cov_lq * theta.transpose() - &st * &dq - &dq * s;
    let cov_qq = solve_lyapunov(s, &forcing)?;
    Ok(QueueSteadyState { mean, cov_lq, cov_qq })
}

/// E[Q_t] when α ≥ β.
pub fn unstable_mean(m: &QueueModel, t: f64) -> Result<Vector> {
    check_time(t)?;
    let p = &m.arrivals;
    if p.is_stable() {
        return Err(Error::StableProcess { jump: p.jump, decay: p.decay });
    }
    let st = m.service.sub_generator().transpose();
    let n = st.nrows();
    let id = Matrix::identity(n, n);
    let theta = m.service.initial_dist();
    let et = expm(&(&st * t))?;
    let inv_st = inverse(&st)?;
    let bl = p.decay * p.baseline;
    let g = p.jump - p.decay;
    if g == 0.0 {
        return Ok(-(&inv_st * (&id - &et) * theta) * (p.initial_intensity - bl) - &inv_st * theta * (bl * t));
    }
    let growth = shifted_inverse(&-&st, g)? * (&id * (g * t).exp() - &et) * theta * (bl / g + p.initial_intensity);
    Ok(growth + inv_st * (&id - et) * theta * (bl / g))
}
