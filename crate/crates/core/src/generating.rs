//! Moment and cumulant generating functions of (λ_t, Q_t).
//!
//! G(δ, t) = log E[exp(δ₀λ_t + Σ δᵢQ_{t,i})] reduces along characteristics to
//! one scalar ODE for h(z) on [0, t] with h(t) = δ₀:
//!   h'(z) = 1 − e^{αh(z)} θᵀ x(z) + βh(z),   x(z) = v + e^{−S(z−t)}(e^{δ} − v),
//! and then G = βλ*∫₀ᵗ h(z)dz + h(0)λ₀. We integrate in s = t − z together
//! with x, which obeys x'(s) = S(x − v), x(0) = e^{δ}.

use crate::error::{Error, Result};
use crate::matrix_kit::{Matrix, Vector};
use crate::numeric::ode::integrate_monitored;
use crate::numeric::{integrate_fixed, OdeOptions};
use crate::queue_moments::QueueModel;

/// |h| beyond this is treated as blow-up.
pub const BLOWUP: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct CgfQuery {
    /// (δ₀, δ₁, …, δₙ)
    pub delta: Vec<f64>,
    pub t: f64,
}

impl CgfQuery {
    pub fn new(delta: Vec<f64>, t: f64) -> Self {
        Self { delta, t }
    }

    fn check(&self, m: &QueueModel) -> Result<()> {
        let n = m.phases();
        if self.delta.len() != n + 1 {
            return Err(Error::DimensionMismatch { expected: n + 1, got: self.delta.len() });
        }
        if self.delta.iter().any(|d| !d.is_finite()) {
            return Err(Error::InvalidParams("delta must be finite".into()));
        }
        if !(self.t >= 0.0) || !self.t.is_finite() {
            return Err(Error::InvalidParams(format!("time must be finite and nonnegative, got {}", self.t)));
        }
        Ok(())
    }
}

/// How the characteristic ODE is integrated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CgfMethod {
    Adaptive(OdeOptions),
    /// Fixed-step integration; the error is then smooth in δ, which finite
    /// differences of G rely on.
    Fixed(usize),
}

impl Default for CgfMethod {
    fn default() -> Self {
        CgfMethod::Adaptive(OdeOptions::with_tol(1e-11))
    }
}

/// G(δ, t).
pub fn cgf(m: &QueueModel, q: &CgfQuery) -> Result<f64> {
    cgf_with(m, q, CgfMethod::default())
}

pub fn cgf_with(m: &QueueModel, q: &CgfQuery, method: CgfMethod) -> Result<f64> {
    q.check(m)?;
    let n = m.phases();
    if q.t == 0.0 {
        // nothing has arrived and λ₀ is deterministic
        return Ok(q.delta[0] * m.arrivals.initial_intensity);
    }
    let p = &m.arrivals;
    let (a, b) = (p.jump, p.decay);
    let s = m.service.sub_generator();
    let theta = m.service.initial_dist();
    // state: [h, ∫h, x₁..xₙ]
    let mut y0 = vec![0.0; n + 2];
    y0[0] = q.delta[0];
    for i in 0..n {
        y0[2 + i] = q.delta[1 + i].exp();
    }
    let f = |_: f64, y: &[f64], d: &mut [f64]| {
        let h = y[0];
        let x = &y[2..];
        let tx: f64 = (0..n).map(|i| theta[i] * x[i]).sum();
        d[0] = -(1.0 - (a * h).exp() * tx + b * h);
        d[1] = h;
        for i in 0..n {
            d[2 + i] = (0..n).map(|j| s[(i, j)] * (x[j] - 1.0)).sum();
        }
    };
    let t = q.t;
    let monitor = |s: f64, y: &[f64]| {
        if !(y[0].abs() <= BLOWUP) {
            Err(Error::CgfBlowup { z: t - s })
        } else {
            Ok(())
        }
    };
    let y = match method {
        CgfMethod::Adaptive(opts) => integrate_monitored(f, 0.0, &y0, t, &opts, monitor),
        CgfMethod::Fixed(steps) => integrate_fixed(f, 0.0, &y0, t, steps.max(1), monitor),
    }
    .map_err(|e| match e {
        Error::Integration(_) => Error::CgfBlowup { z: f64::NAN },
        other => other,
    })?;
    Ok(b * p.baseline * y[1] + y[0] * p.initial_intensity)
}

/// E[exp(δ₀λ_t + Σ δᵢQ_{t,i})] = exp(G).
pub fn mgf(m: &QueueModel, q: &CgfQuery) -> Result<f64> {
    Ok(cgf(m, q)?.exp())
}

/// First and second cumulants of (λ_t, Q_t) read off G by central differences.
#[derive(Debug, Clone, PartialEq)]
pub struct FdMoments {
    /// (E[λ_t], E[Q_{t,1}], …)
    pub mean: Vector,
    /// covariance of (λ_t, Q_t)
    pub cov: Matrix,
}

fn fixed_steps(t: f64) -> usize {
    (200.0 * t).ceil().max(2000.0) as usize
}

/// Central finite differences of G at δ = 0 with step `step`.
pub fn fd_moments(m: &QueueModel, t: f64, step: f64) -> Result<FdMoments> {
    let d = m.phases() + 1;
    let method = CgfMethod::Fixed(fixed_steps(t));
    let g = |delta: Vec<f64>| cgf_with(m, &CgfQuery::new(delta, t), method);
    let unit = |i: usize, s: f64| {
        let mut v = vec![0.0; d];
        v[i] += s;
        v
    };
    let g0 = g(vec![0.0; d])?;
    let mut mean = Vector::zeros(d);
    let mut cov = Matrix::zeros(d, d);
    let mut plus = vec![0.0; d];
    let mut minus = vec![0.0; d];
    for i in 0..d {
        plus[i] = g(unit(i, step))?;
        minus[i] = g(unit(i, -step))?;
        mean[i] = (plus[i] - minus[i]) / (2.0 * step);
        cov[(i, i)] = (plus[i] - 2.0 * g0 + minus[i]) / (step * step);
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let mut pp = vec![0.0; d];
            pp[i] = step;
            pp[j] = step;
            let mut mm = pp.clone();
            mm[i] = -step;
            mm[j] = -step;
            let mut pm = pp.clone();
            pm[j] = -step;
            let mut mp = pp.clone();
            mp[i] = -step;
            let v = (g(pp)? - g(pm)? - g(mp)? + g(mm)?) / (4.0 * step * step);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    Ok(FdMoments { mean, cov })
}

/// |∂G/∂t − RHS| for the cumulant PDE
///   ∂G/∂t = δ₀βλ* + (Σθᵢ(e^{δ₀α+δᵢ} − 1) − δ₀β) ∂G/∂δ₀
///          + Σᵢ (μᵢ₀(e^{−δᵢ} − 1) + Σ_{k≠i} μᵢₖ(e^{δₖ−δᵢ} − 1)) ∂G/∂δᵢ,
/// with all derivatives by central differences of step `step`.
pub fn cgf_pde_residual(m: &QueueModel, q: &CgfQuery, step: f64) -> Result<f64> {
    q.check(m)?;
    let n = m.phases();
    let t = q.t;
    let method = CgfMethod::Fixed(fixed_steps(t + step));
    let g = |delta: &[f64], t: f64| cgf_with(m, &CgfQuery::new(delta.to_vec(), t), method);
    let dt = if t >= step {
        (g(&q.delta, t + step)? - g(&q.delta, t - step)?) / (2.0 * step)
    } else {
        (g(&q.delta, t + step)? - g(&q.delta, t)?) / step
    };
    let mut grad = vec![0.0; n + 1];
    for (i, gi) in grad.iter_mut().enumerate() {
        let mut up = q.delta.clone();
        let mut down = q.delta.clone();
        up[i] += step;
        down[i] -= step;
        *gi = (g(&up, t)? - g(&down, t)?) / (2.0 * step);
    }
    let p = &m.arrivals;
    let (a, b) = (p.jump, p.decay);
    let s = m.service.sub_generator();
    let theta = m.service.initial_dist();
    let exits = m.service.exit_rates();
    let d = &q.delta;
    let arrival: f64 = (0..n).map(|i| theta[i] * ((d[0] * a + d[1 + i]).exp() - 1.0)).sum();
    let mut rhs = d[0] * b * p.baseline + (arrival - d[0] * b) * grad[0];
    for i in 0..n {
        let mut c = exits[i] * ((-d[1 + i]).exp() - 1.0);
        for k in 0..n {
            if k != i {
                c += s[(i, k)] * ((d[1 + k] - d[1 + i]).exp() - 1.0);
            }
        }
        rhs += c * grad[1 + i];
    }
    Ok((dt - rhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hawkes::HawkesParams;
    use crate::phase_type::PhaseTypeDist;

    fn model() -> QueueModel {
        QueueModel::new(HawkesParams::new(1.0, 0.5, 0.75, 1.3).unwrap(), PhaseTypeDist::exponential(1.0).unwrap())
    }

    #[test]
    fn zero_delta_is_zero() {
        assert_eq!(cgf(&model(), &CgfQuery::new(vec![0.0, 0.0], 3.0)).unwrap(), 0.0);
        assert_eq!(mgf(&model(), &CgfQuery::new(vec![0.0, 0.0], 3.0)).unwrap(), 1.0);
    }

    #[test]
    fn intensity_derivative_is_mean_intensity() {
        let m = model();
        let fd = fd_moments(&m, 2.0, 1e-4).unwrap();
        let want = crate::hawkes::mean_intensity(&m.arrivals, 2.0).unwrap();
        assert!((fd.mean[0] - want).abs() < 1e-7, "{} vs {want}", fd.mean[0]);
    }

    #[test]
    fn large_delta_blows_up() {
        let m = QueueModel::new(HawkesParams::at_baseline(1.0, 0.9, 1.0).unwrap(), PhaseTypeDist::exponential(0.1).unwrap());
        let e = cgf(&m, &CgfQuery::new(vec![3.0, 3.0], 20.0)).unwrap_err();
        assert!(matches!(e, Error::CgfBlowup { .. }), "{e:?}");
    }

    #[test]
    fn wrong_length_rejected() {
        assert!(matches!(
            cgf(&model(), &CgfQuery::new(vec![0.0], 1.0)),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
