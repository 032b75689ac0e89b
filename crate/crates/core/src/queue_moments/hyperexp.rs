//! Hyper-exponential service: S = −diag(μ), elementwise closed forms.

use super::{check_time, ode_reference, QueueModel, QueueMoments, Route};
use crate::error::{Error, Result};
use crate::hawkes::GAP_TOL;
use crate::matrix_kit::{exp_convolution, Matrix, Vector};
use crate::phase_type::PhaseKind;

fn near(x: f64, y: f64) -> bool {
    (x - y).abs() < GAP_TOL
}

struct Coeffs {
    a: f64,
    b: f64,
    k: f64,
    li: f64,
    l0: f64,
}

impl Coeffs {
    fn d(&self) -> f64 {
        self.l0 - self.li
    }

    /// Weights of the three exponentials e^{−pks}, p = 0, 1, 2, in Cov[λ_s, Q_s]/θ.
    fn cov_weights(&self) -> [f64; 3] {
        let (a, k, li, l0) = (self.a, self.k, self.li, self.l0);
        [li * (a + a * a / (2.0 * k)), (l0 - li) * (a + a * a / k), -a * a * (2.0 * l0 - li) / (2.0 * k)]
    }
}

fn mean_phase(c: &Coeffs, mu: f64, th: f64, t: f64) -> f64 {
    let k = c.k;
    if !near(mu, k) {
        c.li / mu * (1.0 - (-mu * t).exp()) * th + c.d() / (mu - k) * ((-k * t).exp() - (-mu * t).exp()) * th
    } else {
        c.li / mu * (1.0 - (-mu * t).exp()) * th + c.d() * th * t * (-mu * t).exp()
    }
}

fn cov_lq_phase(c: &Coeffs, mu: f64, th: f64, t: f64) -> f64 {
    let Coeffs { a, b, k, li, l0 } = *c;
    let ex = |r: f64| (-r * t).exp();
    if !near(mu, k) {
        a * th * (2.0 * b - a) * li / (2.0 * k * (mu + k)) * (1.0 - ex(mu + k))
            + a * b * th * (l0 - li) / (mu * k) * (ex(k) - ex(mu + k))
            - a * a * th * (2.0 * l0 - li) / (2.0 * k * (mu - k)) * (ex(2.0 * k) - ex(mu + k))
    } else {
        a * th * (2.0 * mu + a) * li / (4.0 * mu * mu) * (1.0 - ex(2.0 * mu))
            + a * b * th * (l0 - li) / (mu * mu) * (ex(mu) - ex(2.0 * mu))
            - a * a * th * (2.0 * l0 - li) / (2.0 * mu) * t * ex(2.0 * mu)
    }
}

fn var_phase(c: &Coeffs, mu: f64, th: f64, t: f64) -> f64 {
    let Coeffs { a, b, k, li, l0 } = *c;
    let d = l0 - li;
    let ex = |r: f64| (-r * t).exp();
    let tt = th * th;
    let head = li * th / mu * (1.0 - ex(mu)) + a * tt * (2.0 * b - a) * li / (2.0 * mu * k * (mu + k)) * (1.0 - ex(2.0 * mu));
    let mid = (a * tt * (2.0 * b - a) * li / (k * (mu + k)) + 2.0 * a * b * tt * d / (mu * k)
        - a * a * tt * (2.0 * l0 - li) / (k * (mu - k)))
        * (ex(mu + k) - ex(2.0 * mu))
        / (mu - k);
    let weight = d * th + mu * d * th / (mu - k) + 2.0 * a * b * tt * d / (mu * k);
    let tail = -a * a * tt * (2.0 * l0 - li) / (2.0 * k * (mu - k).powi(2)) * (ex(2.0 * k) - ex(2.0 * mu))
        - d * th / (mu - k) * (ex(mu) - ex(2.0 * mu));
    if near(2.0 * mu, k) {
        head - mid + weight * t * ex(2.0 * mu) + tail
    } else {
        head - mid + weight * (ex(k) - ex(2.0 * mu)) / (2.0 * mu - k) + tail
    }
}

/// One of the two symmetric halves of the off-diagonal covariance for
/// μᵢ ≠ β − α ≠ μⱼ.
fn off_half(c: &Coeffs, mi: f64, mj: f64, ti: f64, tj: f64, t: f64) -> f64 {
    let Coeffs { a, b, k, li, l0 } = *c;
    let ex = |r: f64| (-r * t).exp();
    let s = mi + mj;
    a * ti * tj * (2.0 * b - a) * li / (2.0 * k * (mj + k))
        * ((1.0 - ex(s)) / s - (ex(mj + k) - ex(s)) / (mi - k))
        + a * b * ti * tj * (l0 - li) / (mj * k) * ((ex(k) - ex(s)) / (s - k) - (ex(mj + k) - ex(s)) / (mi - k))
        - a * a * ti * tj * (2.0 * l0 - li) / (2.0 * k * (mj - k))
            * ((ex(2.0 * k) - ex(s)) / (s - 2.0 * k) - (ex(mj + k) - ex(s)) / (mi - k))
}

/// θᵢθⱼ ∫₀ᵗ e^{−(μᵢ+μⱼ)(t−s)} [e^{−μⱼ ·}∗ + e^{−μᵢ ·}∗] Cov[λ, ·] ds, evaluated
/// through iterated exponential convolutions; valid for any rates.
fn cross_by_convolution(c: &Coeffs, mi: f64, mj: f64, ti: f64, tj: f64, t: f64) -> Result<f64> {
    let w = c.cov_weights();
    let mut acc = 0.0;
    for (p, wp) in w.iter().enumerate() {
        let pk = p as f64 * c.k;
        acc += wp
            * (exp_convolution(&[mi + mj, mj + c.k, pk], t)? + exp_convolution(&[mi + mj, mi + c.k, pk], t)?);
    }
    Ok(ti * tj * acc)
}

/// Elementwise closed forms for hyper-exponential service.
///
/// Cases with a vanishing denominator that has no dedicated formula
/// (μᵢ + μⱼ = β − α or 2(β − α) for i ≠ j) fall back to the ODE oracle.
pub fn hyperexp_moments(m: &QueueModel, t: f64) -> Result<QueueMoments> {
    check_time(t)?;
    let rates = match m.service.kind() {
        PhaseKind::HyperExponential { rates, .. } => rates.clone(),
        _ => return Err(Error::InvalidParams("hyperexp_moments needs hyper-exponential service".into())),
    };
    let k = m.arrivals.stable_gap()?;
    let p = &m.arrivals;
    let c = Coeffs { a: p.jump, b: p.decay, k, li: p.decay * p.baseline / k, l0: p.initial_intensity };
    let theta = m.service.initial_dist();
    let n = rates.len();

    for i in 0..n {
        for j in 0..i {
            let s = rates[i] + rates[j];
            if near(s, k) || near(s, 2.0 * k) {
                return ode_reference(m, t);
            }
        }
    }

    let mut route = Route::ClosedForm;
    let mean = Vector::from_fn(n, |i, _| mean_phase(&c, rates[i], theta[i], t));
    let cov_lq = Vector::from_fn(n, |i, _| cov_lq_phase(&c, rates[i], theta[i], t));
    let mut cov = Matrix::zeros(n, n);
    for i in 0..n {
        let (mi, ti) = (rates[i], theta[i]);
        if near(mi, k) {
            // the te^{−μt} variance branch
            cov[(i, i)] = cross_by_convolution(&c, mi, mi, ti, ti, t)? + mean[i];
            route = Route::SingularBranch;
        } else {
            if near(2.0 * mi, k) {
                route = Route::SingularBranch;
            }
            cov[(i, i)] = var_phase(&c, mi, ti, t);
        }
        for j in 0..i {
            let (mj, tj) = (rates[j], theta[j]);
            let v = if near(mi, k) || near(mj, k) {
                route = Route::SingularBranch;
                cross_by_convolution(&c, mi, mj, ti, tj, t)?
            } else {
                off_half(&c, mi, mj, ti, tj, t) + off_half(&c, mj, mi, tj, ti, t)
            };
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    Ok(QueueMoments { t, mean, cov_lq, cov_qq: cov, route })
}
