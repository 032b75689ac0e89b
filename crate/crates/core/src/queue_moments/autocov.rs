//! Cov[Q_t, Q_{t−τ}] for the Hawkes/PH/∞ queue.

use super::closed_form::Pieces;
use super::{check_time, hyperexp_moments, moments, QueueModel, Route, Routed};
use crate::error::Result;
use crate::hawkes::{HawkesParams, GAP_TOL};
use crate::matrix_kit::{expm, shifted_inverse, Matrix, Vector};
use crate::numeric::{integrate, OdeOptions};
use crate::phase_type::PhaseTypeDist;

/// b(τ) = ∫₀^τ e^{Sᵀ(τ−s)} θ e^{−ks} ds, which equals
/// −(Sᵀ + kI)⁻¹(e^{−kτ}I − e^{Sᵀτ})θ when the shifted matrix is invertible.
fn arrival_response(st: &Matrix, theta: &Vector, k: f64, tau: f64) -> Result<(Vector, bool)> {
    let n = st.nrows();
    let id = Matrix::identity(n, n);
    match shifted_inverse(st, k) {
        Ok(inv) if super::shift_gap(&st.transpose(), k) >= GAP_TOL => {
            let v = -(inv * (&id * (-k * tau).exp() - expm(&(st * tau))?) * theta);
            Ok((v, false))
        }
        _ => {
            // top-right block of exp([[Sᵀ, θ], [0, −k]] τ)
            let mut aug = Matrix::zeros(n + 1, n + 1);
            aug.view_mut((0, 0), (n, n)).copy_from(st);
            for i in 0..n {
                aug[(i, n)] = theta[i];
            }
            aug[(n, n)] = -k;
            let e = expm(&(aug * tau))?;
            Ok((Vector::from_fn(n, |i, _| e[(i, n)]), true))
        }
    }
}

/// Cov[Q_t, Q_{t−τ}] composed from the moments at t − τ and t through
/// E[Q_t | F_{t−τ}] = λ∞(−Sᵀ)⁻¹(I − e^{Sᵀτ})θ + (λ_{t−τ} − λ∞) b(τ) + e^{Sᵀτ}Q_{t−τ}.
/// Rows index Q_t, columns Q_{t−τ}. Zero when t < τ.
pub fn autocov_q(m: &QueueModel, t: f64, tau: f64) -> Result<Routed<Matrix>> {
    check_time(t)?;
    check_time(tau)?;
    let n = m.phases();
    if t <= tau {
        return Ok(Routed { value: Matrix::zeros(n, n), route: Route::ClosedForm });
    }
    let k = m.arrivals.stable_gap()?;
    let p = &m.arrivals;
    let li = p.decay * p.baseline / k;
    let u = t - tau;
    let at_u = moments(m, u)?;
    let at_t = super::mean_vector(m, t)?;
    let st = m.service.sub_generator().transpose();
    let theta = m.service.initial_dist();
    let id = Matrix::identity(n, n);
    let e_tau = expm(&(&st * tau))?;
    let (b, singular) = arrival_response(&st, theta, k, tau)?;
    let mean_intensity_u = li + (p.initial_intensity - li) * (-k * u).exp();
    let steady_part = crate::matrix_kit::inverse(&-&st)? * (&id - &e_tau) * theta * li;

    let mu = &at_u.mean;
    let cross = &at_u.cov_lq + mu * mean_intensity_u;
    let second = &steady_part * mu.transpose() + &b * cross.transpose() - &b * mu.transpose() * li
        + &e_tau * (&at_u.cov_qq + mu * mu.transpose());
    let value = second - &at_t.value * mu.transpose();
    let mut route = at_u.route.combine(at_t.route);
    if singular {
        route = route.combine(Route::SingularBranch);
    }
    Ok(Routed { value, route })
}

/// Oracle for Cov[Q_t, Q_{t−τ}]: integrate the moment ODEs to t − τ, then
/// dX/dτ = SᵀX + θYᵀ, dY/dτ = −(β − α)Y with X(0) = Cov[Q, Q], Y(0) = Cov[λ, Q].
pub fn autocov_q_ode(m: &QueueModel, t: f64, tau: f64, opts: &OdeOptions) -> Result<Matrix> {
    check_time(t)?;
    check_time(tau)?;
    let n = m.phases();
    if t <= tau {
        return Ok(Matrix::zeros(n, n));
    }
    let start = super::ode_reference_with(m, t - tau, opts)?;
    let s = m.service.sub_generator().clone();
    let theta = m.service.initial_dist().clone();
    let k = m.arrivals.gap();
    let mut y0 = vec![0.0; n * n + n];
    for i in 0..n {
        for j in 0..n {
            y0[i * n + j] = start.cov_qq[(i, j)];
        }
        y0[n * n + i] = start.cov_lq[i];
    }
    let f = |_: f64, y: &[f64], d: &mut [f64]| {
        let yv = &y[n * n..];
        for i in 0..n {
            for j in 0..n {
                let mut acc = theta[i] * yv[j];
                for l in 0..n {
                    acc += s[(l, i)] * y[l * n + j];
                }
                d[i * n + j] = acc;
            }
            d[n * n + i] = -k * yv[i];
        }
    };
    let y = integrate(f, 0.0, &y0, tau, opts)?;
    Ok(Matrix::from_fn(n, n, |i, j| y[i * n + j]))
}

/// Comparison of the literal monolithic expression with the composed identity.
#[derive(Debug, Clone, PartialEq)]
pub struct MonolithicReport {
    pub literal: Matrix,
    pub corrected: Matrix,
    pub composed: Matrix,
    /// max |literal − composed|
    pub literal_error: f64,
    /// max |corrected − composed|
    pub corrected_error: f64,
}

fn monolithic_terms(m: &QueueModel, t: f64, tau: f64) -> Result<(Matrix, Vector, Vector, Vector)> {
    // returns (everything except the trailing outer product, its left factor,
    // E[Q_t] for the trailing factor as stated, E[Q_{t−τ}])
    let u = t - tau;
    let pu = Pieces::new(m, u)?;
    let pt = Pieces::new(m, t)?;
    let (k, li, l0) = (pu.k, pu.li, pu.l0);
    let n = pu.n;
    let id = Matrix::identity(n, n);
    let st = &pu.st;
    let theta = &pu.theta;
    let e_tau = expm(&(st * tau))?;
    let mean_u = pu.mean();
    let mean_t = pt.mean();

    let first = &pu.inv_neg_st * (&id - &e_tau) * theta * li * mean_u.transpose();
    let b_neg = &pu.inv_st_k * (&id * (-k * tau).exp() - &e_tau) * theta;
    let cov_lq_u = pu.cov_lq()?;
    let intensity_u = li + (l0 - li) * (-k * u).exp();
    let second = -(&b_neg * (cov_lq_u + &mean_u * intensity_u).transpose());
    let third = &b_neg * mean_u.transpose() * li;
    // the (kI − Sᵀ)⁻¹, (Sᵀ)⁻¹ and (kI + Sᵀ)⁻¹ prefactors commute with e^{Sᵀτ}
    let blocks = &e_tau * pu.cov_qq(u)?;
    let e_t = expm(&(st * t))?;
    let lead = &pu.inv_neg_st * (&e_tau - &id) * theta * li
        - &pu.inv_st_k
            * (&e_tau * (-k * u).exp() - &id * (-k * t).exp() + &e_t - &e_t)
            * theta
            * (l0 - li);
    Ok((first + second + third + blocks, lead, mean_t, mean_u))
}

/// The single-expression auto-covariance with E[Q_t]ᵀ in the trailing factor,
/// evaluated as stated. It disagrees with [`autocov_q`] whenever τ > 0.
pub fn monolithic_autocov(m: &QueueModel, t: f64, tau: f64) -> Result<Matrix> {
    check_time(t)?;
    check_time(tau)?;
    if t <= tau {
        return Ok(Matrix::zeros(m.phases(), m.phases()));
    }
    let (body, lead, mean_t, _) = monolithic_terms(m, t, tau)?;
    Ok(body + lead * mean_t.transpose())
}

/// The same expression with the trailing factor E[Q_t]ᵀ replaced by
/// E[Q_{t−τ}]ᵀ, which is what the conditional-expectation identity yields.
pub fn monolithic_autocov_check(m: &QueueModel, t: f64, tau: f64) -> Result<MonolithicReport> {
    let literal = monolithic_autocov(m, t, tau)?;
    let n = m.phases();
    let corrected = if t <= tau {
        Matrix::zeros(n, n)
    } else {
        let (body, lead, _, mean_u) = monolithic_terms(m, t, tau)?;
        body + lead * mean_u.transpose()
    };
    let composed = autocov_q(m, t, tau)?.value;
    Ok(MonolithicReport {
        literal_error: (&literal - &composed).amax(),
        corrected_error: (&corrected - &composed).amax(),
        literal,
        corrected,
        composed,
    })
}

/// Scalar auto-covariance of the Hawkes/M/∞ queue with service rate μ.
///
/// For μ ≠ β − α this is the explicit form with
/// h(s) = (e^{−(β−α)s} − e^{−2μs})/(2μ − β + α), or s e^{−2μs} when 2μ = β − α.
/// For μ = β − α the value is composed from the single-phase moments.
pub fn minf_autocov(p: &HawkesParams, mu: f64, t: f64, tau: f64) -> Result<f64> {
    check_time(t)?;
    check_time(tau)?;
    let k = p.stable_gap()?;
    if t <= tau {
        return Ok(0.0);
    }
    let (a, b, l0) = (p.jump, p.decay, p.initial_intensity);
    let li = b * p.baseline / k;
    let d = l0 - li;
    let u = t - tau;
    let ex = f64::exp;
    if (mu - k).abs() >= GAP_TOL {
        let h = |s: f64| {
            if (2.0 * mu - k).abs() < GAP_TOL {
                s * ex(-2.0 * mu * s)
            } else {
                (ex(-k * s) - ex(-2.0 * mu * s)) / (2.0 * mu - k)
            }
        };
        let em = |s: f64| li / mu * (1.0 - ex(-mu * s)) + d / (mu - k) * (ex(-k * s) - ex(-mu * s));
        let v = li / mu * (1.0 - ex(-mu * tau)) * em(u) + li / mu * (ex(-mu * tau) - ex(-mu * t))
            + a * (2.0 * b - a) * li / (2.0 * mu * k * (mu + k)) * (ex(-mu * tau) - ex(-mu * (2.0 * t - tau)))
            - (a * (2.0 * b - a) * li / (k * (mu + k)) + 2.0 * a * b * d / (mu * k)
                - a * a * (2.0 * l0 - li) / (k * (mu - k)))
                * (ex(-(mu + k) * t + k * tau) - ex(-mu * (2.0 * t - tau)))
                / (mu - k)
            + (d + mu * d / (mu - k) + 2.0 * a * b * d / (mu * k)) * h(u) * ex(-mu * tau)
            - a * a * (2.0 * l0 - li) / (2.0 * k * (mu - k).powi(2))
                * (ex(-2.0 * k * t - (mu - 2.0 * k) * tau) - ex(-mu * (2.0 * t - tau)))
            - d / (mu - k) * (ex(-mu * t) - ex(-mu * (2.0 * t - tau)))
            + ex(-mu * tau) * em(u).powi(2)
            + (ex(-k * tau) - ex(-mu * tau)) / (mu - k)
                * (a * (2.0 * b - a) * li / (2.0 * k * (mu + k)) * (1.0 - ex(-(mu + k) * u))
                    + a * b * d / (mu * k) * (ex(-k * u) - ex(-(mu + k) * u))
                    - a * a * (2.0 * l0 - li) / (2.0 * k * (mu - k)) * (ex(-2.0 * k * u) - ex(-(mu + k) * u)))
            + d * (ex(-k * tau) - ex(-mu * tau)) / (mu - k)
                * (d / (mu - k) * (ex(-2.0 * k * u) - ex(-(mu + k) * u)) + li / mu * (ex(-k * u) - ex(-(mu + k) * u)))
            - em(t) * em(u);
        return Ok(v);
    }
    // μ = β − α: compose from the single-phase moments
    let model = QueueModel::new(*p, PhaseTypeDist::hyperexp(&[1.0], &[mu])?);
    let at_u = hyperexp_moments(&model, u)?;
    let mean_t = hyperexp_moments(&model, t)?.mean[0];
    let (m_u, c_u, v_u) = (at_u.mean[0], at_u.cov_lq[0], at_u.cov_qq[(0, 0)]);
    let intensity_u = li + d * ex(-k * u);
    let g = tau * ex(-mu * tau);
    Ok(li / mu * (1.0 - ex(-mu * tau)) * m_u + ex(-mu * tau) * v_u + c_u * g + (intensity_u - li) * m_u * g
        + ex(-mu * tau) * m_u * m_u
        - mean_t * m_u)
}
