//! Erlang service: Sᵀ = nμ(N − I) with N the subdiagonal shift and θ = v₁.

use super::{check_time, QueueModel, QueueMoments, Route};
use crate::error::{Error, Result};
use crate::hawkes::GAP_TOL;
use crate::matrix_kit::{expm, inverse, power_exp_integral, Matrix, Vector};
use crate::phase_type::PhaseKind;

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// ∫₀ᵗ e^{γ(t−u)} e^{Sᵀu} v₁v₁ᵀ e^{Su} du, entrywise:
/// e^{γt} r^{i+j−2} / ((i−1)!(j−1)!) ∫₀ᵗ u^{i+j−2} e^{−(2r+γ)u} du (1-based i, j).
fn propagated_m(n: usize, r: f64, gamma: f64, t: f64) -> Matrix {
    Matrix::from_fn(n, n, |i, j| {
        let p = (i + j) as u32;
        (gamma * t).exp() * r.powi(p as i32) / (factorial(i as u32) * factorial(j as u32))
            * power_exp_integral(p, 2.0 * r + gamma, t)
    })
}

/// Closed forms for Erlang service, including the coincident case nμ = β − α.
pub fn erlang_moments(m: &QueueModel, t: f64) -> Result<QueueMoments> {
    check_time(t)?;
    let (n, rate) = match m.service.kind() {
        PhaseKind::Erlang { phases, rate } => (*phases, *rate),
        _ => return Err(Error::InvalidParams("erlang_moments needs Erlang service".into())),
    };
    let k = m.arrivals.stable_gap()?;
    let p = &m.arrivals;
    let (a, b, l0) = (p.jump, p.decay, p.initial_intensity);
    let li = b * p.baseline / k;
    let nm = n as f64 * rate;
    let id = Matrix::identity(n, n);
    let sub = Matrix::from_fn(n, n, |i, j| if i == j + 1 { 1.0 } else { 0.0 });
    let v = Vector::from_element(n, 1.0);
    let mut v1 = Vector::zeros(n);
    v1[0] = 1.0;
    let big_v1 = &v1 * v1.transpose();
    let e = (-k * t).exp();
    let big_e = expm(&((&sub - &id) * (nm * t)))?;
    let et = big_e.transpose();

    if t == 0.0 {
        return Ok(QueueMoments::zeros(n, Route::ClosedForm));
    }

    if (nm - k).abs() >= GAP_TOL {
        // P = (nμNᵀ − (nμ − k)I)⁻¹, Q = (nμ + k)I − nμNᵀ
        let p_mat = inverse(&(sub.transpose() * nm - &id * (nm - k)))?;
        let q_mat = &id * (nm + k) - sub.transpose() * nm;
        let mean = (&id - &big_e) * &v * (li / nm)
            - p_mat.transpose() * (&id * e - &big_e) * &v1 * (l0 - li);
        let f = &big_e * e;
        let cov_lq = inverse(&q_mat.transpose())? * (&id - &f) * &v1 * (li * (a + a * a / (2.0 * k)))
            + (&id * e - &f) * &v * (a * b * (l0 - li) / (nm * k))
            + p_mat.transpose() * (&id * (e * e) - &f) * &v1 * (a * a * (2.0 * l0 - li) / (2.0 * k));

        let w0 = propagated_m(n, nm, 0.0, t);
        let wk = propagated_m(n, nm, -k, t);
        let ev = &big_e * &big_v1 * &et;
        let e_minus_et = &id * e - &et;
        let e_minus_e = &id * e - &big_e;
        let a1 = &w0 * (2.0 * k) + &big_v1 - &ev
            + &big_e * &big_v1 * &e_minus_et * &p_mat * &q_mat
            + q_mat.transpose() * p_mat.transpose() * &e_minus_e * &big_v1 * &et;
        let t1 = inverse(&q_mat.transpose())? * a1 * inverse(&q_mat)? * (a * (2.0 * b - a) * li / (2.0 * k));
        let n_i = &sub - &id;
        let a2 = &wk * k + &big_v1 * e - &ev
            - &big_e * &big_v1 * &e_minus_et * &p_mat * n_i.transpose() * nm
            - &n_i * p_mat.transpose() * &e_minus_e * &big_v1 * &et * nm;
        let t2 = inverse(&n_i)? * a2 * inverse(&n_i.transpose())? * (a * b * (l0 - li) / (nm * nm * k));
        let a3 = &big_v1 * (e * e) - &ev - &big_e * &big_v1 * &e_minus_et - &e_minus_e * &big_v1 * &et;
        let t3 = p_mat.transpose() * a3 * &p_mat * (-a * a * (2.0 * l0 - li) / (2.0 * k));
        let d1 = (&id - &big_e) * &v * (li / nm);
        let d2 = p_mat.transpose() * &e_minus_e * &v1 * (l0 - li);
        let c = t1 + t2 + t3 + Matrix::from_diagonal(&d1) - Matrix::from_diagonal(&d2);
        let cov_qq = (&c + c.transpose()) * 0.5;
        return Ok(QueueMoments { t, mean, cov_lq, cov_qq, route: Route::ClosedForm });
    }

    // nμ = β − α: polynomial-exponential terms x(t)
    let r = nm;
    let x = Vector::from_fn(n, |i, _| (-r).powi(i as i32) * t.powi(i as i32 + 1) / factorial(i as u32 + 1));
    let mean = (&id - &big_e) * &v * (li / r) + &big_e * &x * (l0 - li);
    let g = expm(&((&sub - &id * 2.0) * (r * t)))?;
    let two_minus_n = &id * 2.0 - &sub;
    let cov_lq = inverse(&two_minus_n)? * (&id - &g) * &v1 * (li * (a / r + a * a / (2.0 * r * r)))
        + (&id * (-r * t).exp() - &g) * &v * ((l0 - li) * (a / r + a * a / (r * r)))
        - &g * &x * (a * a * (2.0 * l0 - li) / (2.0 * r));

    // Cov[Q_t, Q_t] = diag(E[Q_t]) + K + Kᵀ with
    // K = ∫₀ᵗ e^{Sᵀ(t−s)} θ Cov[λ_s, Q_s]ᵀ e^{S(t−s)} ds evaluated entrywise.
    let a0 = li * (a + a * a / (2.0 * r));
    let a1 = (l0 - li) * (a + a * a / r);
    let a2 = -a * a * (2.0 * l0 - li) / (2.0 * r);
    let kmat = Matrix::from_fn(n, n, |i, j| {
        let (ia, jb) = (i as u32 + 1, j as u32 + 1);
        let p = ia + jb - 1;
        r.powi(p as i32 - 1) / (factorial(ia) * factorial(jb - 1))
            * (a0 * power_exp_integral(p, 2.0 * r, t)
                + a1 * (-r * t).exp() * power_exp_integral(p, r, t)
                + a2 * (-2.0 * r * t).exp() * t.powi(p as i32 + 1) / f64::from(p + 1))
    });
    let cov_qq = Matrix::from_diagonal(&mean) + &kmat + kmat.transpose();
    Ok(QueueMoments { t, mean, cov_lq, cov_qq, route: Route::SingularBranch })
}
