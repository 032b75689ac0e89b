//! General phase-type closed forms for E[Q_t], Cov[λ_t, Q_t], Cov[Q_t, Q_t].

use super::{check_time, shift_gap, QueueModel, QueueMoments, Route};
use crate::error::{Error, Result};
use crate::hawkes::GAP_TOL;
use crate::matrix_kit::{expm, inverse, m_matrix_propagated, shifted_inverse, Matrix, Vector};

/// Shared pieces of the closed forms at one time.
pub(crate) struct Pieces {
    pub n: usize,
    pub s: Matrix,
    pub st: Matrix,
    pub theta: Vector,
    pub a: f64,
    pub b: f64,
    pub k: f64,
    pub li: f64,
    pub l0: f64,
    /// e^{Sᵀt}
    pub e_t: Matrix,
    /// e^{−kt}
    pub e: f64,
    /// (−Sᵀ)⁻¹
    pub inv_neg_st: Matrix,
    /// (Sᵀ + kI)⁻¹
    pub inv_st_k: Matrix,
    /// (kI − Sᵀ)⁻¹
    pub inv_k_st: Matrix,
}

impl Pieces {
    pub fn new(m: &QueueModel, t: f64) -> Result<Self> {
        check_time(t)?;
        let k = m.arrivals.stable_gap()?;
        let s = m.service.sub_generator().clone();
        let st = s.transpose();
        let n = s.nrows();
        let gap = shift_gap(&s, k);
        if gap < GAP_TOL {
            return Err(Error::NearSingularGap { gap });
        }
        let inv_st_k = shifted_inverse(&st, k)?;
        let inv_k_st = shifted_inverse(&-&st, k)?;
        let inv_neg_st = inverse(&-&st)?;
        let p = &m.arrivals;
        Ok(Self {
            n,
            e_t: expm(&(&st * t))?,
            s,
            st,
            theta: m.service.initial_dist().clone(),
            a: p.jump,
            b: p.decay,
            k,
            li: p.decay * p.baseline / k,
            l0: p.initial_intensity,
            e: (-k * t).exp(),
            inv_neg_st,
            inv_st_k,
            inv_k_st,
        })
    }

    fn id(&self) -> Matrix {
        Matrix::identity(self.n, self.n)
    }

    pub fn mean(&self) -> Vector {
        let id = self.id();
        &self.inv_neg_st * (&id - &self.e_t) * &self.theta * self.li
            - &self.inv_st_k * (&id * self.e - &self.e_t) * &self.theta * (self.l0 - self.li)
    }

    pub fn cov_lq(&self) -> Result<Vector> {
        let (a, b, k, li, l0, e) = (self.a, self.b, self.k, self.li, self.l0, self.e);
        let id = self.id();
        let f = &self.e_t * e;
        let inv_st = inverse(&self.st)?;
        Ok(&self.inv_k_st * (&id - &f) * &self.theta * (a * (2.0 * b - a) * li / (2.0 * k))
            - inv_st * (&id * e - &f) * &self.theta * (a * b * (l0 - li) / k)
            + &self.inv_st_k * (&id * (e * e) - &f) * &self.theta * (a * a * (2.0 * l0 - li) / (2.0 * k)))
    }

    pub fn cov_qq(&self, t: f64) -> Result<Matrix> {
        let (a, b, k, li, l0, e) = (self.a, self.b, self.k, self.li, self.l0, self.e);
        let id = self.id();
        let s = &self.s;
        let st = &self.st;
        let big_e = &self.e_t;
        let es = big_e.transpose();
        let tt = &self.theta * self.theta.transpose();
        // e^{Sᵀt} M_{γ,θ,S}(t) e^{St} for γ = 0 and γ = −k
        let p0 = m_matrix_propagated(0.0, &self.theta, s, t)?;
        let pk = m_matrix_propagated(-k, &self.theta, s, t)?;
        let inv_k_s = shifted_inverse(s, k)?;
        let inv_k_st = &self.inv_st_k;
        let k_minus_s = &id * k - s;
        let k_minus_st = &id * k - st;
        let inv_s = inverse(s)?;
        let inv_st = inv_s.transpose();
        let e_minus_es = &id * e - &es;
        let e_minus_e = &id * e - big_e;
        let ete = big_e * &tt * &es;

        let a1 = &p0 * (2.0 * k) + &tt - &ete
            + big_e * &tt * &e_minus_es * &inv_k_s * &k_minus_s
            + &k_minus_st * inv_k_st * &e_minus_e * &tt * &es;
        let t1 = &self.inv_k_st * a1 * self.inv_k_st.transpose() * (a * (2.0 * b - a) * li / (2.0 * k));

        let a2 = &pk * k + &tt * e - &ete
            - big_e * &tt * &e_minus_es * &inv_k_s * s
            - st * inv_k_st * &e_minus_e * &tt * &es;
        let t2 = &inv_st * a2 * &inv_s * (a * b * (l0 - li) / k);

        let a3 = &tt * (e * e) - &ete - big_e * &tt * &e_minus_es - &e_minus_e * &tt * &es;
        let t3 = inv_k_st * a3 * &inv_k_s * (-a * a * (2.0 * l0 - li) / (2.0 * k));

        let d1 = &inv_st * (&id - big_e) * &self.theta;
        let d2 = inv_k_st * &e_minus_e * &self.theta;
        let c = t1 + t2 + t3 - Matrix::from_diagonal(&d1) * li - Matrix::from_diagonal(&d2) * (l0 - li);
        Ok((&c + c.transpose()) * 0.5)
    }
}

pub fn closed_form_mean(m: &QueueModel, t: f64) -> Result<Vector> {
    Ok(Pieces::new(m, t)?.mean())
}

pub fn closed_form_cov_lq(m: &QueueModel, t: f64) -> Result<Vector> {
    Pieces::new(m, t)?.cov_lq()
}

pub fn closed_form_cov_qq(m: &QueueModel, t: f64) -> Result<Matrix> {
    Pieces::new(m, t)?.cov_qq(t)
}

pub fn closed_form_moments(m: &QueueModel, t: f64) -> Result<QueueMoments> {
    let p = Pieces::new(m, t)?;
    Ok(QueueMoments { t, mean: p.mean(), cov_lq: p.cov_lq()?, cov_qq: p.cov_qq(t)?, route: Route::ClosedForm })
}
