//! Numerical integration of the first and second moment ODEs of the queue.
//!
//! With k = β − α, m = E[Q], c = Cov[λ, Q], V = Cov[Q, Q]:
//!   dE[λ]/dt  = βλ* − k E[λ]
//!   dVar[λ]/dt = −2k Var[λ] + α² E[λ]
//!   dm/dt = θ E[λ] + Sᵀ m
//!   dc/dt = (Sᵀ − kI) c + αθ E[λ] + θ Var[λ]
//!   dV/dt = SᵀV + VS + θcᵀ + cθᵀ + diag(θE[λ] + Sᵀm) − Sᵀdiag(m) − diag(m)S
//! These hold for any α ≥ 0, so the oracle also covers unstable arrivals.

use super::{check_time, QueueModel, QueueMoments, Route};
use crate::error::Result;
use crate::matrix_kit::{Matrix, Vector};
use crate::numeric::{integrate, integrate_grid, OdeOptions};

struct System {
    n: usize,
    s: Vec<f64>,
    theta: Vec<f64>,
    a: f64,
    k: f64,
    drive: f64,
}

impl System {
    fn new(m: &QueueModel) -> Self {
        let s = m.service.sub_generator();
        let n = s.nrows();
        let p = &m.arrivals;
        Self {
            n,
            s: (0..n * n).map(|idx| s[(idx / n, idx % n)]).collect(),
            theta: m.service.initial_dist().iter().cloned().collect(),
            a: p.jump,
            k: p.decay - p.jump,
            drive: p.decay * p.baseline,
        }
    }

    fn dim(&self) -> usize {
        2 + 2 * self.n + self.n * self.n
    }

    // S[i][j] stored row-major
    fn sij(&self, i: usize, j: usize) -> f64 {
        self.s[i * self.n + j]
    }

    fn rhs(&self, y: &[f64], d: &mut [f64]) {
        let n = self.n;
        let (el, vl) = (y[0], y[1]);
        let m = &y[2..2 + n];
        let c = &y[2 + n..2 + 2 * n];
        let v = &y[2 + 2 * n..];
        d[0] = self.drive - self.k * el;
        d[1] = -2.0 * self.k * vl + self.a * self.a * el;
        let mut stm = vec![0.0; n];
        for i in 0..n {
            // (Sᵀ m)_i = Σ_j S_ji m_j
            stm[i] = (0..n).map(|j| self.sij(j, i) * m[j]).sum();
            d[2 + i] = self.theta[i] * el + stm[i];
            let stc: f64 = (0..n).map(|j| self.sij(j, i) * c[j]).sum();
            d[2 + n + i] = stc - self.k * c[i] + self.a * self.theta[i] * el + self.theta[i] * vl;
        }
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for l in 0..n {
                    acc += self.sij(l, i) * v[l * n + j] + v[i * n + l] * self.sij(l, j);
                }
                acc += self.theta[i] * c[j] + c[i] * self.theta[j];
                acc -= self.sij(j, i) * m[j] + m[i] * self.sij(i, j);
                if i == j {
                    acc += self.theta[i] * el + stm[i];
                }
                d[2 + 2 * n + i * n + j] = acc;
            }
        }
    }

    fn initial(&self, l0: f64) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        y[0] = l0;
        y
    }

    fn unpack(&self, t: f64, y: &[f64]) -> QueueMoments {
        let n = self.n;
        let cov = Matrix::from_fn(n, n, |i, j| 0.5 * (y[2 + 2 * n + i * n + j] + y[2 + 2 * n + j * n + i]));
        QueueMoments {
            t,
            mean: Vector::from_column_slice(&y[2..2 + n]),
            cov_lq: Vector::from_column_slice(&y[2 + n..2 + 2 * n]),
            cov_qq: cov,
            route: Route::OdeFallback,
        }
    }
}

/// Moments by adaptive integration with tolerance 1e-10.
pub fn ode_reference(m: &QueueModel, t: f64) -> Result<QueueMoments> {
    ode_reference_with(m, t, &OdeOptions::default())
}

pub fn ode_reference_with(m: &QueueModel, t: f64, opts: &OdeOptions) -> Result<QueueMoments> {
    check_time(t)?;
    let sys = System::new(m);
    let y = integrate(|_, y, d| sys.rhs(y, d), 0.0, &sys.initial(m.arrivals.initial_intensity), t, opts)?;
    Ok(sys.unpack(t, &y))
}

/// Moments on a sorted grid from a single integration pass.
pub fn ode_reference_curve(m: &QueueModel, grid: &[f64], opts: &OdeOptions) -> Result<Vec<QueueMoments>> {
    for &t in grid {
        check_time(t)?;
    }
    let sys = System::new(m);
    let ys = integrate_grid(|_, y, d| sys.rhs(y, d), 0.0, &sys.initial(m.arrivals.initial_intensity), grid, opts)?;
    Ok(grid.iter().zip(ys).map(|(&t, y)| sys.unpack(t, &y)).collect())
}
