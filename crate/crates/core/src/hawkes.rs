//! The Hawkes process with exponential kernel: parameters, closed-form
//! transient and stationary moments, and the product-moment ODE system.
//!
//! Dynamics: dλ_t = β(λ* − λ_t)dt + α dN_t, with N₀ = 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{integrate, OdeOptions};

/// Gaps β − α below this are treated as singular.
pub const GAP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HawkesParams {
    /// λ*
    pub baseline: f64,
    /// α
    pub jump: f64,
    /// β
    pub decay: f64,
    /// λ₀
    pub initial_intensity: f64,
}

impl HawkesParams {
    pub fn new(baseline: f64, jump: f64, decay: f64, initial_intensity: f64) -> Result<Self> {
        let p = Self { baseline, jump, decay, initial_intensity };
        p.validate()?;
        Ok(p)
    }

    /// Starts the intensity at the baseline.
    pub fn at_baseline(baseline: f64, jump: f64, decay: f64) -> Result<Self> {
        Self::new(baseline, jump, decay, baseline)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.baseline, self.jump, self.decay, self.initial_intensity]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParams("non-finite Hawkes parameter".into()));
        }
        if self.baseline <= 0.0 || self.decay <= 0.0 {
            return Err(Error::InvalidParams("baseline and decay must be positive".into()));
        }
        if self.jump < 0.0 || self.initial_intensity < 0.0 {
            return Err(Error::InvalidParams("jump and initial intensity must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn is_stable(&self) -> bool {
        self.jump < self.decay
    }

    /// β − α
    pub fn gap(&self) -> f64 {
        self.decay - self.jump
    }

    /// β − α, checked to be safely positive.
    pub fn stable_gap(&self) -> Result<f64> {
        if !self.is_stable() {
            return Err(Error::UnstableProcess { jump: self.jump, decay: self.decay });
        }
        let k = self.gap();
        if k < GAP_TOL {
            return Err(Error::NearSingularGap { gap: k });
        }
        Ok(k)
    }

    /// Same process started from another intensity.
    pub fn with_initial(&self, initial_intensity: f64) -> Self {
        Self { initial_intensity, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HawkesMoments {
    pub t: f64,
    pub mean_intensity: f64,
    pub mean_count: f64,
    pub var_intensity: f64,
    pub var_count: f64,
    pub cov_intensity_count: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HawkesSteadyState {
    pub mean_intensity: f64,
    pub var_intensity: f64,
    pub cov_intensity_count: f64,
}

/// λ∞ = βλ*/(β − α).
pub fn lambda_inf(p: &HawkesParams) -> Result<f64> {
    let k = p.stable_gap()?;
    Ok(p.decay * p.baseline / k)
}

/// E[λ_t] for a stable process.
pub fn mean_intensity(p: &HawkesParams, t: f64) -> Result<f64> {
    crate::queue_moments::check_time(t)?;
    let k = p.stable_gap()?;
    let li = p.decay * p.baseline / k;
    Ok(li + (p.initial_intensity - li) * (-k * t).exp())
}

/// Closed-form transient moments of (λ_t, N_t).
pub fn transient_moments(p: &HawkesParams, t: f64) -> Result<HawkesMoments> {
    crate::queue_moments::check_time(t)?;
    let k = p.stable_gap()?;
    let (a, b, l0) = (p.jump, p.decay, p.initial_intensity);
    let li = b * p.baseline / k;
    let e = (-k * t).exp();
    let d = l0 - li;
    let mean_intensity = li + d * e;
    let mean_count = li * t + d / k * (1.0 - e);
    let var_intensity = a * a * li / (2.0 * k) + a * a * d / k * e - a * a * (2.0 * l0 - li) / (2.0 * k) * e * e;
    let var_count = b * b * li / (k * k) * t + a * a * (2.0 * l0 - li) / (2.0 * k.powi(3)) * (1.0 - e * e)
        - 2.0 * a * b * d / (k * k) * t * e
        + ((b + a) / (k * k) * d - 2.0 * a * b / k.powi(3) * li) * (1.0 - e);
    let cov_intensity_count = (a * li / k + a * a * li / (2.0 * k * k)) * (1.0 - e)
        + a * a * (2.0 * l0 - li) / (2.0 * k * k) * (e * e - e)
        + a * b * d / k * t * e;
    Ok(HawkesMoments { t, mean_intensity, mean_count, var_intensity, var_count, cov_intensity_count })
}

/// Limits of E[λ_t], Var[λ_t] and Cov[λ_t, N_t] as t → ∞.
pub fn steady_state(p: &HawkesParams) -> Result<HawkesSteadyState> {
    let k = p.stable_gap()?;
    let a = p.jump;
    let li = p.decay * p.baseline / k;
    Ok(HawkesSteadyState {
        mean_intensity: li,
        var_intensity: a * a * li / (2.0 * k),
        cov_intensity_count: a * li / k + a * a * li / (2.0 * k * k),
    })
}

/// (E[λ_t], E[N_t]) when α ≥ β.
pub fn unstable_means(p: &HawkesParams, t: f64) -> Result<(f64, f64)> {
    crate::queue_moments::check_time(t)?;
    if p.is_stable() {
        return Err(Error::StableProcess { jump: p.jump, decay: p.decay });
    }
    let (bl, l0) = (p.decay * p.baseline, p.initial_intensity);
    let g = p.jump - p.decay;
    if g == 0.0 {
        return Ok((bl * t + l0, bl / 2.0 * t * t + l0 * t));
    }
    let grow = (g * t).exp_m1();
    let lam = bl / g * grow + l0 * (g * t).exp();
    let count = (bl / (g * g) + l0 / g) * grow - bl / g * t;
    Ok((lam, count))
}

/// C(t, τ) = Cov[N_t, N_{t−τ}] for t ≥ τ ≥ 0, zero otherwise.
pub fn autocov_count(p: &HawkesParams, t: f64, tau: f64) -> Result<f64> {
    crate::queue_moments::check_time(t)?;
    crate::queue_moments::check_time(tau)?;
    let k = p.stable_gap()?;
    if !(t >= tau && tau >= 0.0) {
        return Ok(0.0);
    }
    let (a, b, l0) = (p.jump, p.decay, p.initial_intensity);
    let li = b * p.baseline / k;
    let u = t - tau;
    let k3 = k.powi(3);
    let first = a * (1.0 - (-k * tau).exp()) / (2.0 * k3)
        * ((2.0 * b - a) * li - 2.0 * (-k * u).exp() * (a * l0 + b * (li - l0) * k * u + k * li));
    let v = first + (li + 2.0 * a * li / k + a * a * li / (k * k)) * u
        + a * a * (2.0 * l0 - li) / (2.0 * k3) * (1.0 - (-k * (2.0 * t - tau)).exp())
        - 2.0 * a * b * (l0 - li) / (k * k) * u * (-k * u).exp()
        + ((b + a) / (k * k) * (l0 - li) - 2.0 * a * b / k3 * li) * (1.0 - (-k * u).exp());
    Ok(v)
}

/// Default cap on m + l for product moments.
pub const MOMENT_ORDER_CAP: usize = 4;

/// Closed linear ODE for E[λ^a N^b] over all a + b ≤ order.
///
/// Applying the generator A f = β(λ* − λ)∂_λ f + λ[f(λ+α, N+1) − f(λ, N)] to
/// λ^a N^b gives
/// d/dt E[λ^a N^b] = aβλ* E[λ^{a−1}N^b] − aβ E[λ^a N^b]
///   + Σ_{(j,k) ≠ (a,b), j ≤ a, k ≤ b} C(a,j) C(b,k) α^{a−j} E[λ^{j+1} N^k].
#[derive(Debug, Clone)]
pub struct ProductMomentSystem {
    order: usize,
    index: Vec<(usize, usize)>,
    rows: Vec<Vec<(usize, f64)>>,
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl ProductMomentSystem {
    pub fn new(p: &HawkesParams, order: usize) -> Self {
        let mut index = Vec::new();
        for total in 0..=order {
            for a in 0..=total {
                index.push((a, total - a));
            }
        }
        let pos = |a: usize, b: usize| index.iter().position(|&x| x == (a, b)).expect("moment index");
        let mut rows = Vec::with_capacity(index.len());
        for &(a, b) in &index {
            let mut row: Vec<(usize, f64)> = Vec::new();
            let mut add = |i: usize, c: f64| {
                if c == 0.0 {
                    return;
                }
                match row.iter_mut().find(|e| e.0 == i) {
                    Some(e) => e.1 += c,
                    None => row.push((i, c)),
                }
            };
            if a > 0 {
                add(pos(a - 1, b), a as f64 * p.decay * p.baseline);
                add(pos(a, b), -(a as f64) * p.decay);
            }
            for j in 0..=a {
                for k in 0..=b {
                    if (j, k) == (a, b) {
                        continue;
                    }
                    let c = binom(a, j) * binom(b, k) * p.jump.powi((a - j) as i32);
                    add(pos(j + 1, k), c);
                }
            }
            rows.push(row);
        }
        Self { order, index, rows }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Monomial exponents (a, b) of λ^a N^b in state order.
    pub fn index(&self) -> &[(usize, usize)] {
        &self.index
    }

    pub fn position(&self, a: usize, b: usize) -> Option<usize> {
        self.index.iter().position(|&x| x == (a, b))
    }

    /// Sparse coefficient row of d/dt E[λ^a N^b].
    pub fn row(&self, a: usize, b: usize) -> Option<&[(usize, f64)]> {
        self.position(a, b).map(|i| self.rows[i].as_slice())
    }

    pub fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        for (i, row) in self.rows.iter().enumerate() {
            dy[i] = row.iter().map(|&(j, c)| c * y[j]).sum();
        }
    }

    /// Initial state E[λ₀^a N₀^b] = λ₀^a [b = 0].
    pub fn initial_state(&self, p: &HawkesParams) -> Vec<f64> {
        self.index
            .iter()
            .map(|&(a, b)| if b == 0 { p.initial_intensity.powi(a as i32) } else { 0.0 })
            .collect()
    }

    pub fn solve(&self, p: &HawkesParams, t: f64, opts: &OdeOptions) -> Result<Vec<f64>> {
        let y0 = self.initial_state(p);
        integrate(|_, y, dy| self.rhs(y, dy), 0.0, &y0, t, opts)
    }
}

/// E[λ_t^m N_t^l] by integrating the product-moment system.
pub fn general_moment_ode(p: &HawkesParams, m: usize, l: usize, t: f64) -> Result<f64> {
    general_moment_ode_capped(p, m, l, t, MOMENT_ORDER_CAP)
}

pub fn general_moment_ode_capped(p: &HawkesParams, m: usize, l: usize, t: f64, cap: usize) -> Result<f64> {
    crate::queue_moments::check_time(t)?;
    if m + l > cap {
        return Err(Error::OrderCapExceeded { requested: m + l, cap });
    }
    let sys = ProductMomentSystem::new(p, m + l);
    let y = sys.solve(p, t, &OdeOptions::default())?;
    Ok(y[sys.position(m, l).expect("monomial in system")])
}

/// First and second moments by integrating their ODEs directly.
/// Valid for any α, β.
pub fn moments_by_ode(p: &HawkesParams, t: f64) -> Result<HawkesMoments> {
    crate::queue_moments::check_time(t)?;
    let (a, b, ls) = (p.jump, p.decay, p.baseline);
    let k = b - a;
    let f = |_: f64, y: &[f64], d: &mut [f64]| {
        // y = [E λ, E N, Var λ, Var N, Cov(λ, N)]
        d[0] = b * ls - k * y[0];
        d[1] = y[0];
        d[2] = -2.0 * k * y[2] + a * a * y[0];
        d[3] = 2.0 * y[4] + y[0];
        d[4] = -k * y[4] + y[2] + a * y[0];
    };
    let y = integrate(f, 0.0, &[p.initial_intensity, 0.0, 0.0, 0.0, 0.0], t, &OdeOptions::default())?;
    Ok(HawkesMoments {
        t,
        mean_intensity: y[0],
        mean_count: y[1],
        var_intensity: y[2],
        var_count: y[3],
        cov_intensity_count: y[4],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_inf_examples() {
        assert!((lambda_inf(&HawkesParams::at_baseline(1.0, 0.6, 1.0).unwrap()).unwrap() - 2.5).abs() < 1e-14);
        assert_eq!(lambda_inf(&HawkesParams::at_baseline(1.0, 0.0, 1.0).unwrap()).unwrap(), 1.0);
        assert!((lambda_inf(&HawkesParams::at_baseline(1.0, 0.75, 1.0).unwrap()).unwrap() - 4.0).abs() < 1e-14);
        assert!(matches!(
            lambda_inf(&HawkesParams::at_baseline(1.0, 1.0, 1.0).unwrap()),
            Err(Error::UnstableProcess { .. })
        ));
    }

    #[test]
    fn near_singular_gap_is_flagged() {
        let p = HawkesParams::at_baseline(1.0, 1.0 - 1e-10, 1.0).unwrap();
        assert!(matches!(transient_moments(&p, 1.0), Err(Error::NearSingularGap { .. })));
    }

    #[test]
    fn invalid_parameters() {
        assert!(HawkesParams::new(0.0, 0.5, 1.0, 1.0).is_err());
        assert!(HawkesParams::new(1.0, -0.5, 1.0, 1.0).is_err());
        assert!(HawkesParams::new(1.0, 0.5, 0.0, 1.0).is_err());
        assert!(HawkesParams::new(1.0, 0.5, 1.0, f64::NAN).is_err());
    }
}
