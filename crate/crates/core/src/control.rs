//! Club-queue admission control: choose the admission rate μ_O(t) ≥ 0 that
//! maximises ∫₀ᵀ [r_O μ_O Q_O + r_I Q_I − c(μ_O Q_O − k)² − w μ_O²] dt subject to
//! the mean dynamics
//!   λ' = β(λ* − λ) + αλ,   Q_O' = λ − μ_O Q_O,   Q_I' = μ_O Q_O − μ_I Q_I.
//!
//! With H = running payoff + γ₁Q_O' + γ₂Q_I' + γ₃λ' the adjoints are
//!   γ₁' = −μ_O(r_O − 2c(μ_O Q_O − k) − γ₁ + γ₂),
//!   γ₂' = −(r_I − μ_I γ₂),
//!   γ₃' = −(γ₁ − (β − α)γ₃),
//! with γ(T) = 0, and ∂H/∂μ_O = 0 gives
//!   μ*_O = (r_O + 2ck − γ₁ + γ₂)Q_O / (2w + 2cQ_O²), clamped at 0.
//! The forward-backward sweep alternates RK4 passes with a relaxed update.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hawkes::HawkesParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlProblem {
    pub arrivals: HawkesParams,
    /// μ_I
    pub mu_inside: f64,
    /// r_O
    pub revenue_outside: f64,
    /// r_I
    pub revenue_inside: f64,
    /// c
    pub rate_penalty: f64,
    /// k
    pub target_rate: f64,
    /// w
    pub speed_penalty: f64,
    /// T
    pub horizon: f64,
    pub grid_points: usize,
    /// E[Q_O(0)]
    pub initial_outside: f64,
    /// E[Q_I(0)]
    pub initial_inside: f64,
}

/// Sweep settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub max_iters: usize,
    /// Stop when the stationarity residual falls below this.
    pub tolerance: f64,
    /// Initial relaxation weight on the new control.
    pub relaxation: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { max_iters: 500, tolerance: 1e-8, relaxation: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlSolution {
    pub grid: Vec<f64>,
    pub mu_star: Vec<f64>,
    /// E[λ]
    pub intensity: Vec<f64>,
    /// E[Q_O]
    pub outside: Vec<f64>,
    /// E[Q_I]
    pub inside: Vec<f64>,
    pub gamma1: Vec<f64>,
    pub gamma2: Vec<f64>,
    pub gamma3: Vec<f64>,
    pub objective: f64,
    /// max over the grid of |∂H/∂μ_O| (positive part at μ_O = 0)
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
    /// objective after each sweep
    pub history: Vec<f64>,
}

impl ControlProblem {
    pub fn validate(&self) -> Result<()> {
        self.arrivals.validate()?;
        let vals = [
            self.mu_inside,
            self.revenue_outside,
            self.revenue_inside,
            self.rate_penalty,
            self.target_rate,
            self.speed_penalty,
            self.horizon,
            self.initial_outside,
            self.initial_inside,
        ];
        if vals.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParams("control parameters must be finite and nonnegative".into()));
        }
        if !(self.horizon > 0.0) || !(self.mu_inside > 0.0) {
            return Err(Error::InvalidParams("horizon and inside service rate must be positive".into()));
        }
        if self.grid_points < 2 {
            return Err(Error::InvalidParams("grid_points must be at least 2".into()));
        }
        if self.speed_penalty == 0.0 && self.rate_penalty == 0.0 {
            return Err(Error::DegenerateObjective);
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.grid_points).map(|i| i as f64 * h).collect()
    }

    fn step(&self) -> f64 {
        self.horizon / (self.grid_points - 1) as f64
    }

    fn payoff(&self, mu: f64, q_out: f64, q_in: f64) -> f64 {
        let flow = mu * q_out;
        self.revenue_outside * flow + self.revenue_inside * q_in
            - self.rate_penalty * (flow - self.target_rate).powi(2)
            - self.speed_penalty * mu * mu
    }

    /// ∂H/∂μ_O
    fn stationarity(&self, mu: f64, q_out: f64, g1: f64, g2: f64) -> f64 {
        let (c, w) = (self.rate_penalty, self.speed_penalty);
        (self.revenue_outside + 2.0 * c * self.target_rate - g1 + g2) * q_out - mu * (2.0 * c * q_out * q_out + 2.0 * w)
    }
}

/// The two nightclub scenarios: the left one (w = 150, k = 8) and, with
/// `right`, the one with w = 100 and k = 12. Both use r_O = r_I = c = 100.
pub fn club_scenario(right: bool) -> ControlProblem {
    ControlProblem {
        arrivals: HawkesParams { baseline: 5.0, jump: 0.5, decay: 1.0, initial_intensity: 5.0 },
        mu_inside: 1.0,
        revenue_outside: 100.0,
        revenue_inside: 100.0,
        rate_penalty: 100.0,
        target_rate: if right { 12.0 } else { 8.0 },
        speed_penalty: if right { 100.0 } else { 150.0 },
        horizon: 5.0,
        grid_points: 2001,
        initial_outside: 0.0,
        initial_inside: 0.0,
    }
}

/// The pointwise maximiser of the Hamiltonian in μ_O.
pub fn optimal_rate(q_out: f64, gamma1: f64, gamma2: f64, prob: &ControlProblem) -> Result<f64> {
    let (c, w) = (prob.rate_penalty, prob.speed_penalty);
    let den = 2.0 * w + 2.0 * c * q_out * q_out;
    if den <= 0.0 {
        if w == 0.0 && c == 0.0 {
            return Err(Error::DegenerateObjective);
        }
        // c > 0, w = 0 and an empty queue: admitting has no effect
        return Ok(0.0);
    }
    Ok(((prob.revenue_outside + 2.0 * c * prob.target_rate - gamma1 + gamma2) * q_out / den).max(0.0))
}

type States = [Vec<f64>; 3];

fn rk4<F: Fn(f64, &[f64; 3]) -> [f64; 3]>(f: &F, t: f64, y: &[f64; 3], h: f64) -> [f64; 3] {
    let add = |a: &[f64; 3], b: &[f64; 3], s: f64| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]];
    let k1 = f(t, y);
    let k2 = f(t + h / 2.0, &add(y, &k1, h / 2.0));
    let k3 = f(t + h / 2.0, &add(y, &k2, h / 2.0));
    let k4 = f(t + h, &add(y, &k3, h));
    [
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        y[2] + h / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
    ]
}

// piecewise-linear interpolation of grid values at step i, fraction s ∈ [0, 1]
fn lerp(v: &[f64], i: usize, s: f64) -> f64 {
    if s == 0.0 {
        v[i]
    } else {
        v[i] + s * (v[i + 1] - v[i])
    }
}

/// Mean states (E[λ], E[Q_O], E[Q_I]) on the grid under `mu`.
pub fn forward(prob: &ControlProblem, mu: &[f64]) -> Result<States> {
    prob.validate()?;
    let n = prob.grid_points;
    if mu.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: mu.len() });
    }
    let h = prob.step();
    let p = &prob.arrivals;
    let mut out: States = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut y = [p.initial_intensity, prob.initial_outside, prob.initial_inside];
    for i in 0..n {
        for d in 0..3 {
            out[d][i] = y[d];
        }
        if i + 1 == n {
            break;
        }
        let t0 = i as f64 * h;
        let f = |t: f64, x: &[f64; 3]| {
            let m = lerp(mu, i, (t - t0) / h);
            [
                p.decay * (p.baseline - x[0]) + p.jump * x[0],
                x[0] - m * x[1],
                m * x[1] - prob.mu_inside * x[2],
            ]
        };
        y = rk4(&f, t0, &y, h);
    }
    Ok(out)
}

/// Adjoints (γ₁, γ₂, γ₃) on the grid, integrated backward from γ(T) = 0.
pub fn backward(prob: &ControlProblem, mu: &[f64], states: &States) -> States {
    let n = prob.grid_points;
    let h = prob.step();
    let k = prob.arrivals.gap();
    let (r_o, r_i, c, kt) = (prob.revenue_outside, prob.revenue_inside, prob.rate_penalty, prob.target_rate);
    let mut out: States = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut y = [0.0; 3];
    for i in (0..n).rev() {
        for d in 0..3 {
            out[d][i] = y[d];
        }
        if i == 0 {
            break;
        }
        // integrate on [t_{i-1}, t_i] in reversed time r = t_i − t
        let f = |r: f64, g: &[f64; 3]| {
            let s = 1.0 - r / h;
            let m = lerp(mu, i - 1, s);
            let q = lerp(&states[1], i - 1, s);
            [
                m * (r_o - 2.0 * c * (m * q - kt) - g[0] + g[1]),
                r_i - prob.mu_inside * g[1],
                g[0] - k * g[2],
            ]
        };
        y = rk4(&f, 0.0, &y, h);
    }
    out
}

fn trapezoid(prob: &ControlProblem, mu: &[f64], states: &States) -> f64 {
    let h = prob.step();
    let vals: Vec<f64> = (0..mu.len()).map(|i| prob.payoff(mu[i], states[1][i], states[2][i])).collect();
    h * (vals.iter().sum::<f64>() - 0.5 * (vals[0] + vals[vals.len() - 1]))
}

/// ∫₀ᵀ running payoff along the states induced by `mu_path` (trapezoid rule).
pub fn objective(prob: &ControlProblem, mu_path: &[f64]) -> Result<f64> {
    if mu_path.iter().any(|m| !(*m >= 0.0)) {
        return Err(Error::InvalidParams("admission rates must be nonnegative".into()));
    }
    let states = forward(prob, mu_path)?;
    Ok(trapezoid(prob, mu_path, &states))
}

fn residual(prob: &ControlProblem, mu: &[f64], states: &States, adj: &States) -> f64 {
    (0..mu.len())
        .map(|i| {
            let g = prob.stationarity(mu[i], states[1][i], adj[0][i], adj[1][i]);
            if mu[i] > 0.0 {
                g.abs()
            } else {
                g.max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

pub fn solve(prob: &ControlProblem) -> Result<ControlSolution> {
    solve_with(prob, &SweepOptions::default())
}

/// Forward-backward sweep. Non-convergence is reported through
/// `converged = false` with the best iterate.
pub fn solve_with(prob: &ControlProblem, opts: &SweepOptions) -> Result<ControlSolution> {
    prob.validate()?;
    let n = prob.grid_points;
    let mut mu = vec![0.0; n];
    let mut omega = opts.relaxation;
    let mut history = Vec::new();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut iterations = 0;
    loop {
        let states = forward(prob, &mu)?;
        let adj = backward(prob, &mu, &states);
        let obj = trapezoid(prob, &mu, &states);
        let res = residual(prob, &mu, &states, &adj);
        history.push(obj);
        if best.as_ref().is_none_or(|(b, _)| obj > *b) {
            best = Some((obj, mu.clone()));
        }
        if res < opts.tolerance || iterations >= opts.max_iters {
            let converged = res < opts.tolerance;
            if !converged {
                // fall back to the best iterate seen
                let (_, m) = best.expect("at least one sweep");
                mu = m;
            }
            let states = forward(prob, &mu)?;
            let adj = backward(prob, &mu, &states);
            let [intensity, outside, inside] = states.clone();
            let [gamma1, gamma2, gamma3] = adj.clone();
            return Ok(ControlSolution {
                grid: prob.grid(),
                objective: trapezoid(prob, &mu, &states),
                residual: residual(prob, &mu, &states, &adj),
                mu_star: mu,
                intensity,
                outside,
                inside,
                gamma1,
                gamma2,
                gamma3,
                converged,
                iterations,
                history,
            });
        }
        if history.len() >= 2 && obj < history[history.len() - 2] - 1e-9 * obj.abs().max(1.0) {
            omega = (omega / 2.0).max(1e-3);
        }
        for i in 0..n {
            let target = optimal_rate(states[1][i], adj[0][i], adj[1][i], prob)?;
            mu[i] = (1.0 - omega) * mu[i] + omega * target;
        }
        iterations += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn left() -> ControlProblem {
        ControlProblem {
            arrivals: HawkesParams::at_baseline(1.0, 0.5, 1.0).unwrap(),
            mu_inside: 1.0,
            revenue_outside: 100.0,
            revenue_inside: 100.0,
            rate_penalty: 100.0,
            target_rate: 8.0,
            speed_penalty: 150.0,
            horizon: 10.0,
            grid_points: 1001,
            initial_outside: 0.0,
            initial_inside: 0.0,
        }
    }

    #[test]
    fn optimal_rate_arithmetic() {
        let p = left();
        assert!((optimal_rate(1.0, 0.0, 0.0, &p).unwrap() - 3.4).abs() < 1e-12);
        assert_eq!(optimal_rate(0.0, 0.0, 0.0, &p).unwrap(), 0.0);
    }

    #[test]
    fn pure_penalty_zero_rate() {
        let mut p = left();
        p.revenue_outside = 0.0;
        p.revenue_inside = 0.0;
        p.target_rate = 0.0;
        let s = solve(&p).unwrap();
        assert!(s.converged);
        assert!(s.mu_star.iter().all(|&m| m.abs() < 1e-12));
    }

    #[test]
    fn zero_control_objective() {
        let mut p = left();
        p.revenue_inside = 0.0;
        let mu = vec![0.0; p.grid_points];
        let want = -p.rate_penalty * p.target_rate.powi(2) * p.horizon;
        assert!((objective(&p, &mu).unwrap() - want).abs() < 1e-9);
    }

    #[test]
    fn adjoint_matches_objective_gradient() {
        // dJ along a smooth direction φ equals ∫ ∂H/∂μ φ dt
        let p = left();
        let n = p.grid_points;
        let grid = p.grid();
        let mu: Vec<f64> = grid.iter().map(|t| 0.5 + 0.2 * (t * 0.7).sin()).collect();
        let phi: Vec<f64> = grid.iter().map(|t| (t * 0.3).cos()).collect();
        let eps = 1e-5;
        let up: Vec<f64> = (0..n).map(|i| mu[i] + eps * phi[i]).collect();
        let down: Vec<f64> = (0..n).map(|i| mu[i] - eps * phi[i]).collect();
        let fd = (objective(&p, &up).unwrap() - objective(&p, &down).unwrap()) / (2.0 * eps);
        let states = forward(&p, &mu).unwrap();
        let adj = backward(&p, &mu, &states);
        let h = p.step();
        let g: Vec<f64> = (0..n).map(|i| p.stationarity(mu[i], states[1][i], adj[0][i], adj[1][i]) * phi[i]).collect();
        let integral = h * (g.iter().sum::<f64>() - 0.5 * (g[0] + g[n - 1]));
        assert!((fd - integral).abs() < 1e-4 * fd.abs().max(1.0), "{fd} vs {integral}");
    }
}
