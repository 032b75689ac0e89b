//! Dormand-Prince 5(4) with step-size control.
//!
//! The right-hand side is `f(t, y, dy)`. Integration may run forward or
//! backward in time.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-10, max_steps: 2_000_000 }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, ..Self::default() }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// difference between the 5th and 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Stages {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
}

impl Stages {
    fn new(n: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
        }
    }
}

/// One Dormand-Prince step from (t, y) with step h, assuming `st.k[0] = f(t, y)`.
/// Writes the 5th order solution to `out` and returns the raw error vector in
/// `st.tmp`; leaves `st.k[6] = f(t + h, out)`.
fn dp_step<F>(f: &mut F, t: f64, y: &[f64], h: f64, st: &mut Stages, out: &mut [f64])
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    let [k1, k2, k3, k4, k5, k6, k7] = &mut st.k;
    let tmp = &mut st.tmp;
    for i in 0..n {
        tmp[i] = y[i] + h * A21 * k1[i];
    }
    f(t + C2 * h, tmp, k2);
    for i in 0..n {
        tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
    }
    f(t + C3 * h, tmp, k3);
    for i in 0..n {
        tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
    }
    f(t + C4 * h, tmp, k4);
    for i in 0..n {
        tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
    }
    f(t + C5 * h, tmp, k5);
    for i in 0..n {
        tmp[i] = y[i]
            + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
    }
    f(t + h, tmp, k6);
    for i in 0..n {
        out[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
    }
    f(t + h, out, k7);
    for i in 0..n {
        tmp[i] = h
            * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
}

/// Adaptive integration from `t0` to `t1`. The `monitor` callback sees every
/// accepted state and may abort by returning an error.
pub fn integrate_monitored<F, M>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t1: f64,
    opts: &OdeOptions,
    mut monitor: M,
) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    M: FnMut(f64, &[f64]) -> Result<()>,
{
    let n = y0.len();
    let mut y = y0.to_vec();
    if t1 == t0 || n == 0 {
        return Ok(y);
    }
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();
    let mut st = Stages::new(n);
    let mut ynew = vec![0.0; n];
    f(t0, &y, &mut st.k[0]);

    // initial step from the usual two-norm heuristic
    let sc0: Vec<f64> = y.iter().map(|v| opts.atol + opts.rtol * v.abs()).collect();
    let d0 = rms(&y, &sc0);
    let d1 = rms(&st.k[0], &sc0);
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.min(span).max(1e-12 * span.max(1.0));

    let mut t = t0;
    let mut steps = 0usize;
    let mut last_rejected = false;
    loop {
        let remaining = (t1 - t).abs();
        if remaining <= 1e-14 * span.max(1.0) {
            break;
        }
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::Integration(format!("exceeded {} steps at t = {t}", opts.max_steps)));
        }
        dp_step(&mut f, t, &y, dir * h, &mut st, &mut ynew);
        let mut err = 0.0;
        for i in 0..n {
            let sc = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
            let r = st.tmp[i] / sc;
            err += r * r;
        }
        err = (err / n as f64).sqrt();
        if !err.is_finite() {
            h *= 0.2;
            last_rejected = true;
            if h < 1e-14 * span.max(1.0) {
                return Err(Error::Integration(format!("non-finite state at t = {t}")));
            }
            continue;
        }
        if err <= 1.0 {
            t = if last { t1 } else { t + dir * h };
            std::mem::swap(&mut y, &mut ynew);
            st.k.swap(0, 6);
            monitor(t, &y)?;
            let mut fac = 0.9 * err.max(1e-10).powf(-0.2);
            fac = fac.clamp(0.2, 5.0);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h *= fac;
            last_rejected = false;
            if last {
                break;
            }
        } else {
            h *= (0.9 * err.powf(-0.2)).max(0.2);
            last_rejected = true;
            if h < 1e-15 * span.max(1.0) {
                return Err(Error::Integration(format!("step size underflow at t = {t}")));
            }
        }
    }
    Ok(y)
}

fn rms(v: &[f64], sc: &[f64]) -> f64 {
    let s: f64 = v.iter().zip(sc).map(|(a, b)| (a / b) * (a / b)).sum();
    (s / v.len() as f64).sqrt()
}

/// Adaptive integration from `t0` to `t1`.
pub fn integrate<F>(f: F, t0: f64, y0: &[f64], t1: f64, opts: &OdeOptions) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    integrate_monitored(f, t0, y0, t1, opts, |_, _| Ok(()))
}

/// Integrates through a sorted grid starting at `t0`, returning the state at
/// every grid time.
pub fn integrate_grid<F>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    grid: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let mut out = Vec::with_capacity(grid.len());
    let mut t = t0;
    let mut y = y0.to_vec();
    for &g in grid {
        y = integrate(&mut f, t, &y, g, opts)?;
        t = g;
        out.push(y.clone());
    }
    Ok(out)
}

/// Fixed-step Dormand-Prince (5th order solution) with `steps` equal steps.
///
/// The discretization error is then a smooth function of the initial data,
/// which is what finite differences of the result need.
pub fn integrate_fixed<F, M>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t1: f64,
    steps: usize,
    mut monitor: M,
) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    M: FnMut(f64, &[f64]) -> Result<()>,
{
    let n = y0.len();
    let mut y = y0.to_vec();
    if steps == 0 || t1 == t0 {
        return Ok(y);
    }
    let h = (t1 - t0) / steps as f64;
    let mut st = Stages::new(n);
    let mut ynew = vec![0.0; n];
    f(t0, &y, &mut st.k[0]);
    for s in 0..steps {
        let t = t0 + s as f64 * h;
        dp_step(&mut f, t, &y, h, &mut st, &mut ynew);
        std::mem::swap(&mut y, &mut ynew);
        st.k.swap(0, 6);
        monitor(t + h, &y)?;
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let y = integrate(|_, y, d| d[0] = -y[0], 0.0, &[1.0], 5.0, &OdeOptions::default()).unwrap();
        let err = (y[0] - (-5.0f64).exp()).abs();
        assert!(err < 1e-10, "{err:e}");
    }

    #[test]
    fn backward_harmonic() {
        let f = |_: f64, y: &[f64], d: &mut [f64]| {
            d[0] = y[1];
            d[1] = -y[0];
        };
        let y = integrate(f, 3.0, &[3f64.sin(), 3f64.cos()], 0.0, &OdeOptions::default()).unwrap();
        assert!(y[0].abs() < 1e-9);
        assert!((y[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fixed_step_is_fifth_order() {
        let run = |n| {
            integrate_fixed(|t, _, d| d[0] = t.cos(), 0.0, &[0.0], 2.0, n, |_, _| Ok(())).unwrap()[0]
        };
        let e1 = (run(10) - 2f64.sin()).abs();
        let e2 = (run(20) - 2f64.sin()).abs();
        assert!(e1 / e2 > 20.0);
    }

    #[test]
    fn grid_matches_endpoints() {
        let g = [0.5, 1.0, 2.0];
        let ys = integrate_grid(|_, y, d| d[0] = y[0], 0.0, &[1.0], &g, &OdeOptions::default()).unwrap();
        for (t, y) in g.iter().zip(&ys) {
            assert!((y[0] - t.exp()).abs() < 1e-9 * t.exp());
        }
    }
}
