//! Globally adaptive Gauss-Kronrod (7/15) quadrature for vector integrands.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-13, rel_tol: 1e-12, max_intervals: 4000 }
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Panel {
    a: f64,
    b: f64,
    value: Vec<f64>,
    err: f64,
}

fn gk15<F>(f: &mut F, a: f64, b: f64, dim: usize, buf: &mut [f64]) -> Panel
where
    F: FnMut(f64, &mut [f64]),
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kron = vec![0.0; dim];
    let mut gauss = vec![0.0; dim];
    for (j, &x) in XGK.iter().enumerate() {
        let nodes: &[f64] = if x == 0.0 { &[0.0] } else { &[-1.0, 1.0] };
        for s in nodes {
            f(c + s * h * x, buf);
            for i in 0..dim {
                kron[i] += WGK[j] * buf[i];
                if j % 2 == 1 {
                    gauss[i] += WG[j / 2] * buf[i];
                }
            }
        }
    }
    let mut err = 0.0f64;
    for i in 0..dim {
        kron[i] *= h;
        gauss[i] *= h;
        err = err.max((kron[i] - gauss[i]).abs());
    }
    Panel { a, b, value: kron, err }
}

/// Integrates a vector-valued function of dimension `dim` over [a, b].
/// The error is measured in the max norm over components.
pub fn integrate_vec<F>(mut f: F, a: f64, b: f64, dim: usize, opts: &QuadOptions) -> Result<Vec<f64>>
where
    F: FnMut(f64, &mut [f64]),
{
    if a == b {
        return Ok(vec![0.0; dim]);
    }
    let mut buf = vec![0.0; dim];
    let mut panels = vec![gk15(&mut f, a, b, dim, &mut buf)];
    loop {
        let mut total = vec![0.0; dim];
        let mut err = 0.0;
        for p in &panels {
            for i in 0..dim {
                total[i] += p.value[i];
            }
            err += p.err;
        }
        let scale = total.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if err <= opts.abs_tol.max(opts.rel_tol * scale) {
            return Ok(total);
        }
        if panels.len() >= opts.max_intervals {
            // accept when roundoff dominates, otherwise report
            if err <= 1e3 * opts.abs_tol.max(opts.rel_tol * scale) {
                return Ok(total);
            }
            return Err(Error::Integration(format!("quadrature error estimate {err:e} above tolerance")));
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.err > acc.1 { (i, p.err) } else { acc });
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        panels.push(gk15(&mut f, p.a, mid, dim, &mut buf));
        panels.push(gk15(&mut f, mid, p.b, dim, &mut buf));
    }
}

pub fn integrate_scalar<F>(mut f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    integrate_vec(|x, out| out[0] = f(x), a, b, 1, opts).map(|v| v[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = integrate_scalar(|x| x.powi(6), 0.0, 2.0, &QuadOptions::default()).unwrap();
        assert!((v - 128.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn peaked_integrand() {
        let v = integrate_scalar(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, &QuadOptions::default()).unwrap();
        let exact = 2.0 * 100.0 * (100.0f64).atan();
        assert!((v - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn vector_components() {
        let v = integrate_vec(
            |x, o| {
                o[0] = x.exp();
                o[1] = x.sin();
            },
            0.0,
            1.0,
            2,
            &QuadOptions::default(),
        )
        .unwrap();
        assert!((v[0] - (1f64.exp() - 1.0)).abs() < 1e-13);
        assert!((v[1] - (1.0 - 1f64.cos())).abs() < 1e-13);
    }
}
