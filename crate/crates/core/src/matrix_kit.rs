//! Dense matrix calculus: matrix exponential, the structured exponential
//! integrals used by the queue closed forms, and a Lyapunov solver.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numeric::quad::{integrate_vec, QuadOptions};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Largest supported number of phases.
pub const MAX_DIM: usize = 64;

/// Relative threshold for calling a matrix numerically singular.
pub const SINGULAR_RTOL: f64 = 1e-12;

fn ensure_square(a: &Matrix) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::NonSquare { rows: a.nrows(), cols: a.ncols() });
    }
    if a.nrows() > MAX_DIM {
        return Err(Error::InvalidParams(format!("dimension {} exceeds cap {MAX_DIM}", a.nrows())));
    }
    Ok(a.nrows())
}

fn norm1(a: &Matrix) -> f64 {
    a.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE9: [f64; 10] = [
    17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0, 2162160.0, 110880.0,
    3960.0, 90.0, 1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
    129060195264000.0, 10559470521600.0, 670442572800.0, 33522128640.0, 1323241920.0,
    40840800.0, 960960.0, 16380.0, 182.0, 1.0,
];
const THETA: [f64; 4] = [1.495585217958292e-2, 2.539398330063230e-1, 9.504178996162932e-1, 2.097847961257068];
const THETA13: f64 = 5.371920351148152;

fn pade_low(a: &Matrix, b: &[f64]) -> (Matrix, Matrix) {
    let n = a.nrows();
    let id = Matrix::identity(n, n);
    let a2 = a * a;
    let mut u = &id * b[1];
    let mut v = &id * b[0];
    let mut p = id.clone();
    for k in 1..b.len() / 2 {
        p = &p * &a2;
        u += &p * b[2 * k + 1];
        v += &p * b[2 * k];
    }
    (a * u, v)
}

fn pade13(a: &Matrix) -> (Matrix, Matrix) {
    let b = &PADE13;
    let n = a.nrows();
    let id = Matrix::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]);
    let u = a * (inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1]);
    let inner_v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]);
    let v = inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
    (u, v)
}

/// e^A by scaling and squaring with a degree 3..13 Padé approximant.
pub fn expm(a: &Matrix) -> Result<Matrix> {
    let n = ensure_square(a)?;
    if n == 0 {
        return Ok(a.clone());
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParams("non-finite matrix entry".into()));
    }
    let nrm = norm1(a);
    let low: [&[f64]; 4] = [&PADE3, &PADE5, &PADE7, &PADE9];
    let (u, v, squarings) = match THETA.iter().position(|&th| nrm <= th) {
        Some(i) => {
            let (u, v) = pade_low(a, low[i]);
            (u, v, 0)
        }
        None => {
            let s = ((nrm / THETA13).log2().ceil()).max(0.0) as i32;
            let scaled = a / 2f64.powi(s);
            let (u, v) = pade13(&scaled);
            (u, v, s)
        }
    };
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).ok_or(Error::SingularMatrix)?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

/// Smallest and largest singular values.
pub fn singular_range(a: &Matrix) -> (f64, f64) {
    let sv = a.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    (min, max)
}

/// True when the smallest singular value is below 1e-12 (1 + largest).
pub fn is_singular(a: &Matrix) -> bool {
    let (min, max) = singular_range(a);
    min < SINGULAR_RTOL * (1.0 + max)
}

pub fn inverse(a: &Matrix) -> Result<Matrix> {
    ensure_square(a)?;
    if is_singular(a) {
        return Err(Error::SingularMatrix);
    }
    a.clone().try_inverse().ok_or(Error::SingularMatrix)
}

/// (A + shift I)^{-1}, flagging `SingularShiftedMatrix`.
pub fn shifted_inverse(a: &Matrix, shift: f64) -> Result<Matrix> {
    let n = ensure_square(a)?;
    let m = a + Matrix::identity(n, n) * shift;
    if is_singular(&m) {
        return Err(Error::SingularShiftedMatrix { shift });
    }
    m.try_inverse().ok_or(Error::SingularShiftedMatrix { shift })
}

/// ∫₀ᵗ e^{Ls} ds = L⁻¹(e^{Lt} − I).
pub fn integrate_expm(l: &Matrix, t: f64) -> Result<Matrix> {
    let n = ensure_square(l)?;
    let inv = inverse(l)?;
    Ok(inv * (expm(&(l * t))? - Matrix::identity(n, n)))
}

/// ∫₀ᵗ e^{Ls} ν s^η e^{γs} ds by repeated integration by parts.
pub fn integral_poly_exp(l: &Matrix, nu: &Vector, eta: u32, gamma: f64, t: f64) -> Result<Vector> {
    let n = ensure_square(l)?;
    check_len(nu, n)?;
    let k = l + Matrix::identity(n, n) * gamma;
    let kinv = shifted_inverse(l, gamma)?;
    let ekt = expm(&(&k * t))?;
    let mut acc = Vector::zeros(n);
    // coefficient (-1)^j η!/(η-j)! multiplies K^{-(j+1)} [t^{η-j} e^{Kt} - [j = η] I] ν
    let mut coef = 1.0;
    let mut kpow = kinv.clone();
    for j in 0..=eta {
        let mut bracket = &ekt * t.powi((eta - j) as i32);
        if j == eta {
            bracket -= Matrix::identity(n, n);
        }
        acc += (&kpow * bracket * nu) * coef;
        coef *= -((eta - j) as f64);
        kpow = &kpow * &kinv;
    }
    Ok(acc)
}

/// One forcing term ν t^η e^{γt} of a linear ODE.
#[derive(Debug, Clone)]
pub struct ForcingTerm {
    pub nu: Vector,
    pub eta: u32,
    pub gamma: f64,
}

/// Solves ġ = −L g + Σ ν t^η e^{γt}, g(0) = g₀, in closed form.
pub fn solve_linear_ode(l: &Matrix, terms: &[ForcingTerm], g0: &Vector, t: f64) -> Result<Vector> {
    let n = ensure_square(l)?;
    check_len(g0, n)?;
    let mut acc = g0.clone();
    for term in terms {
        acc += integral_poly_exp(l, &term.nu, term.eta, term.gamma, t)?;
    }
    Ok(expm(&(l * -t))? * acc)
}

fn check_len(v: &Vector, n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: v.len() });
    }
    Ok(())
}

fn commutes_with_outer(l: &Matrix, nu: &Vector) -> bool {
    let nn = nu * nu.transpose();
    let lt = l.transpose();
    (l * &nn - &nn * l).amax() < 1e-12 && (l * &lt - &lt * l).amax() < 1e-12
}

fn quad_opts() -> QuadOptions {
    QuadOptions { abs_tol: 1e-14, rel_tol: 1e-12, max_intervals: 4000 }
}

fn outer_quadrature<F>(n: usize, t: f64, mut vec_at: F) -> Result<Matrix>
where
    F: FnMut(f64) -> (f64, Vector),
{
    let flat = integrate_vec(
        |s, out| {
            let (w, v) = vec_at(s);
            for j in 0..n {
                for i in 0..n {
                    out[i + j * n] = w * v[i] * v[j];
                }
            }
        },
        0.0,
        t,
        n * n,
        &quad_opts(),
    )?;
    Ok(Matrix::from_vec(n, n, flat))
}

/// M_{γ,ν,L}(t) = ∫₀ᵗ e^{(γI − Lᵀ)s} ννᵀ e^{−Ls} ds.
///
/// Uses the closed form when L is normal and commutes with ννᵀ, otherwise
/// adaptive quadrature of the integrand e^{γs} v(s) v(s)ᵀ with v = e^{−Lᵀs}ν.
pub fn m_matrix(gamma: f64, nu: &Vector, l: &Matrix, t: f64) -> Result<Matrix> {
    let n = ensure_square(l)?;
    check_len(nu, n)?;
    if t == 0.0 {
        return Ok(Matrix::zeros(n, n));
    }
    if commutes_with_outer(l, nu) {
        let k = Matrix::identity(n, n) * gamma - l - l.transpose();
        if !is_singular(&k) {
            let ekt = expm(&(&k * t))?;
            let kinv = k.clone().try_inverse().ok_or(Error::SingularMatrix)?;
            return Ok(kinv * (ekt - Matrix::identity(n, n)) * nu * nu.transpose());
        }
    }
    let lt = l.transpose();
    outer_quadrature(n, t, |s| {
        let v = expm(&(&lt * -s)).map(|e| e * nu).unwrap_or_else(|_| Vector::zeros(n));
        ((gamma * s).exp(), v)
    })
}

/// e^{Lᵀt} M_{γ,ν,L}(t) e^{Lt} = ∫₀ᵗ e^{γ(t−u)} e^{Lᵀu} ννᵀ e^{Lu} du.
///
/// This is the combination the queue covariance needs. Evaluating it from the
/// raw M loses all precision once e^{−Ls} grows, so it is computed directly.
pub fn m_matrix_propagated(gamma: f64, nu: &Vector, l: &Matrix, t: f64) -> Result<Matrix> {
    let n = ensure_square(l)?;
    check_len(nu, n)?;
    if t == 0.0 {
        return Ok(Matrix::zeros(n, n));
    }
    let id = Matrix::identity(n, n);
    if commutes_with_outer(l, nu) {
        let k = l + l.transpose() - &id * gamma;
        if !is_singular(&k) {
            let sym = l + l.transpose();
            let kinv = k.try_inverse().ok_or(Error::SingularMatrix)?;
            let val = kinv * (expm(&(sym * t))? - &id * (gamma * t).exp());
            return Ok(val * nu * nu.transpose());
        }
    }
    let lt = l.transpose();
    outer_quadrature(n, t, |u| {
        let v = expm(&(&lt * u)).map(|e| e * nu).unwrap_or_else(|_| Vector::zeros(n));
        ((gamma * (t - u)).exp(), v)
    })
}

/// Closed form of the double integral
/// ∫₀ᵗ [((η+1)γI − Lᵀ)⁻¹(e^{(ηγI−Lᵀ)s} − e^{−γs}I) ννᵀ c e^{−Ls}
///      + e^{−Lᵀs} ννᵀ c (e^{(ηγI−L)s} − e^{−γs}I)((η+1)γI − L)⁻¹] ds.
pub fn double_cross_integral(eta: f64, gamma: f64, nu: &Vector, c: f64, l: &Matrix, t: f64) -> Result<Matrix> {
    let n = ensure_square(l)?;
    check_len(nu, n)?;
    let id = Matrix::identity(n, n);
    inverse(l).map_err(|_| Error::SingularShiftedMatrix { shift: 0.0 })?;
    let g_plus = shifted_inverse(l, gamma)?;
    let shift = (eta + 1.0) * gamma;
    let right = shifted_inverse(&-l, shift)?;
    let left = right.transpose();
    let g_plus_t = g_plus.transpose();
    let nn = nu * nu.transpose();
    let lt = l.transpose();
    let m = m_matrix(eta * gamma, nu, l, t)?;
    let a = &id * shift - &lt;
    let b = &id * shift - l;
    let inner = m * ((eta + 2.0) * gamma)
        + expm(&((&id * (eta * gamma) - &lt) * t))? * &nn * expm(&(l * -t))?
        - &nn
        + &nn * (expm(&((&id * gamma + l) * -t))? - &id) * g_plus * b
        + a * g_plus_t * (expm(&((&id * gamma + &lt) * -t))? - &id) * &nn;
    Ok(left * inner * right * c)
}

/// Checks that e^{−A} commutes with (cA + bI)⁻¹.
pub fn commute_check(a: &Matrix, b: f64, c: f64) -> Result<bool> {
    let n = ensure_square(a)?;
    let shifted = a * c + Matrix::identity(n, n) * b;
    let inv = inverse(&shifted)?;
    let e = expm(&-a)?;
    let diff = (&e * &inv - &inv * &e).amax();
    Ok(diff < 1e-10 * (1.0 + e.amax() * inv.amax()))
}

/// Largest real part of the eigenvalues.
pub fn spectral_abscissa(a: &Matrix) -> f64 {
    a.clone().complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

/// Solves AᵀX + XA + M = 0 for Hurwitz A by a Kronecker linear solve.
pub fn solve_lyapunov(a: &Matrix, m: &Matrix) -> Result<Matrix> {
    let n = ensure_square(a)?;
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: m.nrows() });
    }
    let abscissa = spectral_abscissa(a);
    if abscissa >= 0.0 {
        return Err(Error::NonHurwitz { max_real: abscissa });
    }
    let id = Matrix::identity(n, n);
    let at = a.transpose();
    // column-major vec: vec(AᵀX) = (I ⊗ Aᵀ) vec X, vec(XA) = (Aᵀ ⊗ I) vec X
    let k = id.kronecker(&at) + at.kronecker(&id);
    let rhs = DVector::from_iterator(n * n, m.iter().map(|v| -v));
    let x = k.lu().solve(&rhs).ok_or(Error::SingularMatrix)?;
    let x = Matrix::from_vec(n, n, x.as_slice().to_vec());
    if (m - m.transpose()).amax() <= 1e-14 * (1.0 + m.amax()) {
        return Ok((&x + x.transpose()) * 0.5);
    }
    Ok(x)
}

/// ∫₀ᵗ s^k e^{−q s} ds for any real q (stable near q = 0 and for q < 0).
pub fn power_exp_integral(k: u32, q: f64, t: f64) -> f64 {
    let x = q * t;
    if x.abs() < 1.0 {
        // Σ_j (−q)^j t^{k+1+j} / (j! (k+1+j))
        let mut sum = 0.0;
        let mut term = t.powi(k as i32 + 1);
        for j in 0..60u32 {
            let add = term / (k + 1 + j) as f64;
            sum += add;
            if add.abs() < 1e-18 * sum.abs() {
                break;
            }
            term *= -x / (j + 1) as f64;
        }
        return sum;
    }
    // k!/q^{k+1} (1 − e^{−x} Σ_{z≤k} x^z/z!)
    let mut partial = 0.0;
    let mut term = 1.0;
    for z in 0..=k {
        partial += term;
        term *= x / (z + 1) as f64;
    }
    let fact: f64 = (1..=k).map(|v| v as f64).product();
    fact / q.powi(k as i32 + 1) * (1.0 - (-x).exp() * partial)
}

/// Iterated exponential convolution
/// ∫_{0<s_1<…<s_{m−1}<t} e^{−r_0(t−s_1)} … e^{−r_{m−1} s_{m−1}} ds,
/// read off the top-right entry of the exponential of a bidiagonal matrix.
/// Defined for any rates, including coincident ones.
pub fn exp_convolution(rates: &[f64], t: f64) -> Result<f64> {
    let m = rates.len();
    if m == 0 {
        return Ok(0.0);
    }
    let mut j = Matrix::zeros(m, m);
    for (i, r) in rates.iter().enumerate() {
        j[(i, i)] = -r * t;
        if i + 1 < m {
            j[(i, i + 1)] = t;
        }
    }
    Ok(expm(&j)?[(0, m - 1)])
}

/// Builds a matrix from nested rows.
pub fn from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::InvalidParams("ragged matrix rows".into()));
    }
    Ok(Matrix::from_fn(r, c, |i, j| rows[i][j]))
}

pub fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_diagonal() {
        let a = Matrix::from_diagonal(&Vector::from_vec(vec![-1.0, -2.0]));
        let e = expm(&a).unwrap();
        assert!((e[(0, 0)] - (-1f64).exp()).abs() < 1e-15);
        assert!((e[(1, 1)] - (-2f64).exp()).abs() < 1e-15);
        assert_eq!(e[(0, 1)], 0.0);
    }

    #[test]
    fn expm_rotation_large_norm() {
        let a = Matrix::from_row_slice(2, 2, &[0.0, 20.0, -20.0, 0.0]);
        let e = expm(&a).unwrap();
        assert!((e[(0, 0)] - 20f64.cos()).abs() < 1e-12);
        assert!((e[(0, 1)] - 20f64.sin()).abs() < 1e-12);
    }

    #[test]
    fn power_exp_integral_branches() {
        // q t small, large, negative and zero
        for &(k, q, t) in &[(0u32, 0.3, 1.0), (2, 3.0, 2.0), (3, -0.7, 2.5), (1, 0.0, 2.0), (4, 1e-9, 3.0)] {
            let quad = crate::numeric::integrate_scalar(
                |s| s.powi(k as i32) * (-q * s).exp(),
                0.0,
                t,
                &QuadOptions::default(),
            )
            .unwrap();
            let v = power_exp_integral(k, q, t);
            assert!((v - quad).abs() < 1e-12 * (1.0 + quad.abs()), "{k} {q} {t}: {v} {quad}");
        }
    }

    #[test]
    fn exp_convolution_two_rates() {
        let v = exp_convolution(&[1.0, 3.0], 2.0).unwrap();
        let exact = ((-2.0f64).exp() - (-6.0f64).exp()) / 2.0;
        assert!((v - exact).abs() < 1e-14);
        let coincident = exp_convolution(&[2.0, 2.0], 1.5).unwrap();
        assert!((coincident - 1.5 * (-3.0f64).exp()).abs() < 1e-14);
    }
}
