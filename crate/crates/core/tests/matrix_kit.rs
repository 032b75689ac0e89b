mod common;

use common::close;
use hawkes_queue::matrix_kit::*;
use hawkes_queue::numeric::{integrate, integrate_vec, OdeOptions, QuadOptions};
use hawkes_queue::phase_type::coxian_example;
use hawkes_queue::Error;

fn max_gap(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).amax()
}

fn quad() -> QuadOptions {
    QuadOptions { abs_tol: 1e-13, rel_tol: 1e-12, ..QuadOptions::default() }
}

#[test]
fn expm_basics() {
    assert!(max_gap(&expm(&Matrix::zeros(3, 3)).unwrap(), &Matrix::identity(3, 3)) < 1e-15);
    let d = expm(&Matrix::from_diagonal(&Vector::from_vec(vec![-1.0, -2.0]))).unwrap();
    close(d[(0, 0)], (-1.0f64).exp(), 1e-14);
    close(d[(1, 1)], (-2.0f64).exp(), 1e-14);
    assert_eq!(d[(0, 1)], 0.0);
}

#[test]
fn expm_of_nilpotent_is_a_finite_series() {
    let mu = 0.7;
    let mut n = Matrix::zeros(3, 3);
    n[(0, 1)] = 1.0;
    n[(1, 2)] = 1.0;
    let a = &n * (3.0 * mu);
    let series = Matrix::identity(3, 3) + &a + &a * &a * 0.5;
    assert!(max_gap(&expm(&a).unwrap(), &series) < 1e-13);
}

#[test]
fn integrate_expm_cases() {
    let l = Matrix::from_element(1, 1, -1.0);
    close(integrate_expm(&l, 3.0).unwrap()[(0, 0)], 1.0 - (-3.0f64).exp(), 1e-13);
    assert_eq!(integrate_expm(&Matrix::from_element(1, 1, -2.0), 0.0).unwrap()[(0, 0)], 0.0);

    let s = coxian_example().sub_generator().clone();
    let got = integrate_expm(&s, 1.0).unwrap();
    let flat = integrate_vec(|x, out| out.copy_from_slice(expm(&(&s * x)).unwrap().as_slice()), 0.0, 1.0, 25, &quad()).unwrap();
    let want = Matrix::from_column_slice(5, 5, &flat);
    assert!(max_gap(&got, &want) < 1e-10);
}

#[test]
fn polynomial_exponential_integrals() {
    let l = coxian_example().sub_generator().clone();
    let nu = Vector::from_vec(vec![1.0, 0.5, 0.25, 0.0, 2.0]);
    let plain = integral_poly_exp(&l, &nu, 0, 0.0, 1.5).unwrap();
    assert!((plain - integrate_expm(&l, 1.5).unwrap() * &nu).amax() < 1e-12);

    let one = Matrix::from_element(1, 1, -1.0);
    let v = Vector::from_element(1, 1.0);
    close(integral_poly_exp(&one, &v, 1, 0.0, 1.0).unwrap()[0], 1.0 - 2.0 / std::f64::consts::E, 1e-13);
    close(integral_poly_exp(&one, &v, 0, -1.0, 2.0).unwrap()[0], (1.0 - (-4.0f64).exp()) / 2.0, 1e-13);
}

#[test]
fn linear_ode_solutions() {
    let l = coxian_example().sub_generator().transpose() * -1.0;
    let g0 = Vector::from_vec(vec![1.0, -1.0, 2.0, 0.0, 0.5]);
    let hom = solve_linear_ode(&l, &[], &g0, 1.3).unwrap();
    assert!((hom - expm(&(&l * -1.3)).unwrap() * &g0).amax() < 1e-12);

    let unit = Matrix::from_element(1, 1, 1.0);
    let term = ForcingTerm { nu: Vector::from_element(1, 1.0), eta: 0, gamma: 0.0 };
    close(solve_linear_ode(&unit, &[term], &Vector::zeros(1), 2.0).unwrap()[0], 1.0 - (-2.0f64).exp(), 1e-13);

    // forced vector system against a tight adaptive integration
    let nu = Vector::from_vec(vec![1.0, 0.0, 0.5, 0.0, 0.25]);
    let got = solve_linear_ode(&l, &[ForcingTerm { nu: nu.clone(), eta: 0, gamma: 0.0 }], &Vector::zeros(5), 2.0).unwrap();
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
        let d = -(&l * Vector::from_column_slice(y)) + &nu;
        dy.copy_from_slice(d.as_slice());
    };
    let want = integrate(rhs, 0.0, &[0.0; 5], 2.0, &OdeOptions::with_tol(1e-12)).unwrap();
    for i in 0..5 {
        close(got[i], want[i], 1e-8);
    }
}

#[test]
fn m_matrix_cases() {
    let one = Matrix::from_element(1, 1, 1.0);
    let v = Vector::from_element(1, 1.0);
    close(m_matrix(0.0, &v, &one, 1.7).unwrap()[(0, 0)], (1.0 - (-3.4f64).exp()) / 2.0, 1e-13);
    let s = coxian_example().sub_generator().clone();
    let nu = Vector::from_vec(vec![0.2, 0.3, 0.5, 0.0, 0.0]);
    assert_eq!(m_matrix(0.4, &nu, &(-&s), 0.0).unwrap().amax(), 0.0);
}

#[test]
fn m_matrix_matches_quadrature() {
    // ∫₀ᵗ e^{γs} e^{−Lᵀs} ν νᵀ e^{−Ls} ds
    let mu = 1.3;
    let mut n = Matrix::zeros(3, 3);
    n[(0, 1)] = 1.0;
    n[(1, 2)] = 1.0;
    let l = (Matrix::identity(3, 3) - n.transpose()) * (3.0 * mu);
    let nu = Vector::from_vec(vec![1.0, 0.0, 0.0]);
    let got = m_matrix(0.0, &nu, &l, 1.0).unwrap();
    let flat = integrate_vec(
        |s, out| {
            let e = expm(&(l.transpose() * -s)).unwrap() * &nu;
            out.copy_from_slice((&e * e.transpose()).as_slice());
        },
        0.0,
        1.0,
        9,
        &quad(),
    )
    .unwrap();
    assert!(max_gap(&got, &Matrix::from_column_slice(3, 3, &flat)) < 1e-10);
}

#[test]
fn double_cross_integral_cases() {
    let s = coxian_example().sub_generator().clone();
    let nu = Vector::from_vec(vec![0.2, 0.3, 0.5, 0.0, 0.0]);
    assert_eq!(double_cross_integral(0.0, 0.5, &nu, 1.0, &(-&s), 0.0).unwrap().amax(), 0.0);
    // γI + L singular: the precondition fails
    let one = Matrix::from_element(1, 1, 1.0);
    let v = Vector::from_element(1, 1.0);
    assert!(matches!(double_cross_integral(0.0, -1.0, &v, 1.0, &one, 1.0), Err(Error::SingularShiftedMatrix { .. })));
}

#[test]
fn commutation() {
    assert!(commute_check(&Matrix::identity(2, 2), 1.0, 1.0).unwrap());
    assert!(commute_check(coxian_example().sub_generator(), 0.5, 1.0).unwrap());
    // cA + bI singular
    let a = Matrix::from_diagonal(&Vector::from_vec(vec![-1.0, 2.0, 3.0, 4.0]));
    assert!(matches!(commute_check(&a, 1.0, 1.0), Err(Error::SingularMatrix)));
}

#[test]
fn lyapunov_solutions() {
    let x = solve_lyapunov(&(-Matrix::identity(2, 2)), &(Matrix::identity(2, 2) * 2.0)).unwrap();
    assert!(max_gap(&x, &Matrix::identity(2, 2)) < 1e-12);

    let a = -Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 2.0]));
    let m = from_rows(&[vec![1.0, 0.3], vec![0.3, 2.0]]).unwrap();
    let x = solve_lyapunov(&a, &m).unwrap();
    let residual = a.transpose() * &x + &x * &a + &m;
    assert!(residual.amax() < 1e-10);

    // symmetric A: X = −½A⁻¹M
    let a = from_rows(&[vec![-2.0, 0.5], vec![0.5, -1.0]]).unwrap();
    let x = solve_lyapunov(&a, &m).unwrap();
    let want = inverse(&a).unwrap() * &m * -0.5;
    let residual = a.transpose() * &x + &x * &a + &m;
    assert!(residual.amax() < 1e-10);
    // the shortcut holds when A and M commute; check the residual of the formula too
    let r2 = a.transpose() * &want + &want * &a + &m;
    assert!(r2.amax() < 1e-10 || (&a * &m - &m * &a).amax() > 1e-12);
}

#[test]
fn rejects_non_square() {
    assert!(matches!(expm(&Matrix::zeros(2, 3)), Err(Error::NonSquare { .. })));
}
