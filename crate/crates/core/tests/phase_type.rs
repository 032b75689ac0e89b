mod common;

use common::close;
use hawkes_queue::matrix_kit::{expm, Matrix, Vector};
use hawkes_queue::phase_type::{coxian_example, PhaseTypeDist};
use hawkes_queue::simulate::{stream, Role};
use hawkes_queue::Error;

fn stats(d: &PhaseTypeDist, n: usize, seed: u64) -> (f64, f64, Vec<f64>) {
    let mut rng = stream(seed, 0, Role::Service);
    let xs: Vec<f64> = (0..n).map(|_| d.sample(&mut rng).0).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var, xs)
}

#[test]
fn constructors() {
    let one = PhaseTypeDist::new(Matrix::from_element(1, 1, -2.0), Vector::from_element(1, 1.0)).unwrap();
    assert_eq!(one.sub_generator(), PhaseTypeDist::exponential(2.0).unwrap().sub_generator());
    let _ = coxian_example();
    let bad = PhaseTypeDist::new(Matrix::from_element(1, 1, 1.0), Vector::from_element(1, 1.0));
    assert!(matches!(bad, Err(Error::InvalidSubGenerator(_))));
    let bad = PhaseTypeDist::new(Matrix::from_element(1, 1, -1.0), Vector::from_element(1, 0.5));
    assert!(matches!(bad, Err(Error::InvalidInitialDist(_))));
}

#[test]
fn mean_service_times() {
    close(PhaseTypeDist::erlang(1, 2.0).unwrap().mean_service_time(), 0.5, 1e-12);
    close(PhaseTypeDist::erlang(3, 1.0).unwrap().mean_service_time(), 1.0, 1e-12);
    close(PhaseTypeDist::erlang(3, 1.0 / 6.0).unwrap().mean_service_time(), 6.0, 1e-12);
    close(PhaseTypeDist::hyperexp(&[0.5, 0.5], &[1.0, 2.0]).unwrap().mean_service_time(), 0.75, 1e-12);
    close(PhaseTypeDist::exponential(4.0).unwrap().mean_service_time(), 0.25, 1e-12);
    let h = PhaseTypeDist::hyperexp(&[1.0], &[3.0]).unwrap();
    assert_eq!(h.sub_generator(), PhaseTypeDist::exponential(3.0).unwrap().sub_generator());
    assert!(PhaseTypeDist::hyperexp(&[0.15, 0.4, 0.45], &[1.0, 4.0, 6.0]).unwrap().has_distinct_rates());
    assert!(!PhaseTypeDist::hyperexp(&[0.5, 0.5], &[2.0, 2.0]).unwrap().has_distinct_rates());
}

#[test]
fn generators_conserve_probability() {
    for d in [
        PhaseTypeDist::erlang(4, 0.7).unwrap(),
        PhaseTypeDist::hyperexp(&[0.15, 0.4, 0.45], &[1.0, 4.0, 6.0]).unwrap(),
        coxian_example(),
    ] {
        let g = d.generator();
        for i in 0..g.nrows() {
            assert!(g.row(i).sum().abs() < 1e-12);
        }
    }
}

#[test]
fn coxian_mean_matches_monte_carlo() {
    let d = coxian_example();
    let n = 1_000_000;
    let (mean, var, _) = stats(&d, n, 3);
    let se = (var / n as f64).sqrt();
    assert!((mean - d.mean_service_time()).abs() < 3.0 * se, "{mean} vs {}", d.mean_service_time());
}

#[test]
fn erlang_sample_variance() {
    let (mean, var, _) = stats(&PhaseTypeDist::erlang(3, 1.0).unwrap(), 200_000, 4);
    close(mean, 1.0, 0.01);
    close(var, 1.0 / 3.0, 0.02);
}

#[test]
fn empirical_cdf_within_dkw_band() {
    // P(sup|F_n − F| > ε) ≤ 2e^{−2nε²}; 99% confidence
    let n = 1_000_000;
    let eps = ((2.0f64 / 0.01).ln() / (2.0 * n as f64)).sqrt();
    for d in [coxian_example(), PhaseTypeDist::hyperexp(&[0.15, 0.4, 0.45], &[1.0, 4.0, 6.0]).unwrap()] {
        let (_, _, xs) = stats(&d, n, 9);
        for t in [0.5, 1.0, 2.0] {
            let emp = xs.iter().filter(|&&x| x <= t).count() as f64 / n as f64;
            assert!((emp - d.cdf(t)).abs() < eps, "t={t}: {emp} vs {}", d.cdf(t));
        }
    }
}

#[test]
fn cdf_is_one_minus_survival() {
    let d = coxian_example();
    let t = 1.3;
    let surv = (d.initial_dist().transpose() * expm(&(d.sub_generator() * t)).unwrap()).sum();
    close(d.cdf(t), 1.0 - surv, 1e-12);
}

#[test]
fn sampling_is_deterministic() {
    let d = coxian_example();
    let a = d.sample(&mut stream(7, 2, Role::Service));
    let b = d.sample(&mut stream(7, 2, Role::Service));
    assert_eq!(a.0.to_bits(), b.0.to_bits());
    assert_eq!(a.1, b.1);
    // every path starts in the phase drawn from θ, here phase 0
    assert_eq!(a.1[0].0, 0);
}
