mod common;

use common::close;
use hawkes_queue::control::*;
use hawkes_queue::hawkes::mean_intensity;
use hawkes_queue::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small(mut p: ControlProblem) -> ControlProblem {
    p.grid_points = 501;
    p
}

fn peak(v: &[f64]) -> f64 {
    v.iter().cloned().fold(0.0, f64::max)
}

#[test]
fn pointwise_rate() {
    let left = club_scenario(false);
    close(optimal_rate(1.0, 0.0, 0.0, &left).unwrap(), 3.4, 1e-12);
    assert_eq!(optimal_rate(0.0, 0.0, 0.0, &left).unwrap(), 0.0);
    let mut slow = left;
    slow.speed_penalty = 1e12;
    assert!(optimal_rate(1.0, 0.0, 0.0, &slow).unwrap() < 1e-8);
    let mut none = left;
    none.speed_penalty = 0.0;
    none.rate_penalty = 0.0;
    assert!(matches!(optimal_rate(1.0, 0.0, 0.0, &none), Err(Error::DegenerateObjective)));
    // a large outside-queue adjoint clamps at zero
    assert_eq!(optimal_rate(1.0, 1e6, 0.0, &left).unwrap(), 0.0);
}

#[test]
fn pure_penalty_admits_nobody() {
    let mut p = small(club_scenario(false));
    p.revenue_outside = 0.0;
    p.revenue_inside = 0.0;
    p.target_rate = 0.0;
    let s = solve(&p).unwrap();
    assert!(s.converged);
    assert!(peak(&s.mu_star) < 1e-12);
}

#[test]
fn idle_objective_is_the_constant_penalty() {
    let mut p = small(club_scenario(false));
    p.revenue_inside = 0.0;
    let obj = objective(&p, &vec![0.0; p.grid_points]).unwrap();
    let (c, k, t) = (p.rate_penalty, p.target_rate, p.horizon);
    close(obj, -c * k * k * t, 1e-12);
}

#[test]
fn scenarios_converge_with_the_expected_ratio() {
    let left = solve(&club_scenario(false)).unwrap();
    let right = solve(&club_scenario(true)).unwrap();
    for s in [&left, &right] {
        assert!(s.converged, "iterations {}", s.iterations);
        assert!(s.residual < 1e-6, "residual {}", s.residual);
        assert_eq!(*s.gamma1.last().unwrap(), 0.0);
        assert_eq!(*s.gamma2.last().unwrap(), 0.0);
        assert_eq!(*s.gamma3.last().unwrap(), 0.0);
        assert!(s.outside.iter().chain(&s.inside).chain(&s.intensity).all(|&v| v >= 0.0));
        assert!(s.mu_star.iter().all(|&v| v >= 0.0));
        // objective non-decreasing after the first sweeps
        assert!(s.history.windows(2).skip(5).all(|w| w[1] >= w[0] - 1e-9));
    }
    let ratio = peak(&right.mu_star) / peak(&left.mu_star);
    assert!((ratio - 2.0).abs() <= 0.6, "peak ratio {ratio}");
    assert!(peak(&left.outside) > peak(&right.outside));
}

#[test]
fn solution_is_a_local_maximum() {
    let p = small(club_scenario(false));
    let s = solve(&p).unwrap();
    let best = objective(&p, &s.mu_star).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let bumped: Vec<f64> = s.mu_star.iter().map(|m| (m + rng.random_range(-0.1..0.1)).max(0.0)).collect();
        assert!(objective(&p, &bumped).unwrap() <= best + 1e-9);
    }
}

#[test]
fn heavier_speed_penalty_admits_less() {
    for right in [false, true] {
        let p = small(club_scenario(right));
        let mut q = p;
        q.speed_penalty *= 2.0;
        let total = |s: &ControlSolution| s.mu_star.iter().sum::<f64>();
        assert!(total(&solve(&q).unwrap()) <= total(&solve(&p).unwrap()) + 1e-9);
    }
}

#[test]
fn mean_intensity_state_matches_hawkes_mean() {
    let p = small(club_scenario(false));
    let states = forward(&p, &vec![1.0; p.grid_points]).unwrap();
    for (i, t) in p.grid().iter().enumerate().step_by(50) {
        close(states[0][i], mean_intensity(&p.arrivals, *t).unwrap(), 1e-8);
    }
}

#[test]
fn non_convergence_is_reported() {
    let opts = SweepOptions { max_iters: 2, ..SweepOptions::default() };
    let s = solve_with(&small(club_scenario(true)), &opts).unwrap();
    assert!(!s.converged);
    assert!(s.iterations <= 2);
}
