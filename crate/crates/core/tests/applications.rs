mod common;

use common::{close, within_se};
use hawkes_queue::applications::*;
use hawkes_queue::numeric::{integrate_scalar, QuadOptions};
use hawkes_queue::queue_moments::{mean_vector, QueueModel};
use hawkes_queue::simulate::simulate_click;
use hawkes_queue::{Error, HawkesParams, PhaseTypeDist};

fn query(baseline: f64, jump: f64, decay: f64, mu: f64, m: f64, horizon: f64) -> ClickImpactQuery {
    ClickImpactQuery { arrivals: HawkesParams::at_baseline(baseline, jump, decay).unwrap(), mu, m, horizon }
}

#[test]
fn count_gap_values() {
    let p = HawkesParams::at_baseline(1.0, 0.75, 1.0).unwrap();
    close(count_gap(&p, 0.0).unwrap(), 1.0, 1e-12);
    close(count_gap_limit(&p).unwrap(), 4.0, 1e-12);
    close(count_gap(&p, 200.0).unwrap(), 4.0, 1e-12);
    let flat = HawkesParams::at_baseline(1.0, 0.0, 1.0).unwrap();
    for t in [0.0, 1.0, 10.0] {
        close(count_gap(&flat, t).unwrap(), 1.0, 1e-12);
    }
}

#[test]
fn count_gap_relaxes_at_the_stability_gap() {
    // log(limit − gap) is linear in t with slope −(β − α)
    let p = HawkesParams::at_baseline(1.0, 0.6, 1.0).unwrap();
    let lim = count_gap_limit(&p).unwrap();
    let ts: Vec<f64> = (1..=20).map(|i| i as f64 * 0.5).collect();
    let ys: Vec<f64> = ts.iter().map(|&t| (lim - count_gap(&p, t).unwrap()).ln()).collect();
    let (tm, ym) = (ts.iter().sum::<f64>() / 20.0, ys.iter().sum::<f64>() / 20.0);
    let slope = ts.iter().zip(&ys).map(|(t, y)| (t - tm) * (y - ym)).sum::<f64>() / ts.iter().map(|t| (t - tm).powi(2)).sum::<f64>();
    assert!((slope + 0.4).abs() < 0.4 * 0.05, "slope {slope}");
}

#[test]
fn dwell_time_values() {
    assert_eq!(dwell_time(&query(1.0, 0.5, 1.0, 1.0, 1.0, 0.0)).unwrap(), 0.0);
    // Poisson reduction
    let (l, mu, t): (f64, f64, f64) = (1.5, 0.7, 4.0);
    let want = l / mu * (t - (1.0 - (-mu * t).exp()) / mu);
    close(dwell_time(&query(l, 0.0, 1.0, mu, 1.0, t)).unwrap(), want, 1e-12);
    // quadrature of the queue mean
    for q in [query(1.0, 0.5, 1.0, 1.0, 1.0, 10.0), query(1.0, 0.5, 1.0, 0.5, 1.0, 10.0)] {
        let model = QueueModel::new(q.arrivals, PhaseTypeDist::exponential(q.mu).unwrap());
        let opts = QuadOptions { abs_tol: 1e-12, rel_tol: 1e-12, ..QuadOptions::default() };
        let quad = integrate_scalar(|s| mean_vector(&model, s).unwrap().value[0], 0.0, q.horizon, &opts).unwrap();
        close(dwell_time(&q).unwrap(), quad, 1e-8);
    }
}

#[test]
fn revenue_gap_values() {
    assert_eq!(revenue_gap(&query(1.0, 0.5, 1.0, 2.0, 0.0, 5.0)).unwrap(), 0.0);
    let q = query(1.0, 0.5, 1.0, 2.0, 3.0, 400.0);
    close(revenue_gap(&q).unwrap(), revenue_gap_limit(&q).unwrap(), 1e-10);
    assert!(matches!(revenue_gap(&query(1.0, 0.5, 1.0, 0.5, 1.0, 5.0)), Err(Error::NearSingularGap { .. })));
}

#[test]
fn revenue_gap_limit_with_unit_jump() {
    // with α = 1 the limit reads (m/μ)(1 + 1/(β − α))
    let q = query(1.0, 1.0, 3.0, 2.0, 5.0, 1.0);
    close(revenue_gap_limit(&q).unwrap(), 5.0 / 2.0 * (1.0 + 1.0 / 2.0), 1e-12);
}

#[test]
fn revenue_gap_matches_paired_simulation() {
    let q = query(1.0, 0.5, 1.0, 2.0, 3.0, 8.0);
    let r = simulate_click(&q.arrivals, q.mu, q.horizon, 100_000, 91).unwrap();
    within_se(&r.dwell_gap, revenue_gap(&q).unwrap() / q.m, 3.0);
}

#[test]
fn revenue_gap_grows_with_horizon() {
    for (a, mu) in [(0.5, 2.0), (0.9, 0.3), (0.2, 5.0)] {
        let mut prev = 0.0;
        for i in 1..=100 {
            let g = revenue_gap(&query(1.0, a, 1.0, mu, 1.0, i as f64 * 0.2)).unwrap();
            assert!(g > prev);
            prev = g;
        }
    }
}
