mod common;

use common::{close, within_se};
use hawkes_queue::det_queue::*;
use hawkes_queue::hawkes::{autocov_count, lambda_inf, transient_moments};
use hawkes_queue::queue_moments::{steady_state, QueueModel};
use hawkes_queue::simulate::{simulate_panel, Column, ServiceSampler, DEFAULT_EVENT_CAP};
use hawkes_queue::{HawkesParams, PhaseTypeDist};

fn hp(baseline: f64, jump: f64, decay: f64) -> HawkesParams {
    HawkesParams::at_baseline(baseline, jump, decay).unwrap()
}

#[test]
fn mean_edges_and_limit() {
    let m = DetQueueModel::new(hp(1.0, 0.75, 1.25), 5.0).unwrap();
    assert_eq!(mean(&m, 0.0).unwrap(), 0.0);
    close(mean(&m, 300.0).unwrap(), 12.5, 1e-9);
    close(mean(&m, 300.0).unwrap(), lambda_inf(&m.arrivals).unwrap() * 5.0, 1e-9);
    // before any departure the queue is the count
    close(mean(&m, 3.0).unwrap(), transient_moments(&m.arrivals, 3.0).unwrap().mean_count, 1e-12);
}

#[test]
fn variance_before_first_departure_is_count_variance() {
    let m = DetQueueModel::new(hp(1.0, 1.0, 2.0), 4.0).unwrap();
    assert_eq!(variance(&m, 0.0).unwrap(), 0.0);
    for t in [0.5, 2.0, 4.0] {
        close(variance(&m, t).unwrap(), autocov_count(&m.arrivals, t, 0.0).unwrap(), 1e-10);
    }
}

#[test]
fn autocovariance_edges() {
    let m = DetQueueModel::new(hp(1.0, 0.75, 1.25), 5.0).unwrap();
    assert_eq!(autocov(&m, 2.0, 3.0).unwrap(), 0.0);
    assert_eq!(autocov(&m, 3.0, 3.0).unwrap(), 0.0);
    for t in [1.0, 5.0, 12.0] {
        close(autocov(&m, t, 0.0).unwrap(), variance(&m, t).unwrap(), 1e-10);
    }
}

#[test]
fn moments_match_simulation() {
    let m = DetQueueModel::new(hp(1.0, 0.75, 1.25), 5.0).unwrap();
    let probes = [8.0, 10.0];
    let panel = simulate_panel(&m.arrivals, &ServiceSampler::deterministic(5.0).unwrap(), &probes, 100_000, 61, DEFAULT_EVENT_CAP).unwrap();
    within_se(&panel.mean(1, Column::Queue), mean(&m, 10.0).unwrap(), 3.0);
    within_se(&panel.variance(1, Column::Queue), variance(&m, 10.0).unwrap(), 3.0);
    within_se(&panel.cov((1, Column::Queue), (0, Column::Queue)), autocov(&m, 10.0, 2.0).unwrap(), 3.0);

    let short = DetQueueModel::new(hp(1.0, 1.0, 2.0), 1.0).unwrap();
    let panel = simulate_panel(&short.arrivals, &ServiceSampler::deterministic(1.0).unwrap(), &[10.0], 10_000, 62, DEFAULT_EVENT_CAP).unwrap();
    within_se(&panel.variance(0, Column::Queue), variance(&short, 10.0).unwrap(), 3.0);
}

#[test]
fn stationary_variances() {
    let p = hp(1.0, 1.0, 2.0);
    let gap = variance_gap_dm(&p, 1.0).unwrap();
    assert!(gap > 0.0);
    close(gap, steady_variance_det(&p, 1.0).unwrap() - steady_variance_exp(&p, 1.0).unwrap(), 1e-12);
    // the exponential case agrees with the phase-type steady state
    let q = QueueModel::new(p, PhaseTypeDist::exponential(1.0).unwrap());
    close(steady_variance_exp(&p, 1.0).unwrap(), steady_state(&q).unwrap().cov_qq[(0, 0)], 1e-10);
    close(steady_variance_det(&p, 1.0).unwrap(), variance(&DetQueueModel::new(p, 1.0).unwrap(), 200.0).unwrap(), 1e-8);
}

#[test]
fn gap_vanishes_without_excitation() {
    for a in [1e-3, 1e-5, 1e-7] {
        assert!(variance_gap_dm(&hp(1.0, a, 2.0), 1.0).unwrap().abs() < 10.0 * a);
    }
    close(variance_gap_dm(&hp(1.0, 0.0, 2.0), 1.0).unwrap(), 0.0, 1e-14);
}

#[test]
fn deterministic_service_gives_more_variance_in_simulation() {
    let p = hp(1.0, 1.0, 2.0);
    let d = simulate_panel(&p, &ServiceSampler::deterministic(1.0).unwrap(), &[10.0], 100_000, 71, DEFAULT_EVENT_CAP).unwrap();
    let m = simulate_panel(&p, &ServiceSampler::PhaseType(PhaseTypeDist::exponential(1.0).unwrap()), &[10.0], 100_000, 72, DEFAULT_EVENT_CAP)
        .unwrap();
    let (vd, vm) = (d.variance(0, Column::Queue), m.variance(0, Column::Queue));
    let z = (vd.point - vm.point) / (vd.std_error.powi(2) + vm.std_error.powi(2)).sqrt();
    assert!(z > 3.0, "z = {z}");
}
