use hawkes_queue::applications::{count_gap, count_gap_limit, revenue_gap, revenue_gap_limit, ClickImpactQuery};
use hawkes_queue::config::{ArrivalSpec, RunConfig};
use hawkes_queue::control::{club_scenario, optimal_rate};
use hawkes_queue::det_queue::{mean, variance, variance_gap_dm, DetQueueModel};
use hawkes_queue::queue_moments::{autocov_q, closed_form_moments, moments, ode_reference};
use hawkes_queue::selftest::random_model;
use hawkes_queue::HawkesParams;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn stable() -> impl Strategy<Value = HawkesParams> {
    (0.1f64..3.0, 0.3f64..3.0, 0.0f64..0.95).prop_map(|(l, b, r)| HawkesParams::at_baseline(l, r * b, b).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn closed_form_agrees_with_ode(seed in any::<u64>(), t in 0.05f64..8.0) {
        let m = random_model(&mut ChaCha8Rng::seed_from_u64(seed));
        let a = closed_form_moments(&m, t).unwrap();
        let b = ode_reference(&m, t).unwrap();
        let scale = 1.0 + b.cov_qq.amax();
        prop_assert!((&a.mean - &b.mean).amax() < 1e-7 * scale);
        prop_assert!((&a.cov_lq - &b.cov_lq).amax() < 1e-7 * scale);
        prop_assert!((&a.cov_qq - &b.cov_qq).amax() < 1e-7 * scale);
    }

    #[test]
    fn covariance_is_symmetric_with_nonnegative_diagonal(seed in any::<u64>(), t in 0.0f64..10.0) {
        let m = random_model(&mut ChaCha8Rng::seed_from_u64(seed));
        let q = moments(&m, t).unwrap();
        prop_assert!((&q.cov_qq - q.cov_qq.transpose()).amax() < 1e-10);
        prop_assert!(q.cov_qq.diagonal().min() > -1e-10);
        prop_assert!(q.mean.min() >= -1e-12);
    }

    #[test]
    fn autocovariance_vanishes_at_full_lag(seed in any::<u64>(), t in 0.1f64..6.0) {
        let m = random_model(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(autocov_q(&m, t, t).unwrap().value.amax(), 0.0);
        let zero = autocov_q(&m, t, 0.0).unwrap().value;
        prop_assert!((zero - moments(&m, t).unwrap().cov_qq).amax() < 1e-8);
    }

    #[test]
    fn deterministic_queue_is_continuous_at_first_departure(p in stable(), d in 0.2f64..6.0) {
        let m = DetQueueModel::new(p, d).unwrap();
        let h = 1e-7 * d;
        prop_assert!((mean(&m, d - h).unwrap() - mean(&m, d + h).unwrap()).abs() < 1e-5 * (1.0 + mean(&m, d).unwrap()));
        prop_assert!((variance(&m, d - h).unwrap() - variance(&m, d + h).unwrap()).abs() < 1e-5 * (1.0 + variance(&m, d).unwrap()));
    }

    #[test]
    fn deterministic_service_has_larger_stationary_variance(p in stable(), d in 0.05f64..10.0) {
        prop_assume!(p.jump > 1e-3);
        prop_assert!(variance_gap_dm(&p, d).unwrap() > 0.0);
    }

    #[test]
    fn revenue_gap_grows_with_horizon(p in stable(), mu in 0.1f64..5.0, m in 0.1f64..10.0, t in 0.0f64..30.0, dt in 0.01f64..5.0) {
        prop_assume!((mu - p.gap()).abs() > 1e-3);
        let q = |h| ClickImpactQuery { arrivals: p, mu, m, horizon: h };
        let (a, b) = (revenue_gap(&q(t)).unwrap(), revenue_gap(&q(t + dt)).unwrap());
        let lim = revenue_gap_limit(&q(t)).unwrap();
        // strict growth while the remaining headroom is above rounding
        if lim - a > 1e-9 * lim {
            prop_assert!(b > a);
        } else {
            prop_assert!(b >= a - 1e-15 * lim);
        }
    }

    #[test]
    fn count_gap_rises_to_its_limit(p in stable(), t in 0.0f64..50.0) {
        let g = count_gap(&p, t).unwrap();
        prop_assert!(g >= 1.0 - 1e-12);
        prop_assert!(g <= count_gap_limit(&p).unwrap() + 1e-12);
        prop_assert!(count_gap(&p, t + 0.5).unwrap() >= g - 1e-12);
    }

    #[test]
    fn optimal_rate_is_nonnegative(q in 0.0f64..50.0, g1 in -500.0f64..500.0, g2 in -500.0f64..500.0) {
        prop_assert!(optimal_rate(q, g1, g2, &club_scenario(false)).unwrap() >= 0.0);
    }

    #[test]
    fn config_round_trips(p in stable(), seed in any::<u64>(), reps in 2usize..100_000) {
        let mut cfg = RunConfig::minimal(&p);
        cfg.arrivals = ArrivalSpec::from_params(&p);
        cfg.seed = Some(seed);
        cfg.reps = Some(reps);
        let again = RunConfig::from_json(&cfg.to_json()).unwrap();
        prop_assert_eq!(again, cfg);
    }
}
