mod common;

use common::{close, within_se};
use hawkes_queue::generating::*;
use hawkes_queue::hawkes::mean_intensity;
use hawkes_queue::queue_moments::{moments, QueueModel};
use hawkes_queue::simulate::{estimate, ServiceSampler, Statistic};
use hawkes_queue::{Error, HawkesParams, PhaseTypeDist};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn models() -> Vec<QueueModel> {
    vec![
        QueueModel::new(HawkesParams::at_baseline(1.0, 0.5, 1.0).unwrap(), PhaseTypeDist::exponential(1.0).unwrap()),
        QueueModel::new(HawkesParams::at_baseline(1.0, 0.0, 1.0).unwrap(), PhaseTypeDist::exponential(2.0).unwrap()),
        QueueModel::new(HawkesParams::at_baseline(1.0, 0.5, 0.75).unwrap(), PhaseTypeDist::erlang(2, 1.0).unwrap()),
    ]
}

#[test]
fn zero_argument() {
    for m in models() {
        let q = CgfQuery::new(vec![0.0; m.phases() + 1], 2.0);
        assert!(cgf(&m, &q).unwrap().abs() < 1e-14);
        close(mgf(&m, &q).unwrap(), 1.0, 1e-14);
        assert!(cgf_pde_residual(&m, &q, 1e-3).unwrap().abs() < 1e-12);
    }
}

#[test]
fn derivatives_recover_moments() {
    for m in models() {
        let t = 2.0;
        let fd = fd_moments(&m, t, 1e-4).unwrap();
        let q = moments(&m, t).unwrap();
        close(fd.mean[0], mean_intensity(&m.arrivals, t).unwrap(), 1e-5);
        for i in 0..m.phases() {
            close(fd.mean[i + 1], q.mean[i], 1e-5);
            close(fd.cov[(0, i + 1)], q.cov_lq[i], 1e-4);
            for j in 0..m.phases() {
                close(fd.cov[(i + 1, j + 1)], q.cov_qq[(i, j)], 1e-4);
            }
        }
    }
}

#[test]
fn pde_residual_is_small() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for m in models() {
        for _ in 0..20 {
            let delta: Vec<f64> = (0..=m.phases()).map(|_| rng.random_range(-0.3..0.3)).collect();
            let r = cgf_pde_residual(&m, &CgfQuery::new(delta, 2.0), 1e-3).unwrap();
            assert!(r.abs() < 1e-3, "{r}");
        }
    }
}

#[test]
fn convex_along_rays() {
    let m = &models()[2];
    let dir = [0.2, 0.5, -0.3];
    let g = |s: f64| cgf(m, &CgfQuery::new(dir.iter().map(|d| d * s).collect(), 3.0)).unwrap();
    let h = 0.05;
    for i in -5..5 {
        let s = i as f64 * 0.1;
        assert!(g(s + h) - 2.0 * g(s) + g(s - h) >= -1e-6);
    }
}

#[test]
fn mgf_matches_simulation() {
    let m = &models()[0];
    let delta = vec![0.1, 0.2];
    let r = estimate(&m.arrivals, &ServiceSampler::PhaseType(m.service.clone()), 3.0, 100_000, &Statistic::Mgf { delta: delta.clone(), t: 3.0 }, 81)
        .unwrap();
    within_se(&r, mgf(m, &CgfQuery::new(delta, 3.0)).unwrap(), 3.0);
}

#[test]
fn blowup_is_reported() {
    let m = QueueModel::new(HawkesParams::at_baseline(1.0, 0.9, 1.0).unwrap(), PhaseTypeDist::exponential(1.0).unwrap());
    assert!(matches!(cgf(&m, &CgfQuery::new(vec![3.0, 3.0], 20.0)), Err(Error::CgfBlowup { .. })));
}

#[test]
fn rejects_wrong_length() {
    let m = &models()[2];
    assert!(matches!(cgf(m, &CgfQuery::new(vec![0.1], 1.0)), Err(Error::DimensionMismatch { .. })));
}
