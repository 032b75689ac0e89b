//! The acceptance checks, shared by `hawkes-queue selftest` and the
//! `acceptance` test target. Each check returns a pass flag and a one-line
//! detail string.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::control::{self, club_scenario, objective};
use crate::det_queue::{self, DetQueueModel};
use crate::error::Result;
use crate::generating::{cgf, cgf_pde_residual, fd_moments, CgfQuery};
use crate::hawkes::{autocov_count, transient_moments, HawkesParams};
use crate::matrix_kit::{Matrix, Vector};
use crate::phase_type::PhaseTypeDist;
use crate::queue_moments::{
    monolithic_autocov_check, autocov_q, erlang_moments, hyperexp_moments, moments, ode_reference, steady_state,
    closed_form_moments, QueueModel, QueueMoments,
};
use crate::simulate::{self, simulate_panel, Column, ServiceSampler, Statistic, DEFAULT_EVENT_CAP};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options {
    /// Replications for the simulation checks.
    pub reps: usize,
    pub seed: u64,
}

impl Default for Options {
    fn default() -> Self {
        Self { reps: 100_000, seed: 20_240_601 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    /// Headline number behind the verdict, where one exists (max |z| for the
    /// simulation comparison).
    pub metric: Option<f64>,
}

pub const NAMES: [&str; 10] = [
    "route equivalence",
    "specialisations",
    "simulation concordance",
    "quartile percentages",
    "steady-state identities",
    "D-vs-M ordering",
    "generating functions",
    "auto-covariance",
    "control",
    "determinism",
];

pub fn run(id: usize, opts: &Options) -> CriterionResult {
    let mut metric = None;
    let out = match id {
        1 => route_equivalence(),
        2 => specialisations(),
        3 => concordance(opts).map(|tally| {
            metric = Some(tally.worst);
            (
                tally.worst < 3.0,
                format!("{} comparisons at {} reps, max |z| {:.2} ({})", tally.count, opts.reps, tally.worst, tally.worst_label),
            )
        }),
        4 => quartiles(opts),
        5 => steady_identities(),
        6 => dm_ordering(opts),
        7 => generating(),
        8 => autocovariance(opts),
        9 => control_check(),
        10 => determinism(),
        _ => panic!("no criterion {id}"),
    };
    let (passed, detail) = out.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionResult { id, name: NAMES[id - 1], passed, detail, metric }
}

pub fn run_all(opts: &Options) -> Vec<CriterionResult> {
    (1..=10).map(|i| run(i, opts)).collect()
}

pub fn line(r: &CriterionResult) -> String {
    format!("criterion {:>2} {:<24} {}  {}", r.id, r.name, if r.passed { "PASS" } else { "FAIL" }, r.detail)
}

pub fn render(results: &[CriterionResult]) -> String {
    results.iter().map(|r| line(r) + "\n").collect()
}

type Check = Result<(bool, String)>;

// max over entries of |a − b| / max(1, |b|)
fn rel_gap(a: &QueueMoments, b: &QueueMoments) -> f64 {
    let mut g: f64 = 0.0;
    let mut upd = |x: f64, y: f64| g = g.max((x - y).abs() / y.abs().max(1.0));
    for i in 0..a.mean.len() {
        upd(a.mean[i], b.mean[i]);
        upd(a.cov_lq[i], b.cov_lq[i]);
        for j in 0..a.mean.len() {
            upd(a.cov_qq[(i, j)], b.cov_qq[(i, j)]);
        }
    }
    g
}

/// Random stable model with a well-conditioned shifted sub-generator.
pub fn random_model(rng: &mut ChaCha8Rng) -> QueueModel {
    loop {
        let n = rng.random_range(1..=5);
        let mut s = Matrix::zeros(n, n);
        for i in 0..n {
            let mut out = rng.random_range(0.2..3.0);
            for j in 0..n {
                if i != j && rng.random_bool(0.5) {
                    let r = rng.random_range(0.0..2.0);
                    s[(i, j)] = r;
                    out += r;
                }
            }
            s[(i, i)] = -out;
        }
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        let tot: f64 = w.iter().sum();
        let theta = Vector::from_iterator(n, w.iter().map(|v| v / tot));
        let decay = rng.random_range(0.5..2.0);
        let jump = decay * rng.random_range(0.0..0.9);
        let p = HawkesParams::new(rng.random_range(0.5..2.0), jump, decay, rng.random_range(0.0..3.0)).unwrap();
        let Ok(dist) = PhaseTypeDist::new(s.clone(), theta) else { continue };
        let k = p.gap();
        let gap = s.complex_eigenvalues().iter().map(|z| ((z.re + k).powi(2) + z.im.powi(2)).sqrt()).fold(f64::INFINITY, f64::min);
        if gap > 0.05 && k > 0.05 {
            return QueueModel::new(p, dist);
        }
    }
}

fn route_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let m = random_model(&mut rng);
        for &t in &[0.5, 2.0, 10.0] {
            let closed = closed_form_moments(&m, t)?;
            let ode = ode_reference(&m, t)?;
            worst = worst.max(rel_gap(&closed, &ode));
        }
    }
    Ok((worst < 1e-7, format!("50 models x 3 times, max gap {worst:.2e} (tol 1e-7)")))
}

fn specialisations() -> Check {
    let mut worst: f64 = 0.0;
    let mut cases = Vec::new();
    let mut check = |label: &str, m: QueueModel, via: fn(&QueueModel, f64) -> Result<QueueMoments>| -> Result<()> {
        for &t in &[0.5, 2.0, 6.0] {
            let g = rel_gap(&via(&m, t)?, &ode_reference(&m, t)?);
            worst = worst.max(g);
        }
        cases.push(label.to_string());
        Ok(())
    };
    let p = HawkesParams::at_baseline(1.0, 0.5, 0.75)?;
    check("erlang", QueueModel::new(p, PhaseTypeDist::erlang(3, 1.0)?), erlang_moments)?;
    // nμ = β − α = 1/2
    let ps = HawkesParams::new(1.0, 0.5, 1.0, 1.7)?;
    check("erlang n*mu=gap", QueueModel::new(ps, PhaseTypeDist::erlang(3, 1.0 / 6.0)?), erlang_moments)?;
    let ph = HawkesParams::new(2.0, 0.5, 1.0, 2.5)?;
    check("hyperexp", QueueModel::new(ph, PhaseTypeDist::hyperexp(&[0.15, 0.4, 0.45], &[1.0, 4.0, 6.0])?), hyperexp_moments)?;
    // μᵢ = β − α
    check("hyperexp mu=gap", QueueModel::new(ps, PhaseTypeDist::hyperexp(&[1.0], &[0.5])?), hyperexp_moments)?;
    check("hyperexp mu_i=gap", QueueModel::new(ps, PhaseTypeDist::hyperexp(&[0.3, 0.7], &[0.5, 2.0])?), hyperexp_moments)?;
    // 2μᵢ = β − α
    check("hyperexp 2mu=gap", QueueModel::new(ps, PhaseTypeDist::hyperexp(&[0.6, 0.4], &[0.25, 3.0])?), hyperexp_moments)?;
    Ok((worst < 1e-7, format!("{} cases, max gap {worst:.2e} (tol 1e-7)", cases.len())))
}

struct ZTally {
    count: usize,
    worst: f64,
    worst_label: String,
}

impl ZTally {
    fn new() -> Self {
        Self { count: 0, worst: 0.0, worst_label: String::new() }
    }

    fn add(&mut self, label: impl Fn() -> String, z: f64) {
        self.count += 1;
        if !(z.abs() <= self.worst) {
            self.worst = z.abs();
            self.worst_label = label();
        }
    }
}

fn concordance(opts: &Options) -> Result<ZTally> {
    let probes: Vec<f64> = (1..=10).map(|i| i as f64).collect();
    let mut tally = ZTally::new();
    let sets: Vec<(&str, QueueModel)> = vec![
        ("M", QueueModel::new(HawkesParams::at_baseline(1.0, 0.5, 0.75)?, PhaseTypeDist::exponential(1.0)?)),
        ("E3", QueueModel::new(HawkesParams::at_baseline(1.0, 0.5, 0.75)?, PhaseTypeDist::erlang(3, 1.0)?)),
        (
            "H3",
            QueueModel::new(HawkesParams::at_baseline(2.0, 1.0, 2.0)?, PhaseTypeDist::hyperexp(&[0.15, 0.4, 0.45], &[1.0, 4.0, 6.0])?),
        ),
    ];
    for (si, (name, m)) in sets.iter().enumerate() {
        let sampler = ServiceSampler::PhaseType(m.service.clone());
        let panel = simulate_panel(&m.arrivals, &sampler, &probes, opts.reps, opts.seed + si as u64, DEFAULT_EVENT_CAP)?;
        // totals over phases: the per-phase structure is covered by the route checks
        for (j, &t) in probes.iter().enumerate() {
            let q = moments(m, t)?;
            tally.add(|| format!("{name} mean t={t}"), panel.mean(j, Column::Queue).z(q.mean.sum()));
            tally.add(|| format!("{name} var t={t}"), panel.variance(j, Column::Queue).z(q.total_variance()));
            tally.add(|| format!("{name} cov_lq t={t}"), panel.cov((j, Column::Intensity), (j, Column::Queue)).z(q.cov_lq.sum()));
            // auto-covariance with lag 3
            if j >= 3 {
                let ac = autocov_q(m, t, 3.0)?.value.sum();
                tally.add(|| format!("{name} autocov t={t} tau=3"), panel.cov((j, Column::Queue), (j - 3, Column::Queue)).z(ac));
            }
        }
    }
    // Hawkes/D/∞ with D = 5
    let dm = DetQueueModel::new(HawkesParams::at_baseline(1.0, 0.75, 1.25)?, 5.0)?;
    let panel = simulate_panel(&dm.arrivals, &ServiceSampler::deterministic(5.0)?, &probes, opts.reps, opts.seed + 10, DEFAULT_EVENT_CAP)?;
    for (j, &t) in probes.iter().enumerate() {
        tally.add(|| format!("D mean t={t}"), panel.mean(j, Column::Queue).z(det_queue::mean(&dm, t)?));
        tally.add(|| format!("D var t={t}"), panel.variance(j, Column::Queue).z(det_queue::variance(&dm, t)?));
        if j >= 2 {
            let ac = det_queue::autocov(&dm, t, 2.0)?;
            tally.add(|| format!("D autocov t={t} tau=2"), panel.cov((j, Column::Queue), (j - 2, Column::Queue)).z(ac));
        }
    }
    Ok(tally)
}

fn quartiles(opts: &Options) -> Check {
    let none = ServiceSampler::Deterministic(f64::INFINITY);
    let viral = HawkesParams::at_baseline(0.5, 19.5, 20.0)?;
    let calm = HawkesParams::at_baseline(1.0, 0.5, 1.0)?;
    let a = simulate::estimate(&viral, &none, 10.0, opts.reps, &Statistic::QuartileMajority, opts.seed)?;
    let b = simulate::estimate(&calm, &none, 10.0, opts.reps, &Statistic::QuartileMajority, opts.seed + 1)?;
    let ok = (a.point - 0.824).abs() <= 0.01 && (b.point - 0.180).abs() <= 0.01;
    Ok((ok, format!("viral {:.4} (target 0.824), calm {:.4} (target 0.180), +-0.01", a.point, b.point)))
}

fn steady_identities() -> Check {
    let mut worst_identity: f64 = 0.0;
    let mut worst_lyap: f64 = 0.0;
    for i in 0..10 {
        for j in 0..10 {
            let decay = 0.5 + 0.3 * i as f64;
            let jump = decay * 0.09 * j as f64;
            let mu = 0.3 + 0.25 * ((i * 7 + j * 3) % 10) as f64;
            let m = QueueModel::new(HawkesParams::at_baseline(1.0 + 0.1 * j as f64, jump, decay)?, PhaseTypeDist::exponential(mu)?);
            let s = steady_state(&m)?;
            let v = s.cov_qq[(0, 0)];
            worst_identity = worst_identity.max((v - s.mean[0] - s.cov_lq[0] / mu).abs() / v.max(1.0));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let m = random_model(&mut rng);
        let s = steady_state(&m)?;
        let st = m.service.sub_generator().transpose();
        let theta = m.service.initial_dist();
        let q = Matrix::from_diagonal(&s.mean);
        let forcing = theta * s.cov_lq.transpose() + &s.cov_lq * theta.transpose() - &st * &q - &q * st.transpose();
        let r = &st * &s.cov_qq + &s.cov_qq * st.transpose() + &forcing;
        worst_lyap = worst_lyap.max(r.amax() / forcing.amax().max(1.0));
    }
    let m = QueueModel::new(HawkesParams::at_baseline(3.0, 0.0, 1.0)?, PhaseTypeDist::exponential(0.7)?);
    let s = steady_state(&m)?;
    let ratio = s.cov_qq.sum() / s.mean.sum();
    let ok = worst_identity < 1e-10 && worst_lyap < 1e-10 && (ratio - 1.0).abs() < 1e-9;
    Ok((ok, format!("identity gap {worst_identity:.1e}, Lyapunov residual {worst_lyap:.1e}, Poisson ratio {ratio:.12}")))
}

fn dm_ordering(opts: &Options) -> Check {
    let mut min_gap = f64::INFINITY;
    let mut points = 0;
    for i in 0..10 {
        for j in 0..4 {
            for l in 0..5 {
                let k = 0.1 + (2.0 - 0.1) * i as f64 / 9.0;
                let jump = [0.05, 0.5, 1.0, 3.0][j];
                let d = [0.1, 0.5, 1.0, 4.0, 10.0][l];
                let p = HawkesParams::at_baseline(1.0, jump, jump + k)?;
                min_gap = min_gap.min(det_queue::variance_gap_dm(&p, d)?);
                points += 1;
            }
        }
    }
    let p = HawkesParams::at_baseline(1.0, 1.0, 2.0)?;
    let vd = simulate::estimate(&p, &ServiceSampler::deterministic(1.0)?, 10.0, opts.reps, &Statistic::VarQ { t: 10.0 }, opts.seed)?;
    let vm = simulate::estimate(
        &p,
        &ServiceSampler::PhaseType(PhaseTypeDist::exponential(1.0)?),
        10.0,
        opts.reps,
        &Statistic::VarQ { t: 10.0 },
        opts.seed + 1,
    )?;
    let z = (vd.point - vm.point) / (vd.std_error.powi(2) + vm.std_error.powi(2)).sqrt();
    let ok = min_gap > 0.0 && z > 3.0;
    Ok((
        ok,
        format!(
            "{points} grid points, min V_D - V_M {min_gap:.3e}; simulated Var D {:.4} vs M {:.4}, z {z:.1}",
            vd.point, vm.point
        ),
    ))
}

fn generating() -> Check {
    let mut worst: f64 = 0.0;
    let models = [
        QueueModel::new(HawkesParams::new(1.0, 0.5, 0.75, 1.3)?, PhaseTypeDist::exponential(1.0)?),
        QueueModel::new(HawkesParams::new(1.5, 0.6, 1.2, 0.8)?, PhaseTypeDist::hyperexp(&[0.3, 0.7], &[0.7, 2.5])?),
        QueueModel::new(HawkesParams::at_baseline(1.0, 0.5, 1.0)?, PhaseTypeDist::erlang(2, 1.5)?),
    ];
    let t = 2.0;
    for m in &models {
        let fd = fd_moments(m, t, 1e-4)?;
        let q = moments(m, t)?;
        let h = transient_moments(&m.arrivals, t)?;
        let n = m.phases();
        let mut upd = |a: f64, b: f64| worst = worst.max((a - b).abs());
        upd(fd.mean[0], h.mean_intensity);
        upd(fd.cov[(0, 0)], h.var_intensity);
        for i in 0..n {
            upd(fd.mean[1 + i], q.mean[i]);
            upd(fd.cov[(0, 1 + i)], q.cov_lq[i]);
            for j in 0..n {
                upd(fd.cov[(1 + i, 1 + j)], q.cov_qq[(i, j)]);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_pde: f64 = 0.0;
    let pde_models = [
        QueueModel::new(HawkesParams::new(1.0, 0.5, 0.75, 1.3)?, PhaseTypeDist::exponential(1.0)?),
        QueueModel::new(HawkesParams::new(1.0, 0.0, 0.75, 1.3)?, PhaseTypeDist::exponential(1.0)?),
    ];
    for m in &pde_models {
        for _ in 0..20 {
            let delta: Vec<f64> = (0..=m.phases()).map(|_| rng.random_range(-0.2..0.2)).collect();
            worst_pde = worst_pde.max(cgf_pde_residual(m, &CgfQuery::new(delta, 2.0), 1e-3)?);
        }
    }
    let zero = cgf(&models[1], &CgfQuery::new(vec![0.0; 3], 4.0))?;
    let ok = worst < 1e-4 && worst_pde < 1e-3 && zero == 0.0;
    Ok((ok, format!("moment gap {worst:.1e} (tol 1e-4), PDE residual {worst_pde:.1e} (tol 1e-3), G(0,t) = {zero}")))
}

fn autocovariance(opts: &Options) -> Check {
    let p = HawkesParams::at_baseline(1.0, 0.75, 1.25)?;
    let probes: Vec<f64> = (1..=10).map(|i| i as f64).collect();
    let none = ServiceSampler::Deterministic(f64::INFINITY);
    let panel = simulate_panel(&p, &none, &probes, opts.reps, opts.seed + 20, DEFAULT_EVENT_CAP)?;
    let mut tally = ZTally::new();
    for (j, &t) in probes.iter().enumerate() {
        for (l, &u) in probes.iter().enumerate().take(j + 1) {
            let c = autocov_count(&p, t, t - u)?;
            tally.add(|| format!("C({t},{})", t - u), panel.cov((j, Column::Count), (l, Column::Count)).z(c));
        }
    }
    let mut var_gap: f64 = 0.0;
    for i in 0..50 {
        let t = 0.2 * i as f64;
        var_gap = var_gap.max((autocov_count(&p, t, 0.0)? - transient_moments(&p, t)?.var_count).abs());
    }
    let m = QueueModel::new(p, PhaseTypeDist::erlang(2, 0.8)?);
    let rep = monolithic_autocov_check(&m, 10.0, 4.0)?;
    let ok = tally.worst < 3.0 && var_gap < 1e-10 && rep.corrected_error < 1e-8;
    Ok((
        ok,
        format!(
            "{} lags, max |z| {:.2} ({}); |C(t,0) - Var N| {var_gap:.1e}; single-expression form off by {:.3e} as stated, {:.1e} with E[Q_(t-tau)] in the last factor",
            tally.count, tally.worst, tally.worst_label, rep.literal_error, rep.corrected_error
        ),
    ))
}

fn control_check() -> Check {
    let left = control::solve(&club_scenario(false))?;
    let right = control::solve(&club_scenario(true))?;
    let peak = |s: &control::ControlSolution| s.mu_star.iter().cloned().fold(0.0, f64::max);
    let ratio = peak(&right) / peak(&left);
    let prob = club_scenario(false);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worse = 0;
    for _ in 0..100 {
        let pert: Vec<f64> = left.mu_star.iter().map(|m| (m + 0.1 * rng.random_range(-1.0..1.0)).max(0.0)).collect();
        if objective(&prob, &pert)? < left.objective {
            worse += 1;
        }
    }
    let ok = left.converged && right.converged && left.residual < 1e-6 && right.residual < 1e-6 && (ratio - 2.0).abs() <= 0.6 && worse == 100;
    Ok((
        ok,
        format!(
            "residuals {:.1e}/{:.1e}, peak ratio {ratio:.3} (target 2 +-30%), {worse}/100 perturbations worse",
            left.residual, right.residual
        ),
    ))
}

/// The simulate command's CSV for a fixed config.
pub fn determinism_sample(threads: usize, reps: Option<usize>) -> Result<String> {
    let cfg = crate::config::RunConfig::from_json(
        r#"{"arrivals": {"baseline": "1", "jump": "0.5", "decay": "0.75"},
            "service": {"kind": "hyper_exponential", "theta": ["0.15", "0.4", "0.45"], "rates": ["1", "4", "6"]},
            "times": {"start": 0, "stop": 10, "count": 21}, "seed": 42}"#,
    )?;
    let set = crate::cli::Settings { seed: 42, reps, compare: None };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
    pool.install(|| crate::cli::cmd_simulate(&cfg, &set)).map(|r| r.csv())
}

fn determinism() -> Check {
    let mut ok = true;
    for reps in [None, Some(2000)] {
        let a = determinism_sample(1, reps)?;
        let b = determinism_sample(1, reps)?;
        let c = determinism_sample(4, reps)?;
        ok &= a == b && a == c;
    }
    Ok((ok, "path and 2000-rep estimate CSVs identical across runs and 1/4 threads".into()))
}
