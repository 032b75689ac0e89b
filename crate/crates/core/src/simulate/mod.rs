//! Monte Carlo simulation of Hawkes arrivals and Hawkes-driven
//! infinite-server queues. Every replication draws from its own ChaCha
//! stream keyed by (seed, replication, role), so results do not depend on
//! the number of worker threads.

mod click;
mod estimate;
pub mod rng;
mod service;
mod thinning;

pub use click::{simulate_click, ClickReport};
pub use estimate::{estimate, simulate_panel, Column, EstimateReport, Panel, Statistic};
pub use rng::{stream, Role};
pub use service::{phase_at, ServiceHook, ServiceSampler};
pub use thinning::{hawkes_arrivals, intensity_at, DEFAULT_EVENT_CAP};

use crate::error::{Error, Result};
use crate::hawkes::HawkesParams;

/// One realisation of arrivals and, for queues, their services.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub params: HawkesParams,
    pub horizon: f64,
    pub arrival_times: Vec<f64>,
    /// Empty for a bare Hawkes path.
    pub service_durations: Vec<f64>,
    /// Phase visits (phase, holding time) per arrival, for phase-type service.
    pub phase_paths: Option<Vec<Vec<(usize, f64)>>>,
    /// λ just before each arrival.
    pub intensity_at_arrivals: Vec<f64>,
}

impl SamplePath {
    /// N_t
    pub fn count_at(&self, t: f64) -> usize {
        self.arrival_times.partition_point(|&s| s <= t)
    }

    /// λ_t
    pub fn intensity_at(&self, t: f64) -> f64 {
        intensity_at(&self.params, &self.arrival_times, t)
    }

    /// Total number in service at t.
    pub fn occupancy_at(&self, t: f64) -> usize {
        let n = self.count_at(t);
        (0..n).filter(|&i| t - self.arrival_times[i] < self.service_durations[i]).count()
    }

    /// Number in each phase at t (a single entry for non-phase-type service).
    pub fn phase_occupancy_at(&self, t: f64, phases: usize) -> Vec<usize> {
        let n = self.count_at(t);
        let mut out = vec![0; phases.max(1)];
        match &self.phase_paths {
            Some(paths) => {
                for i in 0..n {
                    if let Some(ph) = phase_at(&paths[i], t - self.arrival_times[i]) {
                        out[ph] += 1;
                    }
                }
            }
            None => out[0] = self.occupancy_at(t),
        }
        out
    }

    /// Times at which the total occupancy changes, with the new value.
    pub fn occupancy_steps(&self) -> Vec<(f64, usize)> {
        let mut ev: Vec<(f64, i32)> = Vec::with_capacity(2 * self.arrival_times.len());
        for (i, &s) in self.arrival_times.iter().enumerate() {
            ev.push((s, 1));
            let end = s + self.service_durations[i];
            if end <= self.horizon {
                ev.push((end, -1));
            }
        }
        ev.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        let mut level = 0i64;
        ev.into_iter()
            .map(|(t, d)| {
                level += d as i64;
                (t, level as usize)
            })
            .collect()
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidParams(format!("horizon must be positive, got {horizon}")));
    }
    Ok(())
}

/// Hawkes arrivals on [0, horizon] from replication 0 of `seed`.
pub fn simulate_hawkes(p: &HawkesParams, horizon: f64, seed: u64) -> Result<SamplePath> {
    simulate_hawkes_rep(p, horizon, seed, 0, DEFAULT_EVENT_CAP)
}

pub fn simulate_hawkes_rep(p: &HawkesParams, horizon: f64, seed: u64, rep: u64, cap: usize) -> Result<SamplePath> {
    p.validate()?;
    check_horizon(horizon)?;
    let mut rng = stream(seed, rep, Role::Arrivals);
    let mut times = Vec::new();
    let mut lams = Vec::new();
    hawkes_arrivals(p, horizon, &mut rng, cap, &mut times, &mut lams)?;
    Ok(SamplePath {
        params: *p,
        horizon,
        arrival_times: times,
        service_durations: Vec::new(),
        phase_paths: None,
        intensity_at_arrivals: lams,
    })
}

/// Hawkes arrivals with one independent service per arrival.
pub fn simulate_queue(p: &HawkesParams, service: &ServiceSampler, horizon: f64, seed: u64) -> Result<SamplePath> {
    simulate_queue_rep(p, service, horizon, seed, 0, DEFAULT_EVENT_CAP)
}

pub fn simulate_queue_rep(
    p: &HawkesParams,
    service: &ServiceSampler,
    horizon: f64,
    seed: u64,
    rep: u64,
    cap: usize,
) -> Result<SamplePath> {
    let mut path = simulate_hawkes_rep(p, horizon, seed, rep, cap)?;
    let mut rng = stream(seed, rep, Role::Service);
    let mut scratch = Vec::new();
    let is_ph = matches!(service, ServiceSampler::PhaseType(_));
    let mut phases = Vec::new();
    for _ in 0..path.arrival_times.len() {
        path.service_durations.push(service.draw(&mut rng, &mut scratch));
        if is_ph {
            phases.push(scratch.clone());
        }
    }
    if is_ph {
        path.phase_paths = Some(phases);
    }
    Ok(path)
}
