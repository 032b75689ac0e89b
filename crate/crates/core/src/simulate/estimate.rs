//! Replicated estimation at fixed probe times.

use rayon::prelude::*;
use serde::Serialize;

use super::rng::{stream, Role};
use super::service::{phase_at, ServiceSampler};
use super::thinning::{hawkes_arrivals, intensity_at, DEFAULT_EVENT_CAP};
use crate::error::{Error, Result};
use crate::hawkes::HawkesParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateReport {
    pub point: f64,
    pub std_error: f64,
    pub replications: usize,
}

impl EstimateReport {
    /// (point − target) / std_error.
    pub fn z(&self, target: f64) -> f64 {
        let d = self.point - target;
        if self.std_error > 0.0 {
            d / self.std_error
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY * d.signum()
        }
    }
}

/// A quantity observed at a probe time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    Intensity,
    Count,
    /// Total occupancy.
    Queue,
    Phase(usize),
}

/// Per-replication observations of [λ, N, Q₁..Qₙ] at each probe time,
/// stored in replication order.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub probes: Vec<f64>,
    pub phases: usize,
    pub reps: usize,
    data: Vec<f64>,
}

impl Panel {
    fn width(&self) -> usize {
        2 + self.phases
    }

    fn row(&self, rep: usize, probe: usize) -> &[f64] {
        let w = self.width();
        let start = (rep * self.probes.len() + probe) * w;
        &self.data[start..start + w]
    }

    pub fn value(&self, rep: usize, probe: usize, col: Column) -> f64 {
        let r = self.row(rep, probe);
        match col {
            Column::Intensity => r[0],
            Column::Count => r[1],
            Column::Queue => r[2..].iter().sum(),
            Column::Phase(i) => r[2 + i],
        }
    }

    fn series(&self, probe: usize, col: Column) -> Vec<f64> {
        (0..self.reps).map(|r| self.value(r, probe, col)).collect()
    }

    pub fn mean(&self, probe: usize, col: Column) -> EstimateReport {
        mean_report(&self.series(probe, col))
    }

    pub fn variance(&self, probe: usize, col: Column) -> EstimateReport {
        let x = self.series(probe, col);
        cov_report(&x, &x)
    }

    pub fn cov(&self, a: (usize, Column), b: (usize, Column)) -> EstimateReport {
        cov_report(&self.series(a.0, a.1), &self.series(b.0, b.1))
    }

    /// Mean of an arbitrary function of one replication's row at a probe.
    pub fn mean_of<F: Fn(&[f64]) -> f64>(&self, probe: usize, f: F) -> EstimateReport {
        let x: Vec<f64> = (0..self.reps).map(|r| f(self.row(r, probe))).collect();
        mean_report(&x)
    }

    pub fn probe_index(&self, t: f64) -> Option<usize> {
        self.probes.iter().position(|&p| p == t)
    }
}

fn mean_report(x: &[f64]) -> EstimateReport {
    let r = x.len() as f64;
    let m = x.iter().sum::<f64>() / r;
    let ss: f64 = x.iter().map(|v| (v - m).powi(2)).sum();
    EstimateReport { point: m, std_error: (ss / (r - 1.0) / r).sqrt(), replications: x.len() }
}

/// Unbiased sample covariance; its standard error treats the centred
/// products as i.i.d. observations.
fn cov_report(x: &[f64], y: &[f64]) -> EstimateReport {
    let r = x.len() as f64;
    let mx = x.iter().sum::<f64>() / r;
    let my = y.iter().sum::<f64>() / r;
    let prods: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let s = prods.iter().sum::<f64>() / (r - 1.0);
    let dev: f64 = prods.iter().map(|p| (p - s).powi(2)).sum();
    EstimateReport { point: s, std_error: (dev / (r * (r - 1.0))).sqrt(), replications: x.len() }
}

/// Runs `reps` replications and records [λ, N, Q₁..Qₙ] at each probe time.
pub fn simulate_panel(
    p: &HawkesParams,
    service: &ServiceSampler,
    probes: &[f64],
    reps: usize,
    seed: u64,
    cap: usize,
) -> Result<Panel> {
    p.validate()?;
    if reps < 2 {
        return Err(Error::InsufficientReps(reps));
    }
    if probes.is_empty() || probes.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(Error::InvalidParams("probe times must be finite, nonnegative and nonempty".into()));
    }
    let horizon = probes.iter().cloned().fold(0.0, f64::max);
    let n = service.phases();
    let w = 2 + n;
    let rows: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map_init(
            || (Vec::new(), Vec::new(), Vec::new()),
            |(times, lams, scratch), rep| {
                let mut arr = stream(seed, rep as u64, Role::Arrivals);
                hawkes_arrivals(p, horizon, &mut arr, cap, times, lams)?;
                let mut srv = stream(seed, rep as u64, Role::Service);
                let mut out = vec![0.0; probes.len() * w];
                for (j, &t) in probes.iter().enumerate() {
                    out[j * w] = intensity_at(p, times, t);
                    out[j * w + 1] = times.partition_point(|&s| s <= t) as f64;
                }
                for &s in times.iter() {
                    let d = service.draw(&mut srv, scratch);
                    for (j, &t) in probes.iter().enumerate() {
                        if s > t {
                            continue;
                        }
                        let elapsed = t - s;
                        let slot = if scratch.is_empty() {
                            (elapsed < d).then_some(0)
                        } else {
                            phase_at(scratch, elapsed)
                        };
                        if let Some(ph) = slot {
                            out[j * w + 2 + ph] += 1.0;
                        }
                    }
                }
                Ok(out)
            },
        )
        .collect::<Result<_>>()?;
    Ok(Panel { probes: probes.to_vec(), phases: n, reps, data: rows.concat() })
}

/// Quantities `estimate` can target.
#[derive(Debug, Clone, PartialEq)]
pub enum Statistic {
    MeanQ { t: f64 },
    VarQ { t: f64 },
    CovLQ { t: f64 },
    CovQQ { t: f64, i: usize, j: usize },
    Autocov { t: f64, tau: f64 },
    MeanN { t: f64 },
    VarN { t: f64 },
    AutocovN { t: f64, tau: f64 },
    /// E[exp(δ₀λ_t + Σ δᵢQ_{t,i})]
    Mgf { delta: Vec<f64>, t: f64 },
    /// Fraction of runs in which one quarter of [0, horizon] holds a strict
    /// majority of the arrivals (runs without arrivals count as failures).
    QuartileMajority,
}

impl Statistic {
    fn probes(&self) -> Vec<f64> {
        match self {
            Statistic::MeanQ { t }
            | Statistic::VarQ { t }
            | Statistic::CovLQ { t }
            | Statistic::CovQQ { t, .. }
            | Statistic::MeanN { t }
            | Statistic::VarN { t }
            | Statistic::Mgf { t, .. } => vec![*t],
            Statistic::Autocov { t, tau } | Statistic::AutocovN { t, tau } => vec![*t, (t - tau).max(0.0)],
            Statistic::QuartileMajority => Vec::new(),
        }
    }
}

/// Estimates one statistic with `reps` replications on [0, horizon].
pub fn estimate(
    p: &HawkesParams,
    service: &ServiceSampler,
    horizon: f64,
    reps: usize,
    statistic: &Statistic,
    seed: u64,
) -> Result<EstimateReport> {
    if reps < 2 {
        return Err(Error::InsufficientReps(reps));
    }
    if let Statistic::QuartileMajority = statistic {
        return quartile_majority(p, horizon, reps, seed);
    }
    let probes = statistic.probes();
    if probes.iter().any(|&t| t > horizon) {
        return Err(Error::InvalidParams(format!("statistic reads past the horizon {horizon}")));
    }
    let panel = simulate_panel(p, service, &probes, reps, seed, DEFAULT_EVENT_CAP)?;
    Ok(match statistic {
        Statistic::MeanQ { .. } => panel.mean(0, Column::Queue),
        Statistic::VarQ { .. } => panel.variance(0, Column::Queue),
        Statistic::CovLQ { .. } => panel.cov((0, Column::Intensity), (0, Column::Queue)),
        Statistic::CovQQ { i, j, .. } => {
            if *i >= panel.phases || *j >= panel.phases {
                return Err(Error::DimensionMismatch { expected: panel.phases, got: (*i).max(*j) + 1 });
            }
            panel.cov((0, Column::Phase(*i)), (0, Column::Phase(*j)))
        }
        Statistic::Autocov { t, tau } => {
            if tau > t {
                zero(reps)
            } else {
                panel.cov((0, Column::Queue), (1, Column::Queue))
            }
        }
        Statistic::MeanN { .. } => panel.mean(0, Column::Count),
        Statistic::VarN { .. } => panel.variance(0, Column::Count),
        Statistic::AutocovN { t, tau } => {
            if tau > t {
                zero(reps)
            } else {
                panel.cov((0, Column::Count), (1, Column::Count))
            }
        }
        Statistic::Mgf { delta, .. } => {
            if delta.len() != panel.phases + 1 {
                return Err(Error::DimensionMismatch { expected: panel.phases + 1, got: delta.len() });
            }
            panel.mean_of(0, |row| {
                let mut e = delta[0] * row[0];
                for i in 0..panel.phases {
                    e += delta[1 + i] * row[2 + i];
                }
                e.exp()
            })
        }
        Statistic::QuartileMajority => unreachable!(),
    })
}

fn zero(reps: usize) -> EstimateReport {
    EstimateReport { point: 0.0, std_error: 0.0, replications: reps }
}

fn quartile_majority(p: &HawkesParams, horizon: f64, reps: usize, seed: u64) -> Result<EstimateReport> {
    p.validate()?;
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidParams(format!("horizon must be positive, got {horizon}")));
    }
    let hits: Vec<f64> = (0..reps)
        .into_par_iter()
        .map_init(
            || (Vec::new(), Vec::new()),
            |(times, lams), rep| {
                let mut rng = stream(seed, rep as u64, Role::Arrivals);
                hawkes_arrivals(p, horizon, &mut rng, DEFAULT_EVENT_CAP, times, lams)?;
                let mut counts = [0usize; 4];
                for &s in times.iter() {
                    counts[((4.0 * s / horizon) as usize).min(3)] += 1;
                }
                let total = times.len();
                let hit = total > 0 && counts.iter().any(|&c| 2 * c > total);
                Ok(if hit { 1.0 } else { 0.0 })
            },
        )
        .collect::<Result<_>>()?;
    Ok(mean_report(&hits))
}
