//! Paired simulation of the effect of one extra arrival at time 0.
//!
//! The clicked process is the baseline process plus the cluster spawned by
//! the injected event. The baseline stream is shared (common random
//! numbers), so the gap equals the cluster's contribution exactly.

use rand::Rng;
use rand_distr::{Distribution, Exp, Exp1, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use super::estimate::EstimateReport;
use super::rng::{stream, Role};
use super::thinning::{hawkes_arrivals, DEFAULT_EVENT_CAP};
use crate::error::{Error, Result};
use crate::hawkes::HawkesParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClickReport {
    /// E[N̂_T − N_T]
    pub count_gap: EstimateReport,
    /// E[∫₀ᵀ (Q̂_t − Q_t) dt] for exponential dwell times
    pub dwell_gap: EstimateReport,
    /// E[N_T] of the unclicked process
    pub baseline_count: EstimateReport,
}

fn report(x: &[f64]) -> EstimateReport {
    let r = x.len() as f64;
    let m = x.iter().sum::<f64>() / r;
    let ss: f64 = x.iter().map(|v| (v - m).powi(2)).sum();
    EstimateReport { point: m, std_error: (ss / (r - 1.0) / r).sqrt(), replications: x.len() }
}

/// Simulates `reps` paired runs on [0, horizon] with exponential dwell rate `dwell_rate`.
pub fn simulate_click(p: &HawkesParams, dwell_rate: f64, horizon: f64, reps: usize, seed: u64) -> Result<ClickReport> {
    p.validate()?;
    if reps < 2 {
        return Err(Error::InsufficientReps(reps));
    }
    if !(dwell_rate > 0.0) || !(horizon > 0.0) {
        return Err(Error::InvalidParams("dwell rate and horizon must be positive".into()));
    }
    let mean_children = p.jump / p.decay;
    let children = if mean_children > 0.0 {
        Some(Poisson::new(mean_children).map_err(|e| Error::InvalidParams(e.to_string()))?)
    } else {
        None
    };
    let dwell = Exp::new(dwell_rate).map_err(|e| Error::InvalidParams(e.to_string()))?;
    let rows: Vec<[f64; 3]> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut base = stream(seed, rep as u64, Role::Arrivals);
            let (mut times, mut lams) = (Vec::new(), Vec::new());
            hawkes_arrivals(p, horizon, &mut base, DEFAULT_EVENT_CAP, &mut times, &mut lams)?;
            let mut rng = stream(seed, rep as u64, Role::Offspring);
            let mut pending = vec![0.0f64];
            let (mut count, mut dwell_sum) = (0usize, 0.0);
            while let Some(s) = pending.pop() {
                count += 1;
                if count > DEFAULT_EVENT_CAP {
                    return Err(Error::EventCapExceeded { cap: DEFAULT_EVENT_CAP });
                }
                let stay: f64 = dwell.sample(&mut rng);
                dwell_sum += stay.min(horizon - s);
                if let Some(c) = &children {
                    let k = c.sample(&mut rng) as usize;
                    for _ in 0..k {
                        let child = s + rng.sample::<f64, _>(Exp1) / p.decay;
                        if child <= horizon {
                            pending.push(child);
                        }
                    }
                }
            }
            Ok([count as f64, dwell_sum, times.len() as f64])
        })
        .collect::<Result<_>>()?;
    let col = |i: usize| rows.iter().map(|r| r[i]).collect::<Vec<_>>();
    Ok(ClickReport { count_gap: report(&col(0)), dwell_gap: report(&col(1)), baseline_count: report(&col(2)) })
}
