//! Ogata thinning for the exponential-kernel Hawkes process.

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::hawkes::HawkesParams;

pub const DEFAULT_EVENT_CAP: usize = 10_000_000;

/// Arrival times on [0, horizon] and the intensity just before each arrival.
///
/// Between events λ relaxes monotonically toward λ*, so max(λ(t), λ*)
/// dominates the intensity until the next event.
pub fn hawkes_arrivals<R: Rng + ?Sized>(
    p: &HawkesParams,
    horizon: f64,
    rng: &mut R,
    cap: usize,
    times: &mut Vec<f64>,
    intensities: &mut Vec<f64>,
) -> Result<()> {
    times.clear();
    intensities.clear();
    let (base, a, b) = (p.baseline, p.jump, p.decay);
    let mut t = 0.0;
    let mut lam = p.initial_intensity;
    loop {
        let bound = lam.max(base);
        if bound <= 0.0 {
            return Ok(());
        }
        let w: f64 = rng.sample::<f64, _>(Exp1) / bound;
        t += w;
        if t > horizon {
            return Ok(());
        }
        lam = base + (lam - base) * (-b * w).exp();
        let u: f64 = rng.random();
        if u * bound <= lam {
            if times.len() >= cap {
                return Err(Error::EventCapExceeded { cap });
            }
            times.push(t);
            intensities.push(lam);
            lam += a;
        }
    }
}

/// λ(t) given the arrivals before t (right-continuous at arrivals).
pub fn intensity_at(p: &HawkesParams, arrivals: &[f64], t: f64) -> f64 {
    let mut lam = p.baseline + (p.initial_intensity - p.baseline) * (-p.decay * t).exp();
    for &s in arrivals.iter().take_while(|&&s| s <= t) {
        lam += p.jump * (-p.decay * (t - s)).exp();
    }
    lam
}
