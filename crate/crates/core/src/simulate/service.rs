//! Service-time samplers for the infinite-server queue.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, LogNormal};

use crate::error::{Error, Result};
use crate::phase_type::PhaseTypeDist;

/// User-supplied service distribution.
pub type ServiceHook = Arc<dyn Fn(&mut dyn RngCore) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum ServiceSampler {
    PhaseType(PhaseTypeDist),
    Deterministic(f64),
    LogNormal { mean: f64, variance: f64, dist: LogNormal<f64> },
    Custom(ServiceHook),
}

impl fmt::Debug for ServiceSampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ServiceSampler::PhaseType(d) => f.debug_tuple("PhaseType").field(d).finish(),
            ServiceSampler::Deterministic(d) => f.debug_tuple("Deterministic").field(d).finish(),
            ServiceSampler::LogNormal { mean, variance, .. } => {
                f.debug_struct("LogNormal").field("mean", mean).field("variance", variance).finish()
            }
            ServiceSampler::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl ServiceSampler {
    pub fn deterministic(length: f64) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidParams(format!("service length must be positive, got {length}")));
        }
        Ok(ServiceSampler::Deterministic(length))
    }

    /// Log-normal with the given mean and variance of the service time.
    pub fn log_normal(mean: f64, variance: f64) -> Result<Self> {
        if !(mean > 0.0) || !(variance >= 0.0) || !mean.is_finite() || !variance.is_finite() {
            return Err(Error::InvalidParams("log-normal needs mean > 0 and variance >= 0".into()));
        }
        let s2 = (variance / (mean * mean)).ln_1p();
        let dist = LogNormal::new(mean.ln() - s2 / 2.0, s2.sqrt())
            .map_err(|e| Error::InvalidParams(format!("log-normal: {e}")))?;
        Ok(ServiceSampler::LogNormal { mean, variance, dist })
    }

    pub fn custom<F>(f: F) -> Self
    where
        F: Fn(&mut dyn RngCore) -> f64 + Send + Sync + 'static,
    {
        ServiceSampler::Custom(Arc::new(f))
    }

    /// Number of tracked phases: the PH phases, else 1 (total occupancy).
    pub fn phases(&self) -> usize {
        match self {
            ServiceSampler::PhaseType(d) => d.phases(),
            _ => 1,
        }
    }

    /// Draws one service time. For phase-type service the visited phases are
    /// written to `path` (cleared first); otherwise `path` is left empty.
    pub fn draw<R: Rng>(&self, rng: &mut R, path: &mut Vec<(usize, f64)>) -> f64 {
        path.clear();
        match self {
            ServiceSampler::PhaseType(d) => d.sample_into(rng, path),
            ServiceSampler::Deterministic(d) => *d,
            ServiceSampler::LogNormal { dist, .. } => dist.sample(rng),
            ServiceSampler::Custom(f) => f(rng),
        }
    }
}

/// Phase occupied `elapsed` time units into a service, if still in service.
pub fn phase_at(path: &[(usize, f64)], elapsed: f64) -> Option<usize> {
    let mut acc = 0.0;
    for &(phase, hold) in path {
        acc += hold;
        if elapsed < acc {
            return Some(phase);
        }
    }
    None
}
