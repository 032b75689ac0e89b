//! JSON run configuration. Rates may be written as numbers or as decimal
//! strings ("0.75"); they are echoed back as shortest round-trip strings.

use std::fmt;
use std::path::Path;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::hawkes::HawkesParams;
use crate::phase_type::{PhaseTypeDist, PhaseTypeSpec};
use crate::queue_moments::QueueModel;
use crate::simulate::ServiceSampler;

/// A real number that serializes as an exact decimal string.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Decimal(pub f64);

impl From<f64> for Decimal {
    fn from(v: f64) -> Self {
        Decimal(v)
    }
}

impl Serialize for Decimal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        // Display for f64 is the shortest string that parses back to the same value
        s.serialize_str(&self.0.to_string())
    }
}

struct DecimalVisitor;

impl Visitor<'_> for DecimalVisitor {
    type Value = Decimal;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a number or a decimal string")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Decimal, E> {
        Ok(Decimal(v))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Decimal, E> {
        Ok(Decimal(v as f64))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Decimal, E> {
        Ok(Decimal(v as f64))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Decimal, E> {
        let x: f64 = v.trim().parse().map_err(|_| E::custom(format!("not a decimal: {v:?}")))?;
        if !x.is_finite() {
            return Err(E::custom(format!("not finite: {v:?}")));
        }
        Ok(Decimal(x))
    }
}

impl<'de> Deserialize<'de> for Decimal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        d.deserialize_any(DecimalVisitor)
    }
}

fn vals(v: &[Decimal]) -> Vec<f64> {
    v.iter().map(|d| d.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrivalSpec {
    pub baseline: Decimal,
    pub jump: Decimal,
    pub decay: Decimal,
    /// λ₀, defaults to the baseline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_intensity: Option<Decimal>,
}

impl ArrivalSpec {
    pub fn build(&self) -> Result<HawkesParams> {
        let l0 = self.initial_intensity.unwrap_or(self.baseline).0;
        HawkesParams::new(self.baseline.0, self.jump.0, self.decay.0, l0)
    }

    pub fn from_params(p: &HawkesParams) -> Self {
        Self {
            baseline: p.baseline.into(),
            jump: p.jump.into(),
            decay: p.decay.into(),
            initial_intensity: Some(p.initial_intensity.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ServiceSpec {
    Exponential {
        rate: Decimal,
    },
    Erlang {
        phases: usize,
        rate: Decimal,
    },
    HyperExponential {
        theta: Vec<Decimal>,
        rates: Vec<Decimal>,
    },
    PhaseType {
        #[serde(rename = "S")]
        s: Vec<Vec<Decimal>>,
        theta: Vec<Decimal>,
    },
    /// The five-phase Coxian demo distribution.
    Coxian,
    Deterministic {
        length: Decimal,
    },
    LogNormal {
        mean: Decimal,
        variance: Decimal,
    },
}

impl ServiceSpec {
    /// The phase-type form, when there is one.
    pub fn phase_type(&self) -> Result<Option<PhaseTypeDist>> {
        Ok(Some(match self {
            ServiceSpec::Exponential { rate } => PhaseTypeDist::exponential(rate.0)?,
            ServiceSpec::Erlang { phases, rate } => PhaseTypeDist::erlang(*phases, rate.0)?,
            ServiceSpec::HyperExponential { theta, rates } => PhaseTypeDist::hyperexp(&vals(theta), &vals(rates))?,
            ServiceSpec::PhaseType { s, theta } => PhaseTypeSpec { s: s.clone(), theta: theta.clone() }.build()?,
            ServiceSpec::Coxian => crate::phase_type::coxian_example(),
            ServiceSpec::Deterministic { .. } | ServiceSpec::LogNormal { .. } => return Ok(None),
        }))
    }

    pub fn sampler(&self) -> Result<ServiceSampler> {
        match self {
            ServiceSpec::Deterministic { length } => ServiceSampler::deterministic(length.0),
            ServiceSpec::LogNormal { mean, variance } => ServiceSampler::log_normal(mean.0, variance.0),
            other => Ok(ServiceSampler::PhaseType(other.phase_type()?.expect("phase-type variant"))),
        }
    }
}

/// Uniform grid `start, start + step, ...` with `count` points, or explicit times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Explicit(Vec<Decimal>),
    Uniform { start: Decimal, stop: Decimal, count: usize },
}

impl GridSpec {
    pub fn points(&self) -> Result<Vec<f64>> {
        let pts = match self {
            GridSpec::Explicit(v) => vals(v),
            GridSpec::Uniform { start, stop, count } => {
                if *count < 2 {
                    return Err(Error::Config("uniform grid needs count >= 2".into()));
                }
                let h = (stop.0 - start.0) / (*count - 1) as f64;
                (0..*count).map(|i| start.0 + h * i as f64).collect()
            }
        };
        if pts.is_empty() {
            return Err(Error::Config("time grid is empty".into()));
        }
        if pts.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
            return Err(Error::Config("grid times must be finite and nonnegative".into()));
        }
        if pts.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Config("grid times must be sorted".into()));
        }
        Ok(pts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSpec {
    pub mu_inside: Decimal,
    pub revenue_outside: Decimal,
    pub revenue_inside: Decimal,
    pub rate_penalty: Decimal,
    pub target_rate: Decimal,
    pub speed_penalty: Decimal,
    pub horizon: Decimal,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClickSpec {
    /// Exponential dwell rate μ.
    pub dwell_rate: Decimal,
    /// Revenue per user per unit time.
    pub revenue: Decimal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub arrivals: ArrivalSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub service: Option<ServiceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lags: Option<Vec<Decimal>>,
    /// Each entry is (δ₀, δ₁, …, δₙ).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<Vec<Decimal>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<Decimal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_cap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<ControlSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub click: Option<ClickSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl RunConfig {
    pub fn minimal(arrivals: &HawkesParams) -> Self {
        Self {
            arrivals: ArrivalSpec::from_params(arrivals),
            service: None,
            times: None,
            lags: None,
            deltas: None,
            reps: None,
            seed: None,
            horizon: None,
            event_cap: None,
            control: None,
            click: None,
            output: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("line {} column {}: {e}", e.line(), e.column())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks everything that does not depend on the command.
    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, e: Error| Error::Config(format!("{name}: {e}"));
        self.arrivals.build().map_err(|e| field("arrivals", e))?;
        if let Some(s) = &self.service {
            s.sampler().map_err(|e| field("service", e))?;
        }
        if let Some(g) = &self.times {
            g.points().map_err(|e| field("times", e))?;
        }
        if let Some(l) = &self.lags {
            if l.iter().any(|x| !(x.0 >= 0.0)) {
                return Err(Error::Config("lags: must be nonnegative".into()));
            }
        }
        if let Some(h) = self.horizon {
            if !(h.0 > 0.0) {
                return Err(Error::Config("horizon: must be positive".into()));
            }
        }
        if let Some(c) = &self.click {
            if !(c.dwell_rate.0 > 0.0) || c.revenue.0 < 0.0 {
                return Err(Error::Config("click: dwell_rate must be positive and revenue nonnegative".into()));
            }
        }
        if let Some(c) = &self.control {
            let nonneg = [c.revenue_outside, c.revenue_inside, c.rate_penalty, c.target_rate, c.speed_penalty];
            if nonneg.iter().any(|v| v.0 < 0.0) || !(c.mu_inside.0 > 0.0) || !(c.horizon.0 > 0.0) {
                return Err(Error::Config("control: rates and horizon must be positive, weights nonnegative".into()));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> Result<HawkesParams> {
        self.arrivals.build()
    }

    pub fn service(&self) -> Result<&ServiceSpec> {
        self.service.as_ref().ok_or_else(|| Error::Config("service: missing".into()))
    }

    pub fn queue_model(&self) -> Result<QueueModel> {
        let dist = self
            .service()?
            .phase_type()?
            .ok_or_else(|| Error::Config("service: a phase-type distribution is required here".into()))?;
        Ok(QueueModel::new(self.params()?, dist))
    }

    pub fn times(&self) -> Result<Vec<f64>> {
        self.times.as_ref().ok_or_else(|| Error::Config("times: missing".into()))?.points()
    }

    pub fn lags(&self) -> Result<Vec<f64>> {
        let l = self.lags.as_ref().ok_or_else(|| Error::Config("lags: missing".into()))?;
        if l.is_empty() {
            return Err(Error::Config("lags: empty".into()));
        }
        Ok(vals(l))
    }
}
