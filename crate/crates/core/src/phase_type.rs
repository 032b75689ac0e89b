//! Phase-type service distributions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix_kit::{expm, spectral_abscissa, Matrix, Vector, MAX_DIM};

/// Which constructor produced the distribution; specialised closed forms key
/// off this.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PhaseKind {
    General,
    Erlang { phases: usize, rate: f64 },
    HyperExponential { rates: Vec<f64>, distinct: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTypeDist {
    s: Matrix,
    theta: Vector,
    exit: Vector,
    kind: PhaseKind,
    // cumulative routing table per phase: (destination, cumulative prob); None = absorb
    routes: Vec<Vec<(Option<usize>, f64)>>,
    theta_cdf: Vec<f64>,
}

const PROB_TOL: f64 = 1e-9;

impl PhaseTypeDist {
    /// Validates S and θ.
    pub fn new(s: Matrix, theta: Vector) -> Result<Self> {
        Self::with_kind(s, theta, PhaseKind::General)
    }

    fn with_kind(s: Matrix, theta: Vector, kind: PhaseKind) -> Result<Self> {
        let n = s.nrows();
        if s.ncols() != n {
            return Err(Error::InvalidSubGenerator(format!("{}x{} is not square", n, s.ncols())));
        }
        if n == 0 || n > MAX_DIM {
            return Err(Error::InvalidSubGenerator(format!("phase count {n} outside 1..={MAX_DIM}")));
        }
        if theta.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: theta.len() });
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSubGenerator("non-finite entry".into()));
        }
        let mut strict = false;
        for i in 0..n {
            if s[(i, i)] >= 0.0 {
                return Err(Error::InvalidSubGenerator(format!("diagonal entry {i} is not negative")));
            }
            let mut row = 0.0;
            for j in 0..n {
                if i != j && s[(i, j)] < 0.0 {
                    return Err(Error::InvalidSubGenerator(format!("negative off-diagonal entry ({i},{j})")));
                }
                row += s[(i, j)];
            }
            if row > 1e-12 * s[(i, i)].abs() {
                return Err(Error::InvalidSubGenerator(format!("row {i} sums to {row} > 0")));
            }
            if row < -1e-12 * s[(i, i)].abs() {
                strict = true;
            }
        }
        if !strict {
            return Err(Error::InvalidSubGenerator("no exit from any phase".into()));
        }
        let abscissa = spectral_abscissa(&s);
        if abscissa >= 0.0 {
            return Err(Error::InvalidSubGenerator(format!("not Hurwitz (abscissa {abscissa})")));
        }
        if theta.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInitialDist("entries must be finite and nonnegative".into()));
        }
        let total: f64 = theta.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidInitialDist(format!("sums to {total}")));
        }
        let exit = -(&s * Vector::from_element(n, 1.0));
        let exit = exit.map(|v| v.max(0.0));
        let routes = (0..n)
            .map(|i| {
                let rate = -s[(i, i)];
                let mut acc = 0.0;
                let mut table = Vec::new();
                for j in 0..n {
                    if j != i && s[(i, j)] > 0.0 {
                        acc += s[(i, j)] / rate;
                        table.push((Some(j), acc));
                    }
                }
                table.push((None, 1.0));
                table
            })
            .collect();
        let mut acc = 0.0;
        let theta_cdf = theta.iter().map(|v| {
            acc += v;
            acc
        });
        let theta_cdf = theta_cdf.collect();
        Ok(Self { s, theta, exit, kind, routes, theta_cdf })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::hyperexp(&[1.0], &[rate]).map(|mut d| {
            d.kind = PhaseKind::Erlang { phases: 1, rate };
            d
        })
    }

    /// n phases, each at rate nμ, so the mean is 1/μ.
    pub fn erlang(phases: usize, rate: f64) -> Result<Self> {
        if phases == 0 || !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::InvalidParams("Erlang needs n >= 1 and a positive rate".into()));
        }
        let r = phases as f64 * rate;
        let s = Matrix::from_fn(phases, phases, |i, j| {
            if i == j {
                -r
            } else if j == i + 1 {
                r
            } else {
                0.0
            }
        });
        let mut theta = Vector::zeros(phases);
        theta[0] = 1.0;
        Self::with_kind(s, theta, PhaseKind::Erlang { phases, rate })
    }

    /// Mixture of exponentials. Repeated rates are allowed but flagged through
    /// [`PhaseTypeDist::has_distinct_rates`].
    pub fn hyperexp(theta: &[f64], rates: &[f64]) -> Result<Self> {
        if theta.len() != rates.len() {
            return Err(Error::DimensionMismatch { expected: rates.len(), got: theta.len() });
        }
        if rates.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(Error::InvalidSubGenerator("rates must be positive".into()));
        }
        let mut distinct = true;
        for i in 0..rates.len() {
            for j in 0..i {
                if rates[i] == rates[j] {
                    distinct = false;
                }
            }
        }
        let s = Matrix::from_diagonal(&Vector::from_iterator(rates.len(), rates.iter().map(|r| -r)));
        let kind = PhaseKind::HyperExponential { rates: rates.to_vec(), distinct };
        Self::with_kind(s, Vector::from_column_slice(theta), kind)
    }

    pub fn phases(&self) -> usize {
        self.s.nrows()
    }

    pub fn sub_generator(&self) -> &Matrix {
        &self.s
    }

    pub fn initial_dist(&self) -> &Vector {
        &self.theta
    }

    /// s = −S v
    pub fn exit_rates(&self) -> &Vector {
        &self.exit
    }

    pub fn kind(&self) -> &PhaseKind {
        &self.kind
    }

    /// False for a hyper-exponential with a repeated rate.
    pub fn has_distinct_rates(&self) -> bool {
        !matches!(self.kind, PhaseKind::HyperExponential { distinct: false, .. })
    }

    /// Full generator on {absorbing, 1..n} with the absorbing state first.
    pub fn generator(&self) -> Matrix {
        let n = self.phases();
        let mut g = Matrix::zeros(n + 1, n + 1);
        for i in 0..n {
            g[(i + 1, 0)] = self.exit[i];
            for j in 0..n {
                g[(i + 1, j + 1)] = self.s[(i, j)];
            }
        }
        g
    }

    /// −θᵀ S⁻¹ v
    pub fn mean_service_time(&self) -> f64 {
        let n = self.phases();
        let x = self
            .s
            .clone()
            .lu()
            .solve(&Vector::from_element(n, 1.0))
            .expect("Hurwitz sub-generator is invertible");
        -self.theta.dot(&x)
    }

    /// P(service ≤ t) = 1 − θᵀ e^{St} v
    pub fn cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let n = self.phases();
        let e = expm(&(&self.s * t)).expect("finite sub-generator");
        1.0 - (self.theta.transpose() * e * Vector::from_element(n, 1.0))[0]
    }

    /// Draws one service, returning the total duration. The visited phases and
    /// holding times are appended to `path`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, path: &mut Vec<(usize, f64)>) -> f64 {
        let u: f64 = rng.random();
        let mut phase = self.theta_cdf.iter().position(|&c| u < c).unwrap_or_else(|| {
            // guard against roundoff in the last cumulative value
            self.theta.iter().rposition(|&v| v > 0.0).unwrap_or(0)
        });
        let mut total = 0.0;
        loop {
            let rate = -self.s[(phase, phase)];
            let e: f64 = rng.sample(rand_distr::Exp1);
            let hold = e / rate;
            total += hold;
            path.push((phase, hold));
            let u: f64 = rng.random();
            let table = &self.routes[phase];
            let next = table.iter().find(|(_, c)| u < *c).map_or(None, |(d, _)| *d);
            match next {
                Some(j) => phase = j,
                None => return total,
            }
        }
    }

    /// Draws (duration, phase path).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, Vec<(usize, f64)>) {
        let mut path = Vec::new();
        let d = self.sample_into(rng, &mut path);
        (d, path)
    }
}

/// JSON form: {"S": [[...]], "theta": [...]} with numbers or decimal strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTypeSpec {
    #[serde(rename = "S")]
    pub s: Vec<Vec<crate::config::Decimal>>,
    pub theta: Vec<crate::config::Decimal>,
}

impl PhaseTypeSpec {
    pub fn build(&self) -> Result<PhaseTypeDist> {
        let rows: Vec<Vec<f64>> = self.s.iter().map(|r| r.iter().map(|d| d.0).collect()).collect();
        let s = crate::matrix_kit::from_rows(&rows)
            .map_err(|e| Error::InvalidSubGenerator(e.to_string()))?;
        PhaseTypeDist::new(s, Vector::from_iterator(self.theta.len(), self.theta.iter().map(|d| d.0)))
    }

    pub fn from_dist(d: &PhaseTypeDist) -> Self {
        let s = d.sub_generator();
        Self {
            s: (0..s.nrows())
                .map(|i| (0..s.ncols()).map(|j| crate::config::Decimal(s[(i, j)])).collect())
                .collect(),
            theta: d.initial_dist().iter().map(|&v| crate::config::Decimal(v)).collect(),
        }
    }
}

/// The five-phase Coxian example sub-generator.
pub fn coxian_example() -> PhaseTypeDist {
    let s = Matrix::from_row_slice(
        5,
        5,
        &[
            -4.0, 3.0, 0.0, 0.0, 0.0, //
            0.0, -2.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, -3.0, 2.0, 0.0, //
            0.0, 0.0, 0.0, -5.0, 4.0, //
            0.0, 0.0, 0.0, 0.0, -1.0,
        ],
    );
    let mut theta = Vector::zeros(5);
    theta[0] = 1.0;
    PhaseTypeDist::new(s, theta).expect("valid Coxian example")
}
