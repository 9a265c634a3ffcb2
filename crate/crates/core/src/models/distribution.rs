use rand_chacha::rand_core::RngCore;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};
use crate::rng::unit_open;

/// Tolerance on the total mass of a tabulated density.
pub const TABLE_MASS_TOLERANCE: f64 = 1e-6;

/// A univariate law with closed-form CDF and quantile function.
///
/// Used for i.i.d. marginals, Lindley innovations and Metropolis targets.
/// Sampling is by inversion and consumes exactly one stream value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Distribution {
    Constant { value: f64 },
    Uniform { low: f64, high: f64 },
    Exponential { rate: f64 },
    /// `f(x) = alpha * x_min^alpha * x^(-alpha-1)` on `[x_min, inf)`.
    Pareto { alpha: f64, x_min: f64 },
    Gaussian { mu: f64, sigma: f64 },
    /// Standard Student t with `nu` degrees of freedom.
    StudentT { nu: f64 },
    /// Piecewise-constant density: `points[i][1]` holds on `[points[i][0], points[i+1][0])`.
    /// The final point closes the support and carries density 0.
    CustomTable { points: Vec<[f64; 2]> },
}

impl Distribution {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Model(msg));
        match *self {
            Distribution::Constant { value } if !value.is_finite() => {
                bad(format!("constant value {value} is not finite"))
            }
            Distribution::Uniform { low, high } if !(low.is_finite() && high.is_finite() && low < high) => {
                bad(format!("uniform bounds must satisfy low < high, got [{low}, {high}]"))
            }
            Distribution::Exponential { rate } if !(rate > 0.0 && rate.is_finite()) => {
                bad(format!("exponential rate must be positive, got {rate}"))
            }
            Distribution::Pareto { alpha, x_min }
                if !(alpha > 0.0 && alpha.is_finite() && x_min > 0.0 && x_min.is_finite()) =>
            {
                bad(format!("pareto needs alpha > 0 and x_min > 0, got alpha={alpha}, x_min={x_min}"))
            }
            Distribution::Gaussian { mu, sigma } if !(mu.is_finite() && sigma > 0.0 && sigma.is_finite()) => {
                bad(format!("gaussian needs finite mu and sigma > 0, got mu={mu}, sigma={sigma}"))
            }
            Distribution::StudentT { nu } if !(nu > 0.0 && nu.is_finite()) => {
                bad(format!("student t needs nu > 0, got {nu}"))
            }
            Distribution::CustomTable { ref points } => validate_table(points),
            _ => Ok(()),
        }
    }

    pub fn has_density(&self) -> bool {
        !matches!(self, Distribution::Constant { .. })
    }

    /// Pointwise density; `None` for the point mass.
    pub fn density(&self, x: f64) -> Option<f64> {
        let d = match *self {
            Distribution::Constant { .. } => return None,
            Distribution::Uniform { low, high } => {
                if x >= low && x <= high {
                    1.0 / (high - low)
                } else {
                    0.0
                }
            }
            Distribution::Exponential { rate } => {
                if x >= 0.0 {
                    rate * (-rate * x).exp()
                } else {
                    0.0
                }
            }
            Distribution::Pareto { alpha, x_min } => {
                if x >= x_min {
                    alpha / x_min * (x_min / x).powf(alpha + 1.0)
                } else {
                    0.0
                }
            }
            Distribution::Gaussian { mu, sigma } => normal(mu, sigma).pdf(x),
            Distribution::StudentT { nu } => student(nu).pdf(x),
            Distribution::CustomTable { ref points } => {
                let idx = points.partition_point(|p| p[0] <= x);
                if idx == 0 || idx == points.len() {
                    0.0
                } else {
                    points[idx - 1][1]
                }
            }
        };
        Some(d)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Distribution::Constant { value } => {
                if x >= value {
                    1.0
                } else {
                    0.0
                }
            }
            Distribution::Uniform { low, high } => ((x - low) / (high - low)).clamp(0.0, 1.0),
            Distribution::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Distribution::Pareto { alpha, x_min } => {
                if x <= x_min {
                    0.0
                } else {
                    1.0 - (x_min / x).powf(alpha)
                }
            }
            Distribution::Gaussian { mu, sigma } => normal(mu, sigma).cdf(x),
            Distribution::StudentT { nu } => student(nu).cdf(x),
            Distribution::CustomTable { ref points } => {
                let mut acc = 0.0;
                for w in points.windows(2) {
                    let (a, b, d) = (w[0][0], w[1][0], w[0][1]);
                    if x >= b {
                        acc += d * (b - a);
                    } else {
                        if x > a {
                            acc += d * (x - a);
                        }
                        break;
                    }
                }
                acc.min(1.0)
            }
        }
    }

    /// Generalized inverse `inf { x : F(x) >= p }` for `p` in `(0, 1)`.
    pub fn quantile(&self, p: f64) -> f64 {
        match *self {
            Distribution::Constant { value } => value,
            Distribution::Uniform { low, high } => low + p * (high - low),
            Distribution::Exponential { rate } => -(-p).ln_1p() / rate,
            Distribution::Pareto { alpha, x_min } => x_min * (1.0 - p).powf(-1.0 / alpha),
            Distribution::Gaussian { mu, sigma } => normal(mu, sigma).inverse_cdf(p),
            Distribution::StudentT { nu } => student(nu).inverse_cdf(p),
            Distribution::CustomTable { ref points } => {
                let mut acc = 0.0;
                for w in points.windows(2) {
                    let (a, b, d) = (w[0][0], w[1][0], w[0][1]);
                    let mass = d * (b - a);
                    if d > 0.0 && acc + mass >= p {
                        return (a + (p - acc) / d).min(b);
                    }
                    acc += mass;
                }
                points.last().map_or(f64::NAN, |p| p[0])
            }
        }
    }

    /// `sup { x : F(x) < 1 }`.
    pub fn upper_end(&self) -> f64 {
        match *self {
            Distribution::Constant { value } => value,
            Distribution::Uniform { high, .. } => high,
            Distribution::CustomTable { ref points } => points
                .windows(2)
                .filter(|w| w[0][1] > 0.0)
                .map(|w| w[1][0])
                .next_back()
                .unwrap_or(f64::NAN),
            _ => f64::INFINITY,
        }
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(unit_open(rng))
    }
}

fn validate_table(points: &[[f64; 2]]) -> Result<()> {
    if points.len() < 2 {
        return Err(Error::Model("custom table needs at least two grid points".into()));
    }
    if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite() || p[1] < 0.0) {
        return Err(Error::Model("custom table entries must be finite with non-negative density".into()));
    }
    if points.windows(2).any(|w| w[0][0] >= w[1][0]) {
        return Err(Error::Model("custom table grid must be strictly increasing".into()));
    }
    if points[points.len() - 1][1] != 0.0 {
        return Err(Error::Model("custom table must close its support with density 0 at the last point".into()));
    }
    // Midpoint rule; exact for a piecewise-constant density.
    let mass: f64 = points.windows(2).map(|w| w[0][1] * (w[1][0] - w[0][0])).sum();
    if (mass - 1.0).abs() > TABLE_MASS_TOLERANCE {
        return Err(Error::Model(format!("custom table integrates to {mass}, not 1")));
    }
    Ok(())
}

fn normal(mu: f64, sigma: f64) -> Normal {
    Normal::new(mu, sigma).expect("validated gaussian parameters")
}

fn student(nu: f64) -> StudentsT {
    StudentsT::new(0.0, 1.0, nu).expect("validated student t parameters")
}
