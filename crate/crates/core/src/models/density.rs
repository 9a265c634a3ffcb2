use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc_inv;

use super::Distribution;
use crate::error::{Error, Result};

/// Target density of a random walk Metropolis chain.
///
/// Wraps a [`Distribution`] that has a density. The target is also the
/// stationary law of the chain, so its quantile function doubles as the exact
/// stationary sampler.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Distribution", into = "Distribution")]
pub struct TargetDensity(Distribution);

impl TryFrom<Distribution> for TargetDensity {
    type Error = Error;

    fn try_from(dist: Distribution) -> Result<Self> {
        dist.validate()?;
        match dist {
            Distribution::Constant { .. } => {
                Err(Error::Model("a point mass has no density and cannot be a Metropolis target".into()))
            }
            dist => Ok(TargetDensity(dist)),
        }
    }
}

impl From<TargetDensity> for Distribution {
    fn from(t: TargetDensity) -> Self {
        t.0
    }
}

impl TargetDensity {
    pub fn new(dist: Distribution) -> Result<Self> {
        Self::try_from(dist)
    }

    pub fn pareto(alpha: f64, x_min: f64) -> Result<Self> {
        Self::new(Distribution::Pareto { alpha, x_min })
    }

    pub fn distribution(&self) -> &Distribution {
        &self.0
    }

    /// `f(x)`, rejecting NaN or negative evaluations.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let f = self.0.density(x).unwrap_or(f64::NAN);
        if f.is_nan() || f < 0.0 {
            return Err(Error::Model(format!("target density returned {f} at x={x}")));
        }
        Ok(f)
    }
}

/// Symmetric proposal law for the random walk increments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProposalDensity {
    Gaussian { sigma: f64 },
    Uniform { half_width: f64 },
    Cauchy { scale: f64 },
}

impl ProposalDensity {
    pub fn validate(&self) -> Result<()> {
        let (name, v) = match *self {
            ProposalDensity::Gaussian { sigma } => ("sigma", sigma),
            ProposalDensity::Uniform { half_width } => ("half_width", half_width),
            ProposalDensity::Cauchy { scale } => ("scale", scale),
        };
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::Model(format!("proposal {name} must be positive and finite, got {v}")))
        }
    }

    /// Increment obtained by inverting the proposal CDF at `u` in (0, 1).
    ///
    /// Both halves are computed from the distance to the nearer tail, so
    /// `increment(1 - u) == -increment(u)` up to rounding of `1 - u`.
    #[inline]
    pub fn increment(&self, u: f64) -> f64 {
        let (tail, sign) = if u < 0.5 { (u, -1.0) } else { (1.0 - u, 1.0) };
        match *self {
            ProposalDensity::Gaussian { sigma } => sign * sigma * std::f64::consts::SQRT_2 * erfc_inv(2.0 * tail),
            ProposalDensity::Uniform { half_width } => sign * half_width * (1.0 - 2.0 * tail),
            ProposalDensity::Cauchy { scale } => {
                sign * scale * (std::f64::consts::PI * (0.5 - tail)).tan()
            }
        }
    }
}

/// `min(f(y)/f(x), 1)`, or 1 when `f(x) = 0`.
pub fn metropolis_acceptance(x: f64, y: f64, target: &TargetDensity) -> Result<f64> {
    let fx = target.eval(x)?;
    if fx == 0.0 {
        return Ok(1.0);
    }
    let fy = target.eval(y)?;
    Ok((fy / fx).min(1.0))
}

/// One random walk Metropolis transition from `x` with increment `z` and uniform `u`.
#[inline]
pub fn metropolis_step(x: f64, z: f64, u: f64, target: &TargetDensity) -> Result<f64> {
    if u <= metropolis_acceptance(x, x + z, target)? {
        Ok(x + z)
    } else {
        Ok(x)
    }
}

/// Lindley recursion `max(w + xi, 0)`.
#[inline]
pub fn lindley_step(w: f64, xi: f64) -> f64 {
    (w + xi).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{seeded_rng, unit_open};

    fn pareto1() -> TargetDensity {
        TargetDensity::pareto(1.0, 1.0).unwrap()
    }

    #[test]
    fn acceptance_examples() {
        let t = pareto1();
        // f(0.5) = 0 outside the support.
        assert_eq!(metropolis_acceptance(0.5, 7.0, &t).unwrap(), 1.0);
        assert_eq!(metropolis_acceptance(4.0, 2.0, &t).unwrap(), 1.0);
        assert_eq!(metropolis_acceptance(2.0, 4.0, &t).unwrap(), 0.25);
    }

    #[test]
    fn step_examples() {
        let t = pareto1();
        assert_eq!(metropolis_step(2.0, 2.0, 0.3, &t).unwrap(), 2.0);
        assert_eq!(metropolis_step(2.0, 2.0, 0.2, &t).unwrap(), 4.0);
        for u in [0.0, 0.5, 1.0] {
            assert_eq!(metropolis_step(3.5, 0.0, u, &t).unwrap(), 3.5);
        }
    }

    #[test]
    fn lindley_examples() {
        assert_eq!(lindley_step(0.0, -1.0), 0.0);
        assert_eq!(lindley_step(3.0, 2.0), 5.0);
        assert_eq!(lindley_step(1.0, -5.0), 0.0);
    }

    #[test]
    fn point_mass_is_not_a_target() {
        assert!(TargetDensity::new(Distribution::Constant { value: 1.0 }).is_err());
        assert!(TargetDensity::pareto(-1.0, 1.0).is_err());
    }

    #[test]
    fn nan_density_is_a_model_error() {
        let t = TargetDensity::new(Distribution::Gaussian { mu: 0.0, sigma: 1.0 }).unwrap();
        assert!(matches!(metropolis_acceptance(f64::NAN, 0.0, &t), Err(Error::Model(_))));
    }

    #[test]
    fn detailed_balance_on_grid() {
        for target in [
            pareto1(),
            TargetDensity::new(Distribution::StudentT { nu: 2.0 }).unwrap(),
            TargetDensity::new(Distribution::Gaussian { mu: 0.5, sigma: 2.0 }).unwrap(),
        ] {
            let grid: Vec<f64> = (0..100).map(|i| 1.0 + 0.37 * i as f64).collect();
            for &x in &grid {
                for &y in &grid {
                    let (fx, fy) = (target.eval(x).unwrap(), target.eval(y).unwrap());
                    let lhs = fx * metropolis_acceptance(x, y, &target).unwrap();
                    let rhs = fy * metropolis_acceptance(y, x, &target).unwrap();
                    let m = fx.min(fy);
                    assert!((lhs - rhs).abs() <= 1e-12 * m, "{x} {y}");
                    assert!((lhs - m).abs() <= 1e-12 * m);
                }
            }
        }
    }

    #[test]
    fn proposals_are_symmetric() {
        let n = 20_000;
        let bound = 1.36 * (2.0 / n as f64).sqrt();
        for (k, p) in [
            ProposalDensity::Gaussian { sigma: 1.0 },
            ProposalDensity::Uniform { half_width: 2.0 },
            ProposalDensity::Cauchy { scale: 0.5 },
        ]
        .into_iter()
        .enumerate()
        {
            let mut rng = seeded_rng(40 + k as u64);
            let mut pos: Vec<f64> = (0..n).map(|_| p.increment(unit_open(&mut rng))).collect();
            let mut neg: Vec<f64> = pos.iter().map(|z| -z).collect();
            pos.sort_by(f64::total_cmp);
            neg.sort_by(f64::total_cmp);
            let d = two_sample_ks(&pos, &neg);
            assert!(d < bound, "{p:?}: {d}");
        }
    }

    #[test]
    fn gaussian_increment_quantiles() {
        let p = ProposalDensity::Gaussian { sigma: 2.0 };
        assert!(p.increment(0.5).abs() < 1e-15);
        assert!((p.increment(0.975) - 2.0 * 1.959_963_984_540_054).abs() < 1e-9);
        assert!((p.increment(0.025) + 2.0 * 1.959_963_984_540_054).abs() < 1e-9);
    }

    fn two_sample_ks(a: &[f64], b: &[f64]) -> f64 {
        let (mut i, mut j, mut d) = (0, 0, 0.0f64);
        while i < a.len() && j < b.len() {
            let x = a[i].min(b[j]);
            while i < a.len() && a[i] <= x {
                i += 1;
            }
            while j < b.len() && b[j] <= x {
                j += 1;
            }
            d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
        }
        d
    }
}
