use serde::Serialize;

use super::MonteCarlo;
use crate::error::{Error, Result};
use crate::models::{ChainModel, Start};

/// Estimate of `P(M_n <= u_n(tau))` at one horizon.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtremalZeroPoint {
    pub n: u64,
    /// `u_n(tau) = F^{-1}(1 - tau/n)`.
    pub level: f64,
    pub estimate: f64,
    /// `(1 - tau/n)^n`, the exact value for an i.i.d. sequence with continuous `F`.
    pub iid_reference: f64,
}

/// Probability that the stationary maximum stays below the marginal level
/// `u_n(tau)`. It tends to `exp(-tau)` for i.i.d. data and to 1 for sequences
/// with extremal index zero.
pub fn extremal_index_zero_check(
    engine: &MonteCarlo,
    model: &ChainModel,
    tau: f64,
    horizons: &[u64],
    replicas: usize,
    seed: u64,
) -> Result<Vec<ExtremalZeroPoint>> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Config(format!("tau must be positive, got {tau}")));
    }
    let marginal = model.stationary_marginal().ok_or_else(|| {
        Error::Config("extremal-index check needs a marginal with closed-form inverse (pareto or iid models)".into())
    })?;
    if let Some(&n) = horizons.iter().find(|&&n| (n as f64) <= tau) {
        return Err(Error::Config(format!("horizon {n} must exceed tau = {tau}")));
    }
    let samples = engine.run(model, Start::Stationary, horizons, replicas, seed)?;
    Ok(horizons
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let level = marginal.quantile(1.0 - tau / n as f64);
            ExtremalZeroPoint {
                n,
                level,
                estimate: samples.fraction_at_most(k, level),
                iid_reference: (1.0 - tau / n as f64).powf(n as f64),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Distribution;

    #[test]
    fn iid_tends_to_exp_minus_tau() {
        let engine = MonteCarlo::new(None).unwrap();
        let model = ChainModel::iid(Distribution::Pareto { alpha: 2.0, x_min: 1.0 }).unwrap();
        let out = extremal_index_zero_check(&engine, &model, 1.0, &[1000], 10_000, 17).unwrap();
        assert!((out[0].estimate - (-1.0f64).exp()).abs() < 0.02, "{out:?}");
    }

    #[test]
    fn vanishing_tau_pushes_estimates_to_one() {
        let engine = MonteCarlo::new(None).unwrap();
        let model = ChainModel::iid(Distribution::Uniform { low: 0.0, high: 1.0 }).unwrap();
        let out = extremal_index_zero_check(&engine, &model, 1e-9, &[10, 100], 1000, 3).unwrap();
        for p in out {
            assert!(p.level > 1.0 - 1e-9);
            assert_eq!(p.estimate, 1.0);
        }
    }

    #[test]
    fn models_without_closed_form_marginal_are_rejected() {
        let engine = MonteCarlo::new(Some(1)).unwrap();
        let model = ChainModel::lindley(Distribution::Exponential { rate: 1.0 }, 2.0).unwrap();
        let err = extremal_index_zero_check(&engine, &model, 1.0, &[10], 100, 1).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }
}
