use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::empirics::{DistributionFunction, MaxSampleMatrix};
use crate::error::{Error, Result};
use crate::experiment::fmt_float;
use crate::models::validate_checkpoints;

/// Smallest replica count accepted for level estimation.
pub const MIN_CALIBRATION_REPLICAS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelSource {
    FromDf,
    FromSamples,
}

/// Non-decreasing levels `v_n(beta)` with `G^n(v_n) = exp(-beta)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSequence {
    beta: f64,
    horizons: Vec<u64>,
    levels: Vec<f64>,
    source: LevelSource,
}

impl LevelSequence {
    pub fn new(beta: f64, horizons: Vec<u64>, levels: Vec<f64>, source: LevelSource) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Contract(format!("beta must be positive, got {beta}")));
        }
        validate_checkpoints(&horizons).map_err(|e| Error::Contract(e.to_string()))?;
        if horizons.len() != levels.len() {
            return Err(Error::Contract("one level per horizon is required".into()));
        }
        if levels.iter().any(|v| !v.is_finite()) {
            return Err(Error::Contract("levels must be finite".into()));
        }
        if let Some(w) = levels.windows(2).find(|w| w[0] > w[1]) {
            return Err(Error::Contract(format!("levels decrease from {} to {}", w[0], w[1])));
        }
        Ok(LevelSequence { beta, horizons, levels, source })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn horizons(&self) -> &[u64] {
        &self.horizons
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn source(&self) -> LevelSource {
        self.source
    }

    pub fn level_at(&self, n: u64) -> Option<f64> {
        self.horizons.binary_search(&n).ok().map(|i| self.levels[i])
    }

    /// Sub-sequence at the listed horizons.
    pub fn restrict(&self, horizons: &[u64]) -> Result<Self> {
        let levels = horizons
            .iter()
            .map(|&n| {
                self.level_at(n)
                    .ok_or_else(|| Error::Config(format!("no calibrated level at horizon {n}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.beta, horizons.to_vec(), levels, self.source)
    }

    /// CSV `n,v_n`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n,v_n")?;
        for (n, v) in self.horizons.iter().zip(&self.levels) {
            writeln!(out, "{n},{}", fmt_float(*v))?;
        }
        Ok(())
    }
}

/// `exp(-beta/n)`, the df value carried by level `v_n(beta)`.
#[inline]
pub(crate) fn node_value(beta: f64, n: u64) -> f64 {
    (-beta / n as f64).exp()
}

/// `v_n = inf { x : g(x)^n >= exp(-beta) }` at each horizon.
pub fn levels_from_df<D: DistributionFunction + ?Sized>(g: &D, beta: f64, horizons: &[u64]) -> Result<LevelSequence> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Calibration(format!("beta must be positive, got {beta}")));
    }
    validate_checkpoints(horizons)?;
    let levels = horizons
        .iter()
        .map(|&n| {
            g.quantile(node_value(beta, n)).ok_or_else(|| {
                Error::Calibration(format!(
                    "df never reaches exp(-{beta}/{n}) below its right end; no level exists at n={n}"
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    LevelSequence::new(beta, horizons.to_vec(), levels, LevelSource::FromDf)
}

/// Empirical `exp(-beta)`-quantile of every column, made non-decreasing by a
/// cumulative maximum.
pub fn levels_from_samples(samples: &MaxSampleMatrix, beta: f64) -> Result<LevelSequence> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Calibration(format!("beta must be positive, got {beta}")));
    }
    let r = samples.replicas();
    if r < MIN_CALIBRATION_REPLICAS {
        return Err(Error::Calibration(format!(
            "{r} replicas is below the minimum of {MIN_CALIBRATION_REPLICAS} for level estimation"
        )));
    }
    let p = (-beta).exp();
    // Tolerance absorbs rounding in exp(-beta) for beta = ln(R).
    if p * (r as f64) < 1.0 - 1e-12 {
        return Err(Error::Calibration(format!(
            "exp(-beta) = {p:e} is below 1/R = {:e}; use more replicas or a smaller beta",
            1.0 / r as f64
        )));
    }
    let rank = quantile_rank(p, r);
    let mut running = f64::NEG_INFINITY;
    let levels = (0..samples.checkpoints().len())
        .map(|k| {
            running = running.max(samples.sorted_column(k)[rank - 1]);
            running
        })
        .collect();
    LevelSequence::new(beta, samples.checkpoints().to_vec(), levels, LevelSource::FromSamples)
}

/// Smallest `k` in `1..=r` with `k / r >= p`, up to a relative rounding slack
/// so that `p = exp(ln(j / r))` maps back to rank `j`.
pub(crate) fn quantile_rank(p: f64, r: usize) -> usize {
    let rf = r as f64;
    let p = p * (1.0 - 1e-12);
    let mut k = ((p * rf).ceil() as usize).clamp(1, r);
    while k > 1 && (k - 1) as f64 / rf >= p {
        k -= 1;
    }
    while k < r && (k as f64) / rf < p {
        k += 1;
    }
    k
}
