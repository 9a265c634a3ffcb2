use std::io::Write;

use serde::Serialize;

use super::levels::LevelSequence;
use crate::empirics::{DistributionFunction, MaxSampleMatrix};
use crate::error::{Error, Result};
use crate::experiment::fmt_float;

/// One cell of the level-criterion table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObrienRow {
    pub n: u64,
    pub t: f64,
    /// `[n t]`, the horizon whose maximum is compared with `v_n`.
    pub horizon: u64,
    pub estimate: f64,
    pub target: f64,
    pub abs_error: f64,
}

/// `[n t]`.
pub fn scaled_horizon(n: u64, t: f64) -> u64 {
    (n as f64 * t).floor() as u64
}

/// Checkpoint grid containing every calibration horizon `n` and every `[n t]`.
pub fn obrien_checkpoints(horizons: &[u64], t_grid: &[f64]) -> Vec<u64> {
    let mut out: Vec<u64> = horizons
        .iter()
        .flat_map(|&n| std::iter::once(n).chain(t_grid.iter().map(move |&t| scaled_horizon(n, t))))
        .filter(|&n| n >= 1)
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Empirical `P(M_[nt] <= v_n)` against `exp(-beta t)` for every level horizon
/// `n` and every `t`.
pub fn verify_obrien(samples: &MaxSampleMatrix, levels: &LevelSequence, t_grid: &[f64]) -> Result<Vec<ObrienRow>> {
    if let Some(t) = t_grid.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(Error::Config(format!("t values must be positive, got {t}")));
    }
    let required = obrien_checkpoints(levels.horizons(), t_grid);
    let missing: Vec<u64> = required.iter().copied().filter(|&n| samples.index_of(n).is_none()).collect();
    if !missing.is_empty() || levels.horizons().iter().any(|&n| t_grid.iter().any(|&t| scaled_horizon(n, t) == 0)) {
        return Err(Error::Config(format!(
            "sample grid lacks horizons {missing:?}; required horizons are {required:?} (each [n t] must be >= 1)"
        )));
    }
    let beta = levels.beta();
    let mut rows = Vec::with_capacity(levels.horizons().len() * t_grid.len());
    for (&n, &v) in levels.horizons().iter().zip(levels.levels()) {
        for &t in t_grid {
            let horizon = scaled_horizon(n, t);
            let k = samples.index_of(horizon).expect("checked above");
            let estimate = samples.fraction_at_most(k, v);
            let target = (-beta * t).exp();
            rows.push(ObrienRow { n, t, horizon, estimate, target, abs_error: (estimate - target).abs() });
        }
    }
    Ok(rows)
}

/// CSV `n,t,estimate,target,abs_error`.
pub fn write_obrien_csv<W: Write>(rows: &[ObrienRow], mut out: W) -> Result<()> {
    writeln!(out, "n,t,estimate,target,abs_error")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.n,
            fmt_float(r.t),
            fmt_float(r.estimate),
            fmt_float(r.target),
            fmt_float(r.abs_error)
        )?;
    }
    Ok(())
}

/// Ratios `(1 - G(x-)) / (1 - G(x))` at breakpoints where `1 - G(x) > 0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Regularity {
    pub ratios: Vec<(f64, f64)>,
}

impl Regularity {
    /// Ratio at the largest evaluated point.
    pub fn tail_ratio(&self) -> Option<f64> {
        self.ratios.last().map(|r| r.1)
    }

    /// Whether the tail ratio is within `tol` of 1. An empty sequence is not regular.
    pub fn looks_regular(&self, tol: f64) -> bool {
        self.tail_ratio().is_some_and(|r| (r - 1.0).abs() <= tol)
    }
}

/// Jump ratios whose convergence to 1 at the right end characterises regularity.
pub fn regularity_ratios<D: DistributionFunction + ?Sized>(g: &D) -> Regularity {
    let end = g.right_end();
    let ratios = g
        .breakpoints()
        .into_iter()
        .filter(|&x| x < end)
        .filter_map(|x| {
            let denom = 1.0 - g.value(x);
            (denom > 0.0).then(|| (x, (1.0 - g.left_limit(x)) / denom))
        })
        .collect();
    Regularity { ratios }
}
