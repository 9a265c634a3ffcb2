use std::io::Write;

use super::levels::{levels_from_samples, node_value, LevelSequence};
use crate::empirics::{pow, DistributionFunction, MaxSampleMatrix, StepDf};
use crate::error::{Error, Result};
use crate::experiment::fmt_float;

/// Phantom df built from one level sequence:
/// `G = 0` below `v_1`, `G = exp(-beta/n)` on `[v_n, v_{n+1})`.
///
/// Only finitely many levels are known, so `G` stays at `exp(-beta/N)` beyond
/// the last level and never reaches 1 (its right end is `+inf`). Use
/// [`StepDf::truncated_at`] to impose a finite right end. Tied levels keep the
/// value of the largest horizon.
pub fn phantom_from_levels(levels: &LevelSequence) -> Result<StepDf> {
    phantom_from_level_family(std::slice::from_ref(levels))
}

/// `G(x) = max { exp(-beta/n) : v_n(beta) <= x }` over every node of every
/// sequence. Reduces to [`phantom_from_levels`] for a single sequence.
pub fn phantom_from_level_family(family: &[LevelSequence]) -> Result<StepDf> {
    let mut nodes: Vec<(f64, f64)> = Vec::new();
    for seq in family {
        if seq.levels().windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Contract("phantom construction needs non-decreasing levels".into()));
        }
        nodes.extend(
            seq.horizons()
                .iter()
                .zip(seq.levels())
                .map(|(&n, &v)| (v, node_value(seq.beta(), n))),
        );
    }
    if nodes.is_empty() {
        return Err(Error::Contract("no levels to build a phantom from".into()));
    }
    nodes.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut jumps: Vec<f64> = Vec::with_capacity(nodes.len());
    let mut values: Vec<f64> = Vec::with_capacity(nodes.len());
    for (x, g) in nodes {
        let g = values.last().map_or(g, |&prev: &f64| prev.max(g));
        if jumps.last() == Some(&x) {
            *values.last_mut().expect("paired") = g;
        } else {
            jumps.push(x);
            values.push(g);
        }
    }
    StepDf::new(jumps, values)
}

/// Continuous phantom obtained from a step phantom by log-linear interpolation
/// between consecutive jump points.
///
/// `H = g` below the first node and from the last node on; between nodes
/// `log H` is linear in `x`. A finite right end of `g` is kept as a jump to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct LogLinearDf {
    nodes: Vec<f64>,
    values: Vec<f64>,
    log_values: Vec<f64>,
    right_end: f64,
    /// Set when `g` had a single node and a linear ramp of width `ramp_width` replaced it.
    ramp_width: Option<f64>,
}

/// Interpolates the jump points of `g` whose value lies below 1.
pub fn continuize(g: &StepDf) -> Result<LogLinearDf> {
    let right_end = g.right_end();
    let (nodes, values): (Vec<f64>, Vec<f64>) = g
        .jumps()
        .iter()
        .zip(g.values())
        .filter(|(_, &v)| v > 0.0 && v < 1.0)
        .map(|(&x, &v)| (x, v))
        .unzip();
    let (nodes, values, ramp_width) = if nodes.len() >= 2 {
        (nodes, values, None)
    } else {
        // Degenerate range: ramp linearly up to the first positive value.
        let (x0, v0) = nodes
            .first()
            .zip(values.first())
            .map(|(&x, &v)| (x, v))
            .or_else(|| g.jumps().first().map(|&x| (x, g.value(x))))
            .ok_or_else(|| Error::Contract("empty step df".into()))?;
        (vec![x0], vec![v0], Some(1e-9 * x0.abs().max(1.0)))
    };
    let log_values = values.iter().map(|v| v.ln()).collect();
    Ok(LogLinearDf { nodes, values, log_values, right_end, ramp_width })
}

impl LogLinearDf {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node_values(&self) -> &[f64] {
        &self.values
    }

    /// True when the input had a single node and a ramp approximation was used.
    pub fn is_approximate(&self) -> bool {
        self.ramp_width.is_some()
    }

    /// Per band `[x_i, x_{i+1})`: the bound `|g^p - H^p| <= g(x_{i+1})^p - g(x_i)^p`.
    pub fn band_bounds(&self, power: u64) -> Vec<(f64, f64, f64)> {
        self.nodes
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, v)| (x[0], x[1], pow(v[1], power) - pow(v[0], power)))
            .collect()
    }

    fn interior(&self, x: f64) -> f64 {
        let i = self.nodes.partition_point(|&n| n <= x) - 1;
        if i + 1 == self.nodes.len() {
            return self.values[i];
        }
        let (a, b) = (self.nodes[i], self.nodes[i + 1]);
        let (la, lb) = (self.log_values[i], self.log_values[i + 1]);
        if la == lb {
            return self.values[i];
        }
        (la + (x - a) / (b - a) * (lb - la)).exp()
    }

    /// CSV `x,G` sampled at every node.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_df_csv(out, self.nodes.iter().map(|&x| (x, self.value(x))))
    }
}

impl DistributionFunction for LogLinearDf {
    fn value(&self, x: f64) -> f64 {
        if x >= self.right_end {
            return 1.0;
        }
        let x0 = self.nodes[0];
        match self.ramp_width {
            Some(w) if x < x0 => {
                if x <= x0 - w {
                    0.0
                } else {
                    self.values[0] * (x - (x0 - w)) / w
                }
            }
            _ if x < x0 => 0.0,
            _ => self.interior(x),
        }
    }

    fn left_limit(&self, x: f64) -> f64 {
        if x == self.right_end {
            return self.values[self.values.len() - 1];
        }
        if x == self.nodes[0] && self.ramp_width.is_none() {
            return 0.0;
        }
        self.value(x)
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.nodes.len() + 2);
        if let Some(w) = self.ramp_width {
            out.push(self.nodes[0] - w);
        }
        out.extend_from_slice(&self.nodes);
        if self.right_end.is_finite() {
            out.push(self.right_end);
        }
        out
    }

    fn limit_at_infinity(&self) -> f64 {
        if self.right_end.is_finite() {
            1.0
        } else {
            self.values[self.values.len() - 1]
        }
    }

    fn right_end(&self) -> f64 {
        self.right_end
    }

    fn quantile(&self, p: f64) -> Option<f64> {
        if !(p > 0.0) {
            return None;
        }
        let x0 = self.nodes[0];
        if p <= self.values[0] {
            return Some(match self.ramp_width {
                Some(w) => x0 - w + w * p / self.values[0],
                None => x0,
            });
        }
        let lp = p.ln();
        for i in 0..self.nodes.len() - 1 {
            if self.values[i] < p && p <= self.values[i + 1] {
                let (a, b) = (self.nodes[i], self.nodes[i + 1]);
                let (la, lb) = (self.log_values[i], self.log_values[i + 1]);
                return Some((a + (lp - la) / (lb - la) * (b - a)).clamp(a, b));
            }
        }
        self.right_end.is_finite().then_some(self.right_end)
    }
}

/// CSV `x,G`.
pub fn write_df_csv<W: Write, I: IntoIterator<Item = (f64, f64)>>(mut out: W, points: I) -> Result<()> {
    writeln!(out, "x,G")?;
    for (x, g) in points {
        writeln!(out, "{},{}", fmt_float(x), fmt_float(g))?;
    }
    Ok(())
}

/// Phantom calibrated from stationary samples with several calibration masses.
#[derive(Clone, Debug)]
pub struct PhantomCalibration {
    pub levels: Vec<LevelSequence>,
    pub step: StepDf,
    pub smooth: LogLinearDf,
}

/// Number of probability cells used by [`quantile_grid_betas`] by default.
pub const DEFAULT_CALIBRATION_GRID: usize = 200;

/// `beta_j = -ln(j / k)` for `j = 1, ..., k - 1`: calibration masses whose
/// levels at a single horizon `n` sit at the `j/k` quantiles of `M_n`.
pub fn quantile_grid_betas(k: usize) -> Vec<f64> {
    (1..k).rev().map(|j| -(j as f64 / k as f64).ln()).collect()
}

/// Levels at every checkpoint for every `beta`, merged into one phantom and continuized.
///
/// With a single checkpoint `n` and the masses of [`quantile_grid_betas`], `G^n`
/// follows the empirical df of `M_n` at the grid quantiles.
pub fn calibrate_phantom(samples: &MaxSampleMatrix, betas: &[f64]) -> Result<PhantomCalibration> {
    if betas.is_empty() {
        return Err(Error::Calibration("at least one beta is required".into()));
    }
    let levels = betas
        .iter()
        .map(|&b| levels_from_samples(samples, b))
        .collect::<Result<Vec<_>>>()?;
    let step = phantom_from_level_family(&levels)?;
    let smooth = continuize(&step)?;
    Ok(PhantomCalibration { levels, step, smooth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::levels::{levels_from_df, LevelSource};
    use proptest::prelude::*;

    fn seq(beta: f64, horizons: Vec<u64>, levels: Vec<f64>) -> LevelSequence {
        LevelSequence::new(beta, horizons, levels, LevelSource::FromDf).unwrap()
    }

    #[test]
    fn integer_levels_example() {
        let g = phantom_from_levels(&seq(1.0, vec![1, 2, 3], vec![1.0, 2.0, 3.0])).unwrap();
        assert_eq!(g.value(0.99), 0.0);
        assert!((g.value(1.5) - 0.367_879_441_171_442_3).abs() < 1e-15);
        assert!((g.value(2.5) - 0.606_530_659_712_633_4).abs() < 1e-15);
        assert_eq!(g.right_end(), f64::INFINITY);
    }

    #[test]
    fn single_level_phantom() {
        let g = phantom_from_levels(&seq(2.0, vec![1], vec![0.0])).unwrap();
        assert_eq!(g.jumps(), &[0.0]);
        assert!((g.values()[0] - (-2.0f64).exp()).abs() < 1e-15);
        let t = g.truncated_at(1.0).unwrap();
        assert_eq!(t.value(1.0), 1.0);
        assert_eq!(t.right_end(), 1.0);
    }

    #[test]
    fn ties_keep_the_largest_horizon() {
        let g = phantom_from_levels(&seq(1.0, vec![1, 2, 3], vec![1.0, 1.0, 2.0])).unwrap();
        assert_eq!(g.jumps(), &[1.0, 2.0]);
        assert_eq!(g.values()[0], node_value(1.0, 2));
    }

    #[test]
    fn family_merge_takes_running_maximum() {
        let a = seq(1.0, vec![1, 2], vec![1.0, 3.0]);
        let b = seq(0.1, vec![1], vec![2.0]);
        let g = phantom_from_level_family(&[a.clone(), b]).unwrap();
        assert_eq!(g.jumps(), &[1.0, 2.0, 3.0]);
        // exp(-0.1) exceeds exp(-1/2), so the node at 3 inherits exp(-0.1).
        assert_eq!(g.values()[1], node_value(0.1, 1));
        assert_eq!(g.values()[2], node_value(0.1, 1));
        assert_eq!(phantom_from_level_family(&[a.clone()]).unwrap(), phantom_from_levels(&a).unwrap());
    }

    #[test]
    fn continuize_interpolates_between_nodes() {
        let g = phantom_from_levels(&seq(1.0, vec![1, 2, 3], vec![1.0, 2.0, 3.0])).unwrap();
        let h = continuize(&g).unwrap();
        assert!(!h.is_approximate());
        for &x in g.jumps() {
            assert_eq!(h.value(x), g.value(x));
        }
        let mid = h.value(1.5);
        assert!(mid > (-1.0f64).exp() && mid < (-0.5f64).exp());
        assert!((mid - (-0.75f64).exp()).abs() < 1e-15);
        assert_eq!(h.value(0.5), 0.0);
        assert_eq!(h.value(100.0), g.value(100.0));
        assert_eq!(h.quantile(mid).map(|x| (x - 1.5).abs() < 1e-12), Some(true));
    }

    #[test]
    fn continuize_stays_within_band_bounds() {
        let horizons: Vec<u64> = (1..=200).collect();
        let levels: Vec<f64> = horizons.iter().map(|&n| (n as f64).sqrt()).collect();
        let g = phantom_from_levels(&seq(1.0, horizons, levels)).unwrap();
        let h = continuize(&g).unwrap();
        let bands = h.band_bounds(100);
        let (lo, hi) = (g.jumps()[0], *g.jumps().last().unwrap());
        for i in 0..10_000 {
            let x = lo + (hi - lo) * i as f64 / 10_000.0;
            let k = g.jumps().partition_point(|&j| j <= x) - 1;
            let diff = (pow(g.value(x), 100) - pow(h.value(x), 100)).abs();
            assert!(diff <= bands[k].2 + 1e-15, "x={x}");
            // The coarser closed-form band bound, with band index n = k + 1 at power n.
            let n = (k + 1) as f64;
            let loose = (-1.0 / n).exp() * ((1.0 / n - 1.0 / (n + 1.0)) * n).exp_m1();
            let at_own_power = (pow(g.value(x), k as u64 + 1) - pow(h.value(x), k as u64 + 1)).abs();
            assert!(at_own_power <= loose + 1e-15);
        }
    }

    #[test]
    fn continuize_is_continuous_inside_the_level_range() {
        let g = phantom_from_levels(&seq(1.0, vec![1, 2, 4, 8], vec![0.5, 1.0, 1.7, 4.0])).unwrap();
        let h = continuize(&g).unwrap();
        for i in 0..3000 {
            let x = 0.5 + 3.5 * i as f64 / 3000.0;
            assert!((h.value(x + 1e-9) - h.value(x)).abs() < 1e-9);
            assert!(h.value(x + 1e-3) >= h.value(x));
        }
    }

    #[test]
    fn tied_levels_give_a_flagged_ramp() {
        let g = phantom_from_levels(&seq(1.0, vec![1, 2, 3], vec![5.0, 5.0, 5.0])).unwrap();
        let h = continuize(&g).unwrap();
        assert!(h.is_approximate());
        assert_eq!(h.value(5.0), g.value(5.0));
        assert_eq!(h.value(5.0 - 1e-8), 0.0);
        let mid = h.value(5.0 - 2.5e-9);
        assert!(mid > 0.0 && mid < g.value(5.0));
    }

    #[test]
    fn quantile_grid_levels_track_the_empirical_df() {
        let betas = quantile_grid_betas(4);
        assert_eq!(betas.len(), 3);
        assert!(betas.windows(2).all(|w| w[0] < w[1]));
        assert!((betas[0] - (4.0f64 / 3.0).ln()).abs() < 1e-15);
        let rows: Vec<Vec<f64>> = (1..=100).map(|i| vec![f64::from(i)]).collect();
        let prov = crate::empirics::Provenance { model_id: "t".into(), start: "stationary".into(), root_seed: 0 };
        let m = MaxSampleMatrix::from_rows(vec![10], rows, prov).unwrap();
        let cal = calibrate_phantom(&m, &quantile_grid_betas(100)).unwrap();
        // G^10 at the j-th order statistic is j/100.
        for j in [1u32, 17, 50, 99] {
            let g10 = pow(cal.step.value(f64::from(j)), 10);
            assert!((g10 - f64::from(j) / 100.0).abs() < 1e-12, "{j}: {g10}");
        }
    }

    #[test]
    fn phantom_of_a_point_mass_continuizes() {
        let h = continuize(&StepDf::point_mass(2.0)).unwrap();
        assert!(h.is_approximate());
        assert_eq!(h.value(2.0), 1.0);
    }

    fn level_seq() -> impl Strategy<Value = LevelSequence> {
        (0.05f64..5.0, proptest::collection::vec((1u64..50, 0.0f64..3.0), 1..40)).prop_map(|(beta, steps)| {
            let mut n = 0;
            let mut v = -10.0;
            let (h, l): (Vec<u64>, Vec<f64>) = steps
                .into_iter()
                .map(|(dn, dv)| {
                    n += dn;
                    v += dv;
                    (n, v)
                })
                .unzip();
            seq(beta, h, l)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn construction_hits_exp_minus_beta(s in level_seq()) {
            let g = phantom_from_levels(&s).unwrap();
            let strictly = s.levels().windows(2).all(|w| w[0] < w[1]);
            if strictly {
                for (&n, &v) in s.horizons().iter().zip(s.levels()) {
                    prop_assert!((pow(g.value(v), n) - (-s.beta()).exp()).abs() < 1e-12);
                }
                let back = levels_from_df(&g, s.beta(), s.horizons()).unwrap();
                prop_assert_eq!(back.levels(), s.levels());
            }
        }

        #[test]
        fn continuized_df_is_monotone_and_matches_nodes(s in level_seq()) {
            let g = phantom_from_levels(&s).unwrap();
            let h = continuize(&g).unwrap();
            for &x in g.jumps() {
                prop_assert_eq!(h.value(x), g.value(x));
            }
            let (lo, hi) = (g.jumps()[0] - 1.0, g.jumps()[g.jumps().len() - 1] + 1.0);
            let mut prev = 0.0;
            for i in 0..500 {
                let v = h.value(lo + (hi - lo) * i as f64 / 499.0);
                prop_assert!(v >= prev - 1e-15);
                prev = v;
            }
        }
    }
}
