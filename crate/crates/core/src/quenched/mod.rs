//! Point-started ("quenched") chains against the phantom calibrated under the
//! stationary start.

mod coupling;

use std::io::Write;

use serde::Serialize;

pub use coupling::{coupling_time_samples, COUPLING_STEP_LIMIT};

use crate::empirics::{sup_distance, DistributionFunction, MonteCarlo};
use crate::error::Result;
use crate::experiment::fmt_float;
use crate::models::{ChainModel, Start};
use crate::oracle::Support;
use crate::rng::derive_seed;

/// `f(y) >= G_*`; never true when `G_* = +inf`.
pub fn bad_set_member(x_value: f64, g_star: f64) -> bool {
    g_star.is_finite() && x_value >= g_star
}

/// States of a finite chain that lie in the bad set or can reach it in one or
/// more steps.
pub fn bad_set_closure(transition: &[Vec<f64>], values: &[f64], g_star: f64) -> Vec<bool> {
    let support = Support::of(transition);
    let bad: Vec<bool> = values.iter().map(|&v| bad_set_member(v, g_star)).collect();
    (0..values.len())
        .map(|i| bad[i] || support.reachable_from(i).iter().zip(&bad).any(|(&r, &b)| r && b))
        .collect()
}

/// Sup-norm gaps between point-start maxima and the phantom, per start and horizon.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuenchedReport {
    pub starts: Vec<Start>,
    pub horizons: Vec<u64>,
    /// `gaps[i][k]`: start `i`, horizon `k`.
    pub gaps: Vec<Vec<f64>>,
    pub stationary_gap: Vec<f64>,
    pub bad_set_hits: Vec<bool>,
    pub g_star: f64,
}

/// Terminal gap and decay verdict for one start.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StartSummary {
    pub start: String,
    pub terminal_gap: f64,
    pub initial_gap: f64,
    /// Terminal gap strictly below the gap at the first horizon.
    pub decayed: bool,
    /// Gap non-increasing across all horizons.
    pub monotone: bool,
    pub bad_set: bool,
}

impl QuenchedReport {
    pub fn summaries(&self) -> Vec<StartSummary> {
        self.starts
            .iter()
            .zip(&self.gaps)
            .zip(&self.bad_set_hits)
            .map(|((s, g), &bad)| StartSummary {
                start: s.to_string(),
                terminal_gap: g[g.len() - 1],
                initial_gap: g[0],
                decayed: g[g.len() - 1] < g[0],
                monotone: g.windows(2).all(|w| w[1] <= w[0]),
                bad_set: bad,
            })
            .collect()
    }

    /// CSV `start,n,gap,stationary_gap,flag`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "start,n,gap,stationary_gap,flag")?;
        for ((s, gaps), &bad) in self.starts.iter().zip(&self.gaps).zip(&self.bad_set_hits) {
            for ((n, g), sg) in self.horizons.iter().zip(gaps).zip(&self.stationary_gap) {
                writeln!(out, "{s},{n},{},{},{}", fmt_float(*g), fmt_float(*sg), u8::from(bad))?;
            }
        }
        Ok(())
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "g_star": if self.g_star.is_finite() { serde_json::json!(self.g_star) } else { serde_json::json!("inf") },
            "horizons": self.horizons,
            "stationary_terminal_gap": self.stationary_gap.last(),
            "starts": self.summaries(),
        })
    }
}

/// `D_n(s) = sup_x |P_s(M_n <= x) - G^n(x)|` estimated with `replicas`
/// trajectories per start, plus the stationary-start reference `D_n(pi)`.
///
/// Each start and the reference draw from their own derived seed, so the
/// reference is independent of the samples the phantom was calibrated on.
pub fn quenched_gap_curve<D: DistributionFunction + ?Sized>(
    engine: &MonteCarlo,
    model: &ChainModel,
    starts: &[Start],
    horizons: &[u64],
    replicas: usize,
    seed: u64,
    phantom: &D,
) -> Result<QuenchedReport> {
    let gaps_for = |start: Start, label: &str| -> Result<Vec<f64>> {
        let m = engine.run(model, start, horizons, replicas, derive_seed(seed, label))?;
        (0..horizons.len())
            .map(|k| Ok(sup_distance(&m.empirical_max_df(k)?, 1, phantom, horizons[k])))
            .collect()
    };
    let g_star = phantom.right_end();
    let mut gaps = Vec::with_capacity(starts.len());
    let mut bad_set_hits = Vec::with_capacity(starts.len());
    for &s in starts {
        model.check_start(s)?;
        gaps.push(gaps_for(s, &format!("quenched/{s}"))?);
        bad_set_hits.push(model.start_value(s).is_some_and(|v| bad_set_member(v, g_star)));
    }
    let stationary_gap = gaps_for(Start::Stationary, "quenched/stationary-reference")?;
    Ok(QuenchedReport {
        starts: starts.to_vec(),
        horizons: horizons.to_vec(),
        gaps,
        stationary_gap,
        bad_set_hits,
        g_star,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirics::StepDf;
    use crate::models::{Distribution, StationaryMarginal};
    use crate::oracle::{exact_quenched_gap, FiniteChain};

    #[test]
    fn bad_set_examples() {
        assert!(!bad_set_member(1e300, f64::INFINITY));
        assert!(bad_set_member(5.0, 5.0));
        assert!(!bad_set_member(4.999, 5.0));
    }

    #[test]
    fn closure_follows_the_support_graph() {
        // 0 -> 1 -> 2 (absorbing); 3 only feeds itself and 0.
        let p = vec![
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.5, 0.0, 0.0, 0.5],
        ];
        assert_eq!(bad_set_closure(&p, &[0.0, 1.0, 9.0, 0.0], 5.0), vec![true, true, true, true]);
        assert_eq!(bad_set_closure(&p, &[0.0, 9.0, 0.0, 0.0], 5.0), vec![true, true, false, true]);
        assert_eq!(bad_set_closure(&p, &[9.0; 4], f64::INFINITY), vec![false; 4]);
    }

    #[test]
    fn iid_gap_is_start_independent() {
        let engine = MonteCarlo::new(None).unwrap();
        let dist = Distribution::Uniform { low: 0.0, high: 1.0 };
        let model = ChainModel::iid(dist.clone()).unwrap();
        let phantom = StationaryMarginal { dist, block: 1 };
        let r = 10_000;
        // X_0 = s counts towards M_n, so horizons start where P(M_n <= s) is negligible.
        let rep = quenched_gap_curve(&engine, &model, &[Start::Point(0.2), Start::Point(0.9)], &[100, 1000], r, 3, &phantom)
            .unwrap();
        let tol = 2.0 * 1.36 / (r as f64).sqrt();
        for gaps in &rep.gaps {
            for (g, sg) in gaps.iter().zip(&rep.stationary_gap) {
                assert!((g - sg).abs() < tol, "{rep:?}");
            }
        }
        assert_eq!(rep.bad_set_hits, vec![false, false]);
        assert!(rep.gaps.iter().flatten().all(|g| (0.0..=1.0).contains(g)));
    }

    #[test]
    fn finite_chain_gap_matches_the_oracle() {
        let p = vec![vec![0.7, 0.2, 0.1], vec![0.3, 0.4, 0.3], vec![0.2, 0.3, 0.5]];
        let values = vec![0.0, 1.0, 2.0];
        let model = ChainModel::finite(p.clone(), values.clone()).unwrap();
        let chain = FiniteChain::stationary(p, values).unwrap();
        // Phantom: the exact stationary max df at n = 4 taken to the power 1/4,
        // so D_4(pi) is the exact stationary/point-start gap at x in {0, 1}.
        let n = 4u64;
        let pts = [0.0, 1.0, 2.0];
        let vals: Vec<f64> = pts.iter().map(|&x| chain.exact_max_cdf(n, x).unwrap().powf(1.0 / n as f64)).collect();
        let phantom = StepDf::new(pts.to_vec(), vals).unwrap();
        let engine = MonteCarlo::new(None).unwrap();
        let rep = quenched_gap_curve(&engine, &model, &[Start::State(0), Start::State(2)], &[n], 100_000, 8, &phantom)
            .unwrap();
        for (i, s) in [0usize, 2].into_iter().enumerate() {
            let exact = exact_quenched_gap(&chain, s, n, &[0.0, 1.0]).unwrap();
            assert!((rep.gaps[i][0] - exact).abs() < 0.01, "start {s}: {} vs {exact}", rep.gaps[i][0]);
        }
    }

    #[test]
    fn csv_and_summary_shapes() {
        let rep = QuenchedReport {
            starts: vec![Start::Point(1.0)],
            horizons: vec![10, 100],
            gaps: vec![vec![0.5, 0.1]],
            stationary_gap: vec![0.05, 0.02],
            bad_set_hits: vec![false],
            g_star: f64::INFINITY,
        };
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("start,n,gap,stationary_gap,flag\n1.0000000000000000e0,10,"));
        let s = &rep.summaries()[0];
        assert!(s.decayed && s.monotone);
        assert_eq!(rep.summary_json()["g_star"], "inf");
    }
}
