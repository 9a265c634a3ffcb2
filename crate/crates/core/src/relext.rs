//! Relative extremal index between two sequences: `P(M_n <= x) ~ P(M'_n <= x)^theta`.

use std::io::Write;

use serde::Serialize;

use crate::empirics::MaxSampleMatrix;
use crate::error::{Error, Result};
use crate::experiment::fmt_float;

/// Fewest in-band evaluation points accepted by [`estimate_theta`].
pub const MIN_ADMISSIBLE_POINTS: usize = 10;
pub const DEFAULT_BAND: (f64, f64) = (0.05, 0.95);

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThetaPoint {
    pub x: f64,
    pub p_a: f64,
    pub p_b: f64,
    pub log_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThetaEstimate {
    pub theta_hat: f64,
    pub per_point: Vec<ThetaPoint>,
    pub valid_fraction: f64,
    pub n: u64,
    pub replicas_a: usize,
    pub replicas_b: usize,
}

impl ThetaEstimate {
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "theta_hat": self.theta_hat,
            "valid_fraction": self.valid_fraction,
            "n": self.n,
            "R": self.replicas_a.min(self.replicas_b),
            "replicas_a": self.replicas_a,
            "replicas_b": self.replicas_b,
            "admissible_points": self.per_point.len(),
        })
    }

    /// CSV `x,p_a,p_b,log_ratio`.
    pub fn write_points_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,p_a,p_b,log_ratio")?;
        for p in &self.per_point {
            writeln!(
                out,
                "{},{},{},{}",
                fmt_float(p.x),
                fmt_float(p.p_a),
                fmt_float(p.p_b),
                fmt_float(p.log_ratio)
            )?;
        }
        Ok(())
    }
}

fn ecdf(sorted: &[f64], x: f64) -> f64 {
    sorted.partition_point(|&v| v <= x) as f64 / sorted.len() as f64
}

/// Median over shared evaluation points of `ln P_a(M_n <= x) / ln P_b(M_n <= x)`,
/// using only points where both empirical probabilities lie in `band`.
///
/// Evaluation points are the distinct values of both columns at `k`.
pub fn estimate_theta(a: &MaxSampleMatrix, b: &MaxSampleMatrix, k: usize, band: (f64, f64)) -> Result<ThetaEstimate> {
    let (lo, hi) = band;
    if !(0.0 < lo && lo < hi && hi < 1.0) {
        return Err(Error::Estimation(format!("band ({lo}, {hi}) must satisfy 0 < low < high < 1")));
    }
    let n = match (a.checkpoints().get(k), b.checkpoints().get(k)) {
        (Some(&na), Some(&nb)) if na == nb => na,
        (Some(na), Some(nb)) => {
            return Err(Error::Estimation(format!("checkpoint {k} is n = {na} in one sample and n = {nb} in the other")))
        }
        _ => return Err(Error::Estimation(format!("checkpoint index {k} missing from a sample matrix"))),
    };
    let sa = a.sorted_column(k);
    let sb = b.sorted_column(k);
    let mut xs: Vec<f64> = sa.iter().chain(&sb).copied().collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let per_point: Vec<ThetaPoint> = xs
        .iter()
        .filter_map(|&x| {
            let (p_a, p_b) = (ecdf(&sa, x), ecdf(&sb, x));
            let inside = |p: f64| lo <= p && p <= hi;
            (inside(p_a) && inside(p_b)).then(|| ThetaPoint { x, p_a, p_b, log_ratio: p_a.ln() / p_b.ln() })
        })
        .collect();
    if per_point.len() < MIN_ADMISSIBLE_POINTS {
        return Err(Error::Estimation(format!(
            "only {} evaluation points have both probabilities in [{lo}, {hi}] (need {MIN_ADMISSIBLE_POINTS}); \
             widen the band or increase replicas",
            per_point.len()
        )));
    }
    let mut ratios: Vec<f64> = per_point.iter().map(|p| p.log_ratio).collect();
    ratios.sort_by(f64::total_cmp);
    let m = ratios.len();
    let theta_hat = if m % 2 == 1 { ratios[m / 2] } else { 0.5 * (ratios[m / 2 - 1] + ratios[m / 2]) };
    Ok(ThetaEstimate {
        theta_hat,
        valid_fraction: per_point.len() as f64 / xs.len() as f64,
        per_point,
        n,
        replicas_a: a.replicas(),
        replicas_b: b.replicas(),
    })
}

/// Limit of `P(M'_n <= v_n)` when `P(M_n <= v_n) -> alpha` and the pair has
/// relative index `theta`.
pub fn theta_quantile_transfer(theta: f64, alpha: f64) -> f64 {
    alpha.powf(1.0 / theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirics::{MonteCarlo, Provenance};
    use crate::models::{ChainModel, Distribution, Start};
    use proptest::prelude::*;

    fn matrix(rows: Vec<f64>) -> MaxSampleMatrix {
        let prov = Provenance { model_id: "t".into(), start: "stationary".into(), root_seed: 0 };
        MaxSampleMatrix::from_rows(vec![5], rows.into_iter().map(|v| vec![v]).collect(), prov).unwrap()
    }

    fn pair(seed: u64, replicas: usize) -> (MaxSampleMatrix, MaxSampleMatrix) {
        let engine = MonteCarlo::new(None).unwrap();
        let dist = Distribution::Exponential { rate: 1.0 };
        let a = ChainModel::iid_block_maxima(dist.clone(), 2).unwrap();
        let b = ChainModel::iid(dist).unwrap();
        (
            engine.run(&a, Start::Stationary, &[100], replicas, seed).unwrap(),
            engine.run(&b, Start::Stationary, &[100], replicas, seed + 1).unwrap(),
        )
    }

    #[test]
    fn transfer_examples() {
        assert_eq!(theta_quantile_transfer(1.0, 0.3), 0.3);
        assert!((theta_quantile_transfer(2.0, (-1.0f64).exp()) - 0.6065306597126334).abs() < 1e-15);
        assert!((theta_quantile_transfer(0.5, 0.25) - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn identical_samples_give_exactly_one() {
        let a = matrix((0..500).map(|i| ((i * 37) % 500) as f64).collect());
        let est = estimate_theta(&a, &a, 0, DEFAULT_BAND).unwrap();
        assert_eq!(est.theta_hat, 1.0);
        assert!(est.per_point.iter().all(|p| p.log_ratio == 1.0));
        assert!(est.valid_fraction > 0.85 && est.valid_fraction <= 1.0);
    }

    #[test]
    fn pairwise_maxima_recover_two_and_symmetry() {
        let (a, b) = pair(11, 100_000);
        let ab = estimate_theta(&a, &b, 0, DEFAULT_BAND).unwrap();
        let ba = estimate_theta(&b, &a, 0, DEFAULT_BAND).unwrap();
        assert!((ab.theta_hat - 2.0).abs() < 0.15, "{}", ab.theta_hat);
        let prod = ab.theta_hat * ba.theta_hat;
        assert!((0.97..=1.03).contains(&prod), "{prod}");
    }

    #[test]
    fn too_few_points_is_an_error() {
        let a = matrix((0..100).map(f64::from).collect());
        let b = matrix((1000..1100).map(f64::from).collect());
        let err = estimate_theta(&a, &b, 0, DEFAULT_BAND).unwrap_err().to_string();
        assert!(err.contains("increase replicas"), "{err}");
        assert!(estimate_theta(&a, &a, 1, DEFAULT_BAND).is_err());
        assert!(estimate_theta(&a, &a, 0, (0.5, 0.2)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn increasing_transforms_leave_theta_unchanged(
            xa in proptest::collection::vec(0.0f64..10.0, 200..400),
            xb in proptest::collection::vec(0.0f64..10.0, 200..400),
        ) {
            let f = |x: f64| (x * 0.7).exp() + x.powi(3);
            let a = matrix(xa.clone());
            let b = matrix(xb.clone());
            let ta = matrix(xa.into_iter().map(f).collect());
            let tb = matrix(xb.into_iter().map(f).collect());
            match (estimate_theta(&a, &b, 0, DEFAULT_BAND), estimate_theta(&ta, &tb, 0, DEFAULT_BAND)) {
                (Ok(p), Ok(q)) => prop_assert_eq!(p.theta_hat, q.theta_hat),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "admissibility changed under a monotone map"),
            }
        }

        #[test]
        fn self_estimate_is_one(xs in proptest::collection::vec(-5.0f64..5.0, 100..300)) {
            let a = matrix(xs);
            prop_assert_eq!(estimate_theta(&a, &a, 0, DEFAULT_BAND).unwrap().theta_hat, 1.0);
        }
    }
}
