use super::super::empirics::MonteCarlo;
use crate::error::{Error, Result};
use crate::oracle::{stationary_distribution, FiniteChain};
use crate::rng::{replica_rng, unit_open};

/// Meeting attempts before a coupling run is declared failed.
pub const COUPLING_STEP_LIMIT: u64 = 10_000_000;

/// Meeting times of a stationary copy and a copy started at `s`, moving
/// independently until they share a state.
///
/// `tau = 1` when the copies already agree at time 0.
pub fn coupling_time_samples(
    engine: &MonteCarlo,
    chain: &FiniteChain,
    s: usize,
    replicas: usize,
    seed: u64,
) -> Result<Vec<u64>> {
    let pi = stationary_distribution(chain.transition())?;
    if s >= chain.len() {
        return Err(Error::Chain(format!("start state {s} out of range for {} states", chain.len())));
    }
    let cum = |row: &[f64]| -> Vec<f64> {
        let mut acc = 0.0;
        row.iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect()
    };
    let rows: Vec<Vec<f64>> = chain.transition().iter().map(|r| cum(r)).collect();
    let pi = cum(&pi);
    let pick = |c: &[f64], u: f64| c.partition_point(|&x| x < u).min(c.len() - 1);
    engine.map_replicas(replicas, |r| {
        let mut rng = replica_rng(seed, r);
        let mut stationary = pick(&pi, unit_open(&mut rng));
        let mut point = s;
        let mut tau = 1;
        while stationary != point {
            if tau >= COUPLING_STEP_LIMIT {
                return Err(Error::Diagnostic(format!(
                    "copies of the {}-state chain did not meet within {COUPLING_STEP_LIMIT} steps",
                    chain.len()
                )));
            }
            stationary = pick(&rows[stationary], unit_open(&mut rng));
            point = pick(&rows[point], unit_open(&mut rng));
            tau += 1;
        }
        Ok(tau)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean(xs: &[u64]) -> f64 {
        xs.iter().sum::<u64>() as f64 / xs.len() as f64
    }

    #[test]
    fn single_state_couples_immediately() {
        let c = FiniteChain::new(vec![vec![1.0]], vec![0.0], vec![1.0]).unwrap();
        let engine = MonteCarlo::new(Some(1)).unwrap();
        assert!(coupling_time_samples(&engine, &c, 0, 50, 1).unwrap().iter().all(|&t| t == 1));
    }

    #[test]
    fn fair_coin_is_geometric_half() {
        let c = FiniteChain::new(vec![vec![0.5, 0.5]; 2], vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        let engine = MonteCarlo::new(None).unwrap();
        let taus = coupling_time_samples(&engine, &c, 0, 10_000, 2).unwrap();
        assert!((mean(&taus) - 2.0).abs() < 0.05, "{}", mean(&taus));
        let ones = taus.iter().filter(|&&t| t == 1).count() as f64 / 1e4;
        assert!((ones - 0.5).abs() < 0.02);
    }

    #[test]
    fn iid_rows_meet_at_collision_rate() {
        let lambda = vec![0.6, 0.3, 0.1];
        let c = FiniteChain::new(vec![lambda.clone(); 3], vec![0.0, 1.0, 2.0], lambda.clone()).unwrap();
        let engine = MonteCarlo::new(None).unwrap();
        let taus = coupling_time_samples(&engine, &c, 2, 20_000, 3).unwrap();
        // From the second comparison on, each step meets with probability sum(lambda_i^2) = 0.46;
        // the first comparison meets with probability lambda(2) = 0.1.
        let q: f64 = lambda.iter().map(|p| p * p).sum();
        let expect = 1.0 + 0.9 / q;
        assert!((mean(&taus) - expect).abs() < 0.05, "{} vs {expect}", mean(&taus));
    }

    #[test]
    fn periodic_chain_is_rejected() {
        let c = FiniteChain::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        let engine = MonteCarlo::new(Some(1)).unwrap();
        assert!(coupling_time_samples(&engine, &c, 0, 10, 1).is_err());
    }
}
