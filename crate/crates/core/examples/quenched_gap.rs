//! Point-started chains against the phantom calibrated under the stationary
//! start, with the bad-set flags and coupling times of a finite chain.

use phantom_lab::empirics::MonteCarlo;
use phantom_lab::models::{ChainModel, Start};
use phantom_lab::oracle::FiniteChain;
use phantom_lab::phantom::{calibrate_phantom, quantile_grid_betas};
use phantom_lab::quenched::{bad_set_closure, coupling_time_samples, quenched_gap_curve};

fn main() -> phantom_lab::Result<()> {
    let engine = MonteCarlo::new(None)?;
    let p = vec![vec![0.6, 0.3, 0.1], vec![0.3, 0.4, 0.3], vec![0.1, 0.3, 0.6]];
    let values = vec![0.0, 1.0, 2.0];
    let model = ChainModel::finite(p.clone(), values.clone())?;
    let horizons = [2, 8, 32, 128];

    let cal = engine.run(&model, Start::Stationary, &[128], 20_000, 1)?;
    let phantom = calibrate_phantom(&cal, &quantile_grid_betas(200))?.step;
    let starts = [Start::State(0), Start::State(2)];
    let report = quenched_gap_curve(&engine, &model, &starts, &horizons, 20_000, 2, &phantom)?;
    for s in report.summaries() {
        println!("start {}: gap {:.4} -> {:.4}, decayed {}", s.start, s.initial_gap, s.terminal_gap, s.decayed);
    }
    println!("stationary reference: {:.4?}", report.stationary_gap);

    // Truncating at the top value puts state 2 in the bad set; every state reaches it.
    println!("S0 with G* = 2: {:?}", bad_set_closure(&p, &values, 2.0));

    let chain = FiniteChain::stationary(p, values)?;
    for s in 0..3 {
        let taus = coupling_time_samples(&engine, &chain, s, 10_000, 3)?;
        let mean = taus.iter().sum::<u64>() as f64 / taus.len() as f64;
        println!("coupling from state {s}: mean tau {mean:.3}, max {}", taus.iter().max().unwrap_or(&0));
    }
    Ok(())
}
