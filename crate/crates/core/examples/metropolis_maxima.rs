//! Running maxima of a random walk Metropolis chain with a Pareto(1) target,
//! started in stationarity, compared with i.i.d. draws from the same law.

use phantom_lab::empirics::MonteCarlo;
use phantom_lab::models::{ChainModel, Distribution, ProposalDensity, Start, TargetDensity};

fn main() -> phantom_lab::Result<()> {
    let engine = MonteCarlo::new(None)?;
    let target = TargetDensity::pareto(1.0, 1.0)?;
    let chain = ChainModel::metropolis(target, ProposalDensity::Gaussian { sigma: 1.0 })?;
    let iid = ChainModel::iid(Distribution::Pareto { alpha: 1.0, x_min: 1.0 })?;
    let horizons = [10, 100, 1000];

    let mh = engine.run(&chain, Start::Stationary, &horizons, 2000, 1)?;
    let ind = engine.run(&iid, Start::Stationary, &horizons, 2000, 2)?;
    println!("{:>6} {:>14} {:>14}", "n", "median M_n mh", "median M_n iid");
    for (k, n) in horizons.iter().enumerate() {
        let (a, b) = (mh.sorted_column(k), ind.sorted_column(k));
        println!("{n:>6} {:>14.2} {:>14.2}", a[a.len() / 2], b[b.len() / 2]);
    }

    // One trajectory from a fixed point, same seed twice: identical output.
    let a = chain.simulate_running_maxima(Start::Point(5.0), &horizons, 7)?;
    let b = chain.simulate_running_maxima(Start::Point(5.0), &horizons, 7)?;
    assert_eq!(a, b);
    println!("point start 5.0, seed 7: {a:?}");
    Ok(())
}
