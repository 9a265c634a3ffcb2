//! Exact maximum distributions of a finite chain against Monte Carlo estimates.

use phantom_lab::empirics::MonteCarlo;
use phantom_lab::models::{ChainModel, Start};
use phantom_lab::oracle::{exact_quenched_gap, stationary_distribution, FiniteChain};

fn main() -> phantom_lab::Result<()> {
    let p = vec![vec![0.9, 0.1], vec![0.2, 0.8]];
    let values = vec![0.0, 1.0];
    println!("stationary law: {:?}", stationary_distribution(&p)?);

    let exact = FiniteChain::stationary(p.clone(), values.clone())?;
    let model = ChainModel::finite(p, values)?;
    let horizons = [1, 3, 10, 30];
    let m = MonteCarlo::new(None)?.run(&model, Start::Stationary, &horizons, 100_000, 11)?;
    println!("{:>4} {:>10} {:>10}", "n", "exact", "estimate");
    for (k, &n) in horizons.iter().enumerate() {
        println!("{n:>4} {:>10.5} {:>10.5}", exact.exact_max_cdf(n, 0.5)?, m.fraction_at_most(k, 0.5));
    }
    for n in [1, 5, 25] {
        println!("gap from state 0 at n = {n}: {:.5}", exact_quenched_gap(&exact, 0, n, &[0.5])?);
    }
    Ok(())
}
