//! P(M_n <= u_n(tau)) for the Pareto Metropolis chain stays far above the
//! i.i.d. limit exp(-tau): maxima grow more slowly than the marginal suggests.

use phantom_lab::empirics::{extremal_index_zero_check, MonteCarlo};
use phantom_lab::models::{ChainModel, Distribution, ProposalDensity, TargetDensity};

fn main() -> phantom_lab::Result<()> {
    let engine = MonteCarlo::new(None)?;
    let chain = ChainModel::metropolis(TargetDensity::pareto(1.0, 1.0)?, ProposalDensity::Gaussian { sigma: 1.0 })?;
    let iid = ChainModel::iid(Distribution::Pareto { alpha: 1.0, x_min: 1.0 })?;
    let horizons = [10, 100, 1000];
    let mh = extremal_index_zero_check(&engine, &chain, 1.0, &horizons, 4000, 1)?;
    let ind = extremal_index_zero_check(&engine, &iid, 1.0, &horizons, 4000, 2)?;
    println!("{:>5} {:>10} {:>10} {:>10} {:>10}", "n", "u_n", "metropolis", "iid", "limit");
    for (a, b) in mh.iter().zip(&ind) {
        println!("{:>5} {:>10.1} {:>10.4} {:>10.4} {:>10.4}", a.n, a.level, a.estimate, b.estimate, a.iid_reference);
    }
    Ok(())
}
