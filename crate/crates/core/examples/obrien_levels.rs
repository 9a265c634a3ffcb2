//! Calibrated levels v_n and the check P(M_[nt] <= v_n) ~ exp(-beta t).

use phantom_lab::empirics::MonteCarlo;
use phantom_lab::models::{ChainModel, ProposalDensity, Start, TargetDensity};
use phantom_lab::phantom::{levels_from_samples, obrien_checkpoints, verify_obrien};

fn main() -> phantom_lab::Result<()> {
    let engine = MonteCarlo::new(None)?;
    let model = ChainModel::metropolis(TargetDensity::pareto(1.0, 1.0)?, ProposalDensity::Gaussian { sigma: 1.0 })?;
    let n = [500];
    let t_grid = [0.5, 1.0, 2.0, 4.0];
    let levels = levels_from_samples(&engine.run(&model, Start::Stationary, &n, 4000, 1)?, 1.0)?;
    let check = engine.run(&model, Start::Stationary, &obrien_checkpoints(&n, &t_grid), 4000, 2)?;
    println!("{:>5} {:>4} {:>9} {:>9}", "n", "t", "estimate", "target");
    for row in verify_obrien(&check, &levels, &t_grid)? {
        println!("{:>5} {:>4} {:>9.4} {:>9.4}", row.n, row.t, row.estimate, row.target);
    }
    Ok(())
}
