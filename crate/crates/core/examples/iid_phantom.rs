//! For an i.i.d. sequence the marginal itself is a phantom: the empirical df
//! of M_n sits close to F^n in sup norm.

use phantom_lab::empirics::{sup_distance, MonteCarlo};
use phantom_lab::models::{ChainModel, Distribution, Start, StationaryMarginal};

fn main() -> phantom_lab::Result<()> {
    let dist = Distribution::StudentT { nu: 3.0 };
    let model = ChainModel::iid(dist.clone())?;
    let marginal = StationaryMarginal { dist, block: 1 };
    let horizons = [10, 100, 1000];
    let m = MonteCarlo::new(None)?.run(&model, Start::Stationary, &horizons, 5_000, 3)?;
    for (k, &n) in horizons.iter().enumerate() {
        let d = sup_distance(&m.empirical_max_df(k)?, 1, &marginal, n);
        println!("n = {n:>4}: sup |P(M_n <= x) - F(x)^n| = {d:.4}");
    }
    Ok(())
}
