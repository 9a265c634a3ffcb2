//! Level sequences, the step phantom they define, and its continuous version.

use phantom_lab::empirics::{DistributionFunction, MonteCarlo};
use phantom_lab::models::{ChainModel, Distribution, Start, StationaryMarginal};
use phantom_lab::phantom::{continuize, levels_from_df, levels_from_samples, phantom_from_levels, regularity_ratios};

fn main() -> phantom_lab::Result<()> {
    let dist = Distribution::Exponential { rate: 1.0 };
    let horizons: Vec<u64> = (1..=8).map(|k| 1 << k).collect();

    let exact = levels_from_df(&StationaryMarginal { dist: dist.clone(), block: 1 }, 1.0, &horizons)?;
    let model = ChainModel::iid(dist)?;
    let samples = MonteCarlo::new(None)?.run(&model, Start::Stationary, &horizons, 20_000, 5)?;
    let estimated = levels_from_samples(&samples, 1.0)?;
    println!("{:>5} {:>10} {:>10}", "n", "v_n", "v_n est");
    for ((n, a), b) in horizons.iter().zip(exact.levels()).zip(estimated.levels()) {
        println!("{n:>5} {a:>10.4} {b:>10.4}");
    }

    let g = phantom_from_levels(&exact)?;
    for (&n, &v) in exact.horizons().iter().zip(exact.levels()) {
        assert!((g.value(v).powi(n as i32) - (-1.0f64).exp()).abs() < 1e-12);
    }
    let h = continuize(&g)?;
    let mid = 0.5 * (exact.levels()[2] + exact.levels()[3]);
    println!("step G({mid:.3}) = {:.5}, continuous H({mid:.3}) = {:.5}", g.value(mid), h.value(mid));
    if let Some(r) = regularity_ratios(&g).tail_ratio() {
        println!("tail regularity ratio at the last level: {r:.5}");
    }
    Ok(())
}
