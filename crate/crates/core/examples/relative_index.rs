//! Relative extremal index of pairwise maxima against their i.i.d. parent
//! sequence; the true value is 2.

use phantom_lab::empirics::MonteCarlo;
use phantom_lab::models::{ChainModel, Distribution, Start};
use phantom_lab::relext::{estimate_theta, theta_quantile_transfer, DEFAULT_BAND};

fn main() -> phantom_lab::Result<()> {
    let engine = MonteCarlo::new(None)?;
    let dist = Distribution::Exponential { rate: 1.0 };
    let pairs = ChainModel::iid_block_maxima(dist.clone(), 2)?;
    let single = ChainModel::iid(dist)?;
    let a = engine.run(&pairs, Start::Stationary, &[100], 20_000, 1)?;
    let b = engine.run(&single, Start::Stationary, &[100], 20_000, 2)?;

    let ab = estimate_theta(&a, &b, 0, DEFAULT_BAND)?;
    let ba = estimate_theta(&b, &a, 0, DEFAULT_BAND)?;
    println!("theta(a, b) = {:.4} from {} points ({:.0}% admissible)", ab.theta_hat, ab.per_point.len(), 100.0 * ab.valid_fraction);
    println!("theta(b, a) = {:.4}, product {:.4}", ba.theta_hat, ab.theta_hat * ba.theta_hat);
    println!("alpha = e^-1 transfers to {:.4}", theta_quantile_transfer(ab.theta_hat, (-1.0f64).exp()));
    Ok(())
}
