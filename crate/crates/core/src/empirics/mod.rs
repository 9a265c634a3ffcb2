//! The Monte Carlo engine: replicated simulation, empirical max distribution
//! functions and exact sup-norm distances between distribution functions.

mod df;
mod engine;
mod extremal;
mod samples;

pub use df::{ks_statistic, sup_distance, DistributionFunction, StepDf};
pub(crate) use df::pow;
pub use engine::{geometric_checkpoints, MonteCarlo};
pub use extremal::{extremal_index_zero_check, ExtremalZeroPoint};
pub use samples::{MaxSampleMatrix, Provenance, SampleCache};

/// Empirical df of the running maximum at checkpoint index `k`.
pub fn empirical_max_df(samples: &MaxSampleMatrix, k: usize) -> crate::Result<StepDf> {
    samples.empirical_max_df(k)
}
