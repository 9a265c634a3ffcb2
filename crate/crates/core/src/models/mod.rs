//! Chain models and the density toolkit they are built from.

mod chain;
mod density;
mod distribution;

pub use chain::{validate_checkpoints, ChainModel, ModelSpec, Start, StationaryMarginal};
pub(crate) use chain::hex_prefix;
pub use density::{lindley_step, metropolis_acceptance, metropolis_step, ProposalDensity, TargetDensity};
pub use distribution::{Distribution, TABLE_MASS_TOLERANCE};
