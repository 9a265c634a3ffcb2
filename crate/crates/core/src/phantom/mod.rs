//! Phantom distribution functions built from calibrated level sequences.

mod construct;
mod levels;
mod obrien;

pub use construct::{
    calibrate_phantom, continuize, phantom_from_level_family, phantom_from_levels, write_df_csv, LogLinearDf,
    quantile_grid_betas, PhantomCalibration, DEFAULT_CALIBRATION_GRID,
};
pub use levels::{levels_from_df, levels_from_samples, LevelSequence, LevelSource, MIN_CALIBRATION_REPLICAS};
pub use obrien::{
    obrien_checkpoints, regularity_ratios, scaled_horizon, verify_obrien, write_obrien_csv, ObrienRow, Regularity,
};

/// Default calibration mass.
pub const DEFAULT_BETA: f64 = 1.0;
