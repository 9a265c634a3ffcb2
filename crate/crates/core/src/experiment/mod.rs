//! Declarative experiment runner: TOML configuration in, report files out.

mod config;
mod plot;
mod run;

pub use config::{ExperimentConfig, ExperimentKind, PhantomShape, DEFAULT_START_QUANTILES};
pub use plot::{plot_data_export, PLOT_INPUTS};
pub use run::{run_experiment, RunOutcome, DEFAULT_OUTPUT};

/// Float formatting shared by every CSV writer: 17 significant digits, `.` decimal.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}
