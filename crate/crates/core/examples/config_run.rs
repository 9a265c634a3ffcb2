//! Runs an experiment from a TOML file and exports plot tables.
//!
//! `cargo run --example config_run -- configs/quenched_finite.toml [out-dir]`

use std::path::PathBuf;

use phantom_lab::experiment::{plot_data_export, run_experiment, ExperimentConfig};

fn main() -> phantom_lab::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = PathBuf::from(args.next().unwrap_or_else(|| {
        concat!(env!("CARGO_MANIFEST_DIR"), "/configs/quenched_finite.toml").to_string()
    }));
    let mut config = ExperimentConfig::from_path(&path)?;
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("phantom-lab"));
    config.output = Some(out);
    let outcome = run_experiment(&config)?;
    println!("wrote {}", outcome.dir.display());
    for f in &outcome.files {
        println!("  {f}");
    }
    if let Ok(plots) = plot_data_export(&outcome.dir, &outcome.dir) {
        for p in plots {
            println!("  {}", p.display());
        }
    }
    Ok(())
}
