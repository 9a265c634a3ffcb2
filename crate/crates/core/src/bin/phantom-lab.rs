use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use phantom_lab::experiment::{plot_data_export, run_experiment, ExperimentConfig, ExperimentKind};

#[derive(Parser)]
#[command(name = "phantom-lab", version, about = "Phantom distribution function experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Level sequence and step phantom from stationary samples.
    Calibrate(RunArgs),
    /// Level criterion P(M_[nt] <= v_n) against exp(-beta t).
    Obrien(RunArgs),
    /// Point-start gaps against the stationary phantom.
    Quenched(RunArgs),
    /// Relative extremal index between the model and its companion.
    Relext(RunArgs),
    /// Monte Carlo against exact max distributions of a finite chain.
    OracleCheck(RunArgs),
    /// P(M_n <= u_n(tau)) against the i.i.d. limit.
    ExtremalZero(RunArgs),
    /// Long-format plot tables from a report directory.
    PlotData {
        report_dir: PathBuf,
        /// Defaults to the report directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output root; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn run(kind: ExperimentKind, args: RunArgs) -> phantom_lab::Result<()> {
    let mut config = ExperimentConfig::from_path(&args.config)?;
    if let Some(k) = config.kind.filter(|&k| k != kind) {
        return Err(phantom_lab::Error::Validation(vec![format!("config declares kind {k} but {kind} was requested")]));
    }
    config.kind = Some(kind);
    config.output = args.out.or(config.output);
    config.workers = args.workers.or(config.workers);
    config.seed = args.seed.or(config.seed);
    let outcome = run_experiment(&config)?;
    println!("{}", outcome.dir.display());
    for f in outcome.files {
        println!("  {f}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::Calibrate(a) => run(ExperimentKind::Calibrate, a),
        Command::Obrien(a) => run(ExperimentKind::Obrien, a),
        Command::Quenched(a) => run(ExperimentKind::Quenched, a),
        Command::Relext(a) => run(ExperimentKind::Relext, a),
        Command::OracleCheck(a) => run(ExperimentKind::OracleCheck, a),
        Command::ExtremalZero(a) => run(ExperimentKind::ExtremalZero, a),
        Command::PlotData { report_dir, out } => {
            plot_data_export(&report_dir, out.as_deref().unwrap_or(&report_dir)).map(|files| {
                for f in files {
                    println!("{}", f.display());
                }
            })
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
