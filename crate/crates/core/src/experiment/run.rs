use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, ExperimentKind, PhantomShape};
use super::fmt_float;
use crate::empirics::{extremal_index_zero_check, MonteCarlo, StepDf};
use crate::error::Result;
use crate::models::{hex_prefix, ChainModel, ModelSpec, Start};
use crate::oracle::FiniteChain;
use crate::phantom::{
    calibrate_phantom, continuize, levels_from_samples, obrien_checkpoints, phantom_from_levels, verify_obrien,
    write_df_csv, write_obrien_csv,
};
use crate::quenched::{bad_set_closure, coupling_time_samples, quenched_gap_curve};
use crate::relext::{estimate_theta, theta_quantile_transfer};
use crate::rng::derive_seed;

/// Default output root when neither the config nor the caller names one.
pub const DEFAULT_OUTPUT: &str = "results";

/// Where a finished experiment was written.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub dir: PathBuf,
    /// File names inside `dir`, `manifest.json` last.
    pub files: Vec<String>,
}

type Artifacts = Vec<(String, Vec<u8>)>;

/// Validates `config`, runs it and writes its artifacts to
/// `<output>/<kind>/<config hash>/`.
///
/// Files are assembled in a sibling scratch directory and moved into place only
/// when every artifact has been produced; a failed run leaves nothing behind.
/// An earlier result for the same configuration is replaced.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutcome> {
    config.validate()?;
    let kind = config.kind.expect("validated");
    let engine = MonteCarlo::new(config.workers)?;
    let root = config.output.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT));
    let parent = root.join(kind.as_str());
    let hash = config.content_hash();
    let dir = parent.join(&hash);
    let scratch = parent.join(format!(".{hash}.partial"));
    fs::create_dir_all(&parent)?;
    if scratch.exists() {
        fs::remove_dir_all(&scratch)?;
    }
    fs::create_dir(&scratch)?;
    let written = produce(config, kind, &engine)
        .and_then(|artifacts| write_artifacts(&scratch, config, &engine, &hash, artifacts));
    match written {
        Ok(files) => {
            if dir.exists() {
                fs::remove_dir_all(&dir)?;
            }
            fs::rename(&scratch, &dir)?;
            Ok(RunOutcome { dir, files })
        }
        Err(e) => {
            let _ = fs::remove_dir_all(&scratch);
            Err(e)
        }
    }
}

fn write_artifacts(
    dir: &Path,
    config: &ExperimentConfig,
    engine: &MonteCarlo,
    hash: &str,
    artifacts: Artifacts,
) -> Result<Vec<String>> {
    let mut digests = serde_json::Map::new();
    let mut names = Vec::with_capacity(artifacts.len() + 1);
    for (name, bytes) in &artifacts {
        fs::write(dir.join(name), bytes)?;
        digests.insert(name.clone(), json!(hex_prefix(&Sha256::digest(bytes), 32)));
        names.push(name.clone());
    }
    let manifest = json!({
        "kind": config.kind,
        "config_hash": hash,
        "seed": config.seed,
        "config": config,
        "workers": engine.workers(),
        "artifact": { "name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION") },
        "files": digests,
    });
    fs::write(dir.join("manifest.json"), to_json_bytes(&manifest))?;
    names.push("manifest.json".into());
    Ok(names)
}

fn to_json_bytes(v: &serde_json::Value) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("json serializes");
    out.push(b'\n');
    out
}

fn produce(config: &ExperimentConfig, kind: ExperimentKind, engine: &MonteCarlo) -> Result<Artifacts> {
    let model = ChainModel::new(config.model.clone())?;
    let seed = config.seed.expect("validated");
    match kind {
        ExperimentKind::Calibrate => calibrate(config, &model, engine, seed),
        ExperimentKind::Obrien => obrien(config, &model, engine, seed),
        ExperimentKind::Quenched => quenched(config, &model, engine, seed),
        ExperimentKind::Relext => relext(config, &model, engine, seed),
        ExperimentKind::OracleCheck => oracle_check(config, &model, engine, seed),
        ExperimentKind::ExtremalZero => extremal_zero(config, &model, engine, seed),
    }
}

fn calibrate(config: &ExperimentConfig, model: &ChainModel, engine: &MonteCarlo, seed: u64) -> Result<Artifacts> {
    let samples =
        engine.run(model, Start::Stationary, &config.horizons, config.replicas, derive_seed(seed, "calibration"))?;
    let levels = levels_from_samples(&samples, config.beta)?;
    let g = phantom_from_levels(&levels)?;
    let mut levels_csv = Vec::new();
    levels.write_csv(&mut levels_csv)?;
    Ok(vec![("levels.csv".into(), levels_csv), ("phantom.csv".into(), step_csv(&g)?)])
}

fn step_csv(g: &StepDf) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    write_df_csv(&mut out, g.jumps().iter().copied().zip(g.values().iter().copied()))?;
    Ok(out)
}

fn obrien(config: &ExperimentConfig, model: &ChainModel, engine: &MonteCarlo, seed: u64) -> Result<Artifacts> {
    let calibration =
        engine.run(model, Start::Stationary, &config.horizons, config.replicas, derive_seed(seed, "calibration"))?;
    let levels = levels_from_samples(&calibration, config.beta)?;
    let grid = obrien_checkpoints(&config.horizons, &config.t_grid);
    let check = engine.run(model, Start::Stationary, &grid, config.replicas, derive_seed(seed, "obrien"))?;
    let rows = verify_obrien(&check, &levels, &config.t_grid)?;
    let (mut levels_csv, mut obrien_csv) = (Vec::new(), Vec::new());
    levels.write_csv(&mut levels_csv)?;
    write_obrien_csv(&rows, &mut obrien_csv)?;
    Ok(vec![("levels.csv".into(), levels_csv), ("obrien.csv".into(), obrien_csv)])
}

fn quenched(config: &ExperimentConfig, model: &ChainModel, engine: &MonteCarlo, seed: u64) -> Result<Artifacts> {
    let starts = config.starts(model)?;
    // Calibrated at the largest horizon only: at desk scale P(M_n <= x)^(1/n)
    // still drifts with n, and merging nodes across horizons distorts G.
    let n_max = *config.horizons.last().expect("validated");
    let calibration =
        engine.run(model, Start::Stationary, &[n_max], config.replicas, derive_seed(seed, "calibration"))?;
    let cal = calibrate_phantom(&calibration, &config.calibration_betas())?;
    let step = match config.truncate_at {
        Some(g) => cal.step.truncated_at(g)?,
        None => cal.step,
    };
    let gap_seed = derive_seed(seed, "quenched");
    let (phantom_csv, report) = match config.phantom {
        PhantomShape::Smooth => {
            let h = continuize(&step)?;
            let mut csv = Vec::new();
            h.write_csv(&mut csv)?;
            let r = quenched_gap_curve(engine, model, &starts, &config.horizons, config.replicas, gap_seed, &h)?;
            (csv, r)
        }
        PhantomShape::Step => {
            let r = quenched_gap_curve(engine, model, &starts, &config.horizons, config.replicas, gap_seed, &step)?;
            (step_csv(&step)?, r)
        }
    };
    let mut summary = report.summary_json();
    if let ModelSpec::Finite { transition, values } = &config.model {
        summary["finite"] = finite_diagnostics(config, engine, seed, transition, values, report.g_star, &starts)?;
    }
    let mut quenched_csv = Vec::new();
    report.write_csv(&mut quenched_csv)?;
    Ok(vec![
        ("phantom.csv".into(), phantom_csv),
        ("quenched.csv".into(), quenched_csv),
        ("quenched.json".into(), to_json_bytes(&summary)),
    ])
}

/// Exact `S_0` membership and coupling-time summaries for finite chains.
fn finite_diagnostics(
    config: &ExperimentConfig,
    engine: &MonteCarlo,
    seed: u64,
    transition: &[Vec<f64>],
    values: &[f64],
    g_star: f64,
    starts: &[Start],
) -> Result<serde_json::Value> {
    let s0 = bad_set_closure(transition, values, g_star);
    let chain = FiniteChain::stationary(transition.to_vec(), values.to_vec())?;
    let replicas = config.coupling_replicas.unwrap_or(config.replicas.min(10_000));
    let mut coupling = Vec::new();
    for &start in starts {
        let Start::State(s) = start else { continue };
        let taus = coupling_time_samples(engine, &chain, s, replicas, derive_seed(seed, &format!("coupling/{s}")))?;
        let mean = taus.iter().sum::<u64>() as f64 / taus.len() as f64;
        coupling.push(json!({
            "start": start.to_string(),
            "in_s0": s0[s],
            "mean_tau": mean,
            "max_tau": taus.iter().max(),
        }));
    }
    Ok(json!({ "s0": s0, "coupling_replicas": replicas, "coupling": coupling }))
}

fn relext(config: &ExperimentConfig, model: &ChainModel, engine: &MonteCarlo, seed: u64) -> Result<Artifacts> {
    let companion = ChainModel::new(config.companion.clone().expect("validated"))?;
    let a = engine.run(model, Start::Stationary, &config.horizons, config.replicas, derive_seed(seed, "relext/a"))?;
    let b = engine.run(&companion, Start::Stationary, &config.horizons, config.replicas, derive_seed(seed, "relext/b"))?;
    let levels = levels_from_samples(&a, config.beta)?;
    let alpha = (-config.beta).exp();
    let band = (config.band[0], config.band[1]);
    let mut per_horizon = Vec::new();
    let mut last = None;
    for (k, &n) in config.horizons.iter().enumerate() {
        let est = estimate_theta(&a, &b, k, band)?;
        let v = levels.levels()[k];
        let predicted = theta_quantile_transfer(est.theta_hat, alpha);
        let empirical = b.fraction_at_most(k, v);
        let mut entry = est.summary_json();
        entry["transfer"] = json!({
            "alpha": alpha,
            "level": v,
            "predicted": predicted,
            "empirical": empirical,
            "abs_error": (predicted - empirical).abs(),
        });
        debug_assert_eq!(est.n, n);
        per_horizon.push(entry);
        last = Some(est);
    }
    let last = last.expect("horizons non-empty");
    let mut theta = per_horizon.last().cloned().expect("horizons non-empty");
    theta["per_horizon"] = json!(per_horizon);
    let mut points = Vec::new();
    last.write_points_csv(&mut points)?;
    Ok(vec![("theta.json".into(), to_json_bytes(&theta)), ("theta_points.csv".into(), points)])
}

fn oracle_check(config: &ExperimentConfig, model: &ChainModel, engine: &MonteCarlo, seed: u64) -> Result<Artifacts> {
    let ModelSpec::Finite { transition, values } = &config.model else { unreachable!("validated") };
    let stationary = FiniteChain::stationary(transition.clone(), values.clone())?;
    let mut grid = values.clone();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut starts = vec![Start::Stationary];
    starts.extend(config.start_states.iter().map(|&i| Start::State(i)));
    let mut csv = Vec::new();
    csv.extend_from_slice(b"start,n,x,estimate,exact,abs_error\n");
    let mut max_err: f64 = 0.0;
    for start in starts {
        let chain = match start {
            Start::State(s) => stationary.started_at(s)?,
            _ => stationary.clone(),
        };
        let label = format!("oracle/{start}");
        let m = engine.run(model, start, &config.horizons, config.replicas, derive_seed(seed, &label))?;
        for (k, &n) in config.horizons.iter().enumerate() {
            for &x in &grid {
                let est = m.fraction_at_most(k, x);
                let exact = chain.exact_max_cdf(n, x)?;
                let err = (est - exact).abs();
                max_err = max_err.max(err);
                let line = format!("{start},{n},{},{},{},{}\n", fmt_float(x), fmt_float(est), fmt_float(exact), fmt_float(err));
                csv.extend_from_slice(line.as_bytes());
            }
        }
    }
    let summary = json!({ "max_abs_error": max_err, "replicas": config.replicas, "horizons": config.horizons });
    Ok(vec![("oracle.csv".into(), csv), ("oracle.json".into(), to_json_bytes(&summary))])
}

fn extremal_zero(config: &ExperimentConfig, model: &ChainModel, engine: &MonteCarlo, seed: u64) -> Result<Artifacts> {
    let points = extremal_index_zero_check(engine, model, config.tau, &config.horizons, config.replicas, seed)?;
    let mut csv = b"n,level,estimate,iid_reference\n".to_vec();
    for p in &points {
        let line = format!("{},{},{},{}\n", p.n, fmt_float(p.level), fmt_float(p.estimate), fmt_float(p.iid_reference));
        csv.extend_from_slice(line.as_bytes());
    }
    Ok(vec![("extremal_zero.csv".into(), csv)])
}

