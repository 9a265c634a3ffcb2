use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::models::{hex_prefix, ChainModel, ModelSpec, Start};
use crate::phantom::{quantile_grid_betas, DEFAULT_BETA, DEFAULT_CALIBRATION_GRID, MIN_CALIBRATION_REPLICAS};
use crate::relext::DEFAULT_BAND;

/// Target quantiles used as point starts when none are configured.
pub const DEFAULT_START_QUANTILES: [f64; 4] = [0.1, 0.5, 0.9, 0.999];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Calibrate,
    Obrien,
    Quenched,
    Relext,
    OracleCheck,
    ExtremalZero,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Calibrate,
        ExperimentKind::Obrien,
        ExperimentKind::Quenched,
        ExperimentKind::Relext,
        ExperimentKind::OracleCheck,
        ExperimentKind::ExtremalZero,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Calibrate => "calibrate",
            ExperimentKind::Obrien => "obrien",
            ExperimentKind::Quenched => "quenched",
            ExperimentKind::Relext => "relext",
            ExperimentKind::OracleCheck => "oracle_check",
            ExperimentKind::ExtremalZero => "extremal_zero",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    /// Accepts both `oracle_check` and `oracle-check` spellings.
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == norm)
            .ok_or_else(|| Error::Config(format!("unknown experiment kind {s:?}")))
    }
}

/// Which phantom the quenched experiment compares against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhantomShape {
    /// Log-linear interpolation of the calibrated step phantom.
    #[default]
    Smooth,
    /// The calibrated step phantom itself; natural for finite chains.
    Step,
}

/// One experiment, as read from a TOML file. Unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional here; the command line subcommand supplies it otherwise.
    #[serde(default)]
    pub kind: Option<ExperimentKind>,
    pub model: ModelSpec,
    /// Second sequence for `relext`: `theta` relates `model` to `companion`.
    #[serde(default)]
    pub companion: Option<ModelSpec>,
    pub horizons: Vec<u64>,
    pub replicas: usize,
    /// Mandatory, either here or as a command line override.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_t_grid")]
    pub t_grid: Vec<f64>,
    #[serde(default)]
    pub start_points: Vec<f64>,
    #[serde(default)]
    pub start_states: Vec<usize>,
    /// Point starts at these quantiles of the stationary marginal.
    #[serde(default)]
    pub start_quantiles: Option<Vec<f64>>,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default)]
    pub calibration_betas: Option<Vec<f64>>,
    /// Finite right end `G_*` imposed on the calibrated phantom.
    #[serde(default)]
    pub truncate_at: Option<f64>,
    #[serde(default)]
    pub phantom: PhantomShape,
    #[serde(default = "default_band")]
    pub band: [f64; 2],
    /// Replicas for the coupling-time diagnostic of finite chains (quenched only).
    #[serde(default)]
    pub coupling_replicas: Option<usize>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_beta() -> f64 {
    DEFAULT_BETA
}

fn default_t_grid() -> Vec<f64> {
    vec![0.5, 1.0, 2.0, 4.0]
}

fn default_tau() -> f64 {
    1.0
}

fn default_band() -> [f64; 2] {
    [DEFAULT_BAND.0, DEFAULT_BAND.1]
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        text.parse()
    }

    /// Every violated constraint, reported together.
    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        if self.kind.is_none() {
            v.push("experiment kind is missing".to_string());
        }
        if self.seed.is_none() {
            v.push("seed is mandatory (set `seed` or pass --seed)".into());
        }
        if self.replicas < MIN_CALIBRATION_REPLICAS {
            v.push(format!("replicas must be at least {MIN_CALIBRATION_REPLICAS}, got {}", self.replicas));
        }
        if self.horizons.is_empty() {
            v.push("horizons must not be empty".into());
        }
        if self.horizons.first() == Some(&0) {
            v.push("horizons must be at least 1".into());
        }
        if let Some(w) = self.horizons.windows(2).find(|w| w[0] >= w[1]) {
            v.push(format!("horizons must be strictly increasing ({} then {})", w[0], w[1]));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            v.push(format!("beta must be positive, got {}", self.beta));
        }
        if self.t_grid.is_empty() || self.t_grid.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            v.push("t_grid must be a non-empty list of positive numbers".into());
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            v.push(format!("tau must be positive, got {}", self.tau));
        }
        if let Some(betas) = &self.calibration_betas {
            if betas.is_empty() || betas.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
                v.push("calibration_betas must be a non-empty list of positive numbers".into());
            }
        }
        if let Some(qs) = &self.start_quantiles {
            if qs.iter().any(|q| !(*q > 0.0 && *q < 1.0)) {
                v.push("start_quantiles must lie in (0, 1)".into());
            }
        }
        let [lo, hi] = self.band;
        if !(0.0 < lo && lo < hi && hi < 1.0) {
            v.push(format!("band [{lo}, {hi}] must satisfy 0 < low < high < 1"));
        }
        if self.workers == Some(0) {
            v.push("workers must be at least 1".into());
        }
        if self.coupling_replicas == Some(0) {
            v.push("coupling_replicas must be at least 1".into());
        }
        let model = match ChainModel::new(self.model.clone()) {
            Ok(m) => Some(m),
            Err(e) => {
                v.push(format!("model: {e}"));
                None
            }
        };
        if let (Some(kind), Some(model)) = (self.kind, &model) {
            self.validate_for_kind(kind, model, &mut v);
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }

    fn validate_for_kind(&self, kind: ExperimentKind, model: &ChainModel, v: &mut Vec<String>) {
        let is_finite = matches!(self.model, ModelSpec::Finite { .. });
        let needs_stationary = !matches!(kind, ExperimentKind::OracleCheck);
        if needs_stationary && !model.has_stationary_sampler() {
            v.push(format!("{kind} needs a model with an exact stationary sampler"));
        }
        match kind {
            ExperimentKind::OracleCheck if !is_finite => v.push("oracle_check needs a finite model".into()),
            ExperimentKind::ExtremalZero if model.stationary_marginal().is_none() => {
                v.push("extremal_zero needs a model with a closed-form marginal (metropolis or iid)".into())
            }
            ExperimentKind::ExtremalZero => {
                if self.horizons.iter().any(|&n| n as f64 <= self.tau) {
                    v.push(format!("extremal_zero horizons must exceed tau = {}", self.tau));
                }
            }
            ExperimentKind::Relext => match &self.companion {
                None => v.push("relext needs a companion model".into()),
                Some(spec) => match ChainModel::new(spec.clone()) {
                    Ok(c) if !c.has_stationary_sampler() => {
                        v.push("companion model needs an exact stationary sampler".into())
                    }
                    Ok(_) => {}
                    Err(e) => v.push(format!("companion: {e}")),
                },
            },
            ExperimentKind::Quenched if self.starts(model).map_or(true, |s| s.is_empty()) => {
                v.push("quenched needs start points, start states or start quantiles".into())
            }
            _ => {}
        }
        if self.companion.is_some() && kind != ExperimentKind::Relext {
            v.push(format!("companion is only used by relext, not {kind}"));
        }
        if let Some(g) = self.truncate_at {
            if kind != ExperimentKind::Quenched || !g.is_finite() {
                v.push("truncate_at must be finite and applies to quenched only".into());
            }
        }
        if matches!(kind, ExperimentKind::Quenched | ExperimentKind::OracleCheck) {
            match self.starts(model) {
                Ok(starts) => {
                    for s in starts {
                        if let Err(e) = model.check_start(s) {
                            v.push(format!("start {s}: {e}"));
                        }
                    }
                }
                Err(e) => v.push(e.to_string()),
            }
        }
    }

    /// Point starts, state starts and quantile starts, in that order.
    ///
    /// With none configured, scalar models with a closed-form marginal fall
    /// back to [`DEFAULT_START_QUANTILES`].
    pub fn starts(&self, model: &ChainModel) -> Result<Vec<Start>> {
        let mut out: Vec<Start> = self.start_points.iter().map(|&x| Start::Point(x)).collect();
        out.extend(self.start_states.iter().map(|&i| Start::State(i)));
        let quantiles = match (&self.start_quantiles, out.is_empty()) {
            (Some(q), _) => q.clone(),
            (None, true) if model.stationary_marginal().is_some() => DEFAULT_START_QUANTILES.to_vec(),
            (None, _) => Vec::new(),
        };
        if !quantiles.is_empty() {
            let marginal = model
                .stationary_marginal()
                .ok_or_else(|| Error::Config("start_quantiles need a model with a closed-form marginal".into()))?;
            out.extend(quantiles.iter().map(|&q| Start::Point(marginal.quantile(q))));
        }
        Ok(out)
    }

    /// Configured masses, or a quantile grid no finer than the replica count allows.
    pub fn calibration_betas(&self) -> Vec<f64> {
        let k = DEFAULT_CALIBRATION_GRID.min(self.replicas);
        self.calibration_betas.clone().unwrap_or_else(|| quantile_grid_betas(k))
    }

    /// Content hash over everything that affects numeric output (not workers or output paths).
    pub fn content_hash(&self) -> String {
        let mut canon = self.clone();
        canon.workers = None;
        canon.output = None;
        let json = serde_json::to_vec(&canon).expect("config serializes");
        hex_prefix(&Sha256::digest(&json), 8)
    }
}
