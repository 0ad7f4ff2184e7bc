//! Configuration-driven experiments: database generation, solving,
//! strategy comparison, parameter sweeps and DTR service life.

mod commands;
mod output;

pub use commands::{
    service_life, Experiment, Instance, PlanRecord, SolveOutcome, SolveStrategy, StateOutcome, SweepAxis, TraceRecord,
};
pub use output::{
    AlphaRow, CompareRow, GenerateRow, GuaranteeCsvRow, LoadRow, PartitionRow, ServiceLifeRow, StageRow, StateRow,
    SurfaceRow,
};

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{BaselineError, StrategyKind, DEFAULT_LS_PASSES, DEFAULT_ONE_STAGE_K};
use crate::cascade::{CascadeError, InitiationMode, DEFAULT_D_MAX};
use crate::grid::{GridError, SystemState};
use crate::risk::{RiskError, RiskParams};
use crate::scg::GuaranteeMode;
use crate::submodular::SubmodularError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("numeric error: {0}")]
    Numeric(String),
}

impl ExperimentError {
    /// Process exit code for this failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 1,
            ExperimentError::Io { .. } => 2,
            ExperimentError::Numeric(_) => 3,
        }
    }

    pub(crate) fn io(path: impl AsRef<Path>, err: impl std::fmt::Display) -> Self {
        ExperimentError::Io { path: path.as_ref().to_path_buf(), message: err.to_string() }
    }
}

impl From<RiskError> for ExperimentError {
    fn from(e: RiskError) -> Self {
        ExperimentError::Numeric(e.to_string())
    }
}

impl From<SubmodularError> for ExperimentError {
    fn from(e: SubmodularError) -> Self {
        ExperimentError::Numeric(e.to_string())
    }
}

impl From<BaselineError> for ExperimentError {
    fn from(e: BaselineError) -> Self {
        ExperimentError::Numeric(e.to_string())
    }
}

impl From<GridError> for ExperimentError {
    fn from(e: GridError) -> Self {
        match e {
            GridError::Io { .. } | GridError::Parse { .. } | GridError::DimensionMismatch { .. } | GridError::Durations(_) => {
                ExperimentError::Config(e.to_string())
            }
            _ => ExperimentError::Numeric(e.to_string()),
        }
    }
}

impl From<CascadeError> for ExperimentError {
    fn from(e: CascadeError) -> Self {
        match e {
            CascadeError::Grid(g) => g.into(),
            CascadeError::Risk(r) => r.into(),
            CascadeError::Io { path, source } => ExperimentError::io(path, source),
            CascadeError::Format(_) | CascadeError::Version { .. } => ExperimentError::Io {
                path: PathBuf::new(),
                message: e.to_string(),
            },
            CascadeError::Invalid(m) => ExperimentError::Config(m),
        }
    }
}

/// One system state: uniform load and generation levels, optionally shaped
/// per bus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    #[serde(default = "one")]
    pub load: f64,
    #[serde(default = "one")]
    pub gen: f64,
    /// Fraction of the horizon spent in this state. Equal shares when every
    /// state leaves it out.
    #[serde(default)]
    pub duration: Option<f64>,
    #[serde(default)]
    pub load_profile: Option<Vec<f64>>,
    #[serde(default)]
    pub gen_profile: Option<Vec<f64>>,
}

/// First partition block: the `size` lines with the largest mean singleton
/// value, or an explicit list of line ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Size(usize),
    Lines(Vec<u32>),
}

impl Default for Partition {
    fn default() -> Self {
        Partition::Size(36)
    }
}

fn one() -> f64 {
    1.0
}
fn default_chains() -> usize {
    2000
}
fn default_d_max() -> usize {
    DEFAULT_D_MAX
}
fn default_k() -> usize {
    8
}
fn default_partition_sizes() -> Vec<usize> {
    vec![11, 15, 18, 21, 24, 27, 30, 33, 36, 38, 41, 45]
}
fn default_strategies() -> Vec<StrategyKind> {
    StrategyKind::ALL.to_vec()
}
fn default_alphas() -> Vec<f64> {
    vec![1.0, 1.03, 1.05, 1.07, 1.09, 1.11]
}
fn default_load_ratios() -> Vec<f64> {
    vec![1.02, 1.06]
}
fn default_one_stage_k() -> usize {
    DEFAULT_ONE_STAGE_K
}
fn default_lifetime() -> f64 {
    6.0
}
fn default_horizons() -> Vec<f64> {
    vec![2.0, 4.0]
}
fn default_ls_passes() -> usize {
    DEFAULT_LS_PASSES
}
fn default_seed() -> u64 {
    42
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_guarantee_mode() -> GuaranteeMode {
    GuaranteeMode::Estimated
}
fn default_surface_kappas() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}
fn default_surface_ps() -> Vec<f64> {
    (1..=5).map(|p| p as f64).collect()
}

/// Experiment description. Relative paths are resolved against the
/// directory of the configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub network: PathBuf,
    pub states: Vec<StateSpec>,
    #[serde(default = "default_chains")]
    pub chains_per_state: usize,
    #[serde(default = "default_d_max")]
    pub d_max: usize,
    #[serde(default)]
    pub initiation: InitiationMode,
    #[serde(default)]
    pub risk: RiskParams,
    #[serde(default = "default_k")]
    pub k: usize,
    pub k_c2: Vec<usize>,
    #[serde(default = "one")]
    pub p: f64,
    #[serde(default)]
    pub partition: Partition,
    #[serde(default = "default_partition_sizes")]
    pub partition_sizes: Vec<usize>,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<StrategyKind>,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_load_ratios")]
    pub load_ratios: Vec<f64>,
    #[serde(default = "default_one_stage_k")]
    pub one_stage_k: usize,
    #[serde(default = "default_lifetime")]
    pub lifetime_years: f64,
    #[serde(default = "default_horizons")]
    pub horizon_years: Vec<f64>,
    #[serde(default = "default_ls_passes")]
    pub ls_passes: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_guarantee_mode")]
    pub guarantee_mode: GuaranteeMode,
    #[serde(default = "default_surface_kappas")]
    pub surface_kappas: Vec<f64>,
    #[serde(default = "default_surface_ps")]
    pub surface_ps: Vec<f64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        let config: Self = serde_json::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a configuration and resolves its relative paths.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| ExperimentError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.network = base.join(&config.network);
        config.output_dir = base.join(&config.output_dir);
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        let m = self.states.len();
        if m == 0 {
            return bad("at least one state is required".into());
        }
        if self.k_c2.len() != m {
            return bad(format!("k_c2 has {} entries for {m} states", self.k_c2.len()));
        }
        if self.chains_per_state == 0 {
            return bad("chains_per_state must be positive".into());
        }
        if self.d_max == 0 {
            return bad("d_max must be positive".into());
        }
        if self.k == 0 {
            return bad("k must be positive".into());
        }
        if let Some(kc) = self.k_c2.iter().find(|&&kc| kc == 0 || kc > self.k) {
            return bad(format!("k_c2 entry {kc} must lie in 1..={}", self.k));
        }
        if !(self.p >= 1.0 && self.p <= self.k as f64) {
            return bad(format!("p = {} must lie in [1, k]", self.p));
        }
        let given = self.states.iter().filter(|s| s.duration.is_some()).count();
        if given != 0 && given != m {
            return bad("either every state or no state sets a duration".into());
        }
        for (i, s) in self.states.iter().enumerate() {
            if !(s.load >= 0.0 && s.gen >= 0.0 && s.load.is_finite() && s.gen.is_finite()) {
                return bad(format!("state {i}: load and gen levels must be finite and >= 0"));
            }
        }
        if self.alphas.iter().any(|a| !(*a >= 1.0 && a.is_finite())) {
            return bad("alpha values must be >= 1".into());
        }
        if self.load_ratios.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return bad("load ratios must be positive".into());
        }
        if !(self.lifetime_years > 0.0) {
            return bad("lifetime_years must be positive".into());
        }
        if self.one_stage_k == 0 {
            return bad("one_stage_k must be positive".into());
        }
        self.risk.validated().map_err(|e| ExperimentError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn durations(&self) -> Vec<f64> {
        let m = self.states.len();
        self.states.iter().map(|s| s.duration.unwrap_or(1.0 / m as f64)).collect()
    }

    /// Per-bus system states with loads and generation scaled by `load_ratio`.
    pub fn system_states(&self, buses: usize, load_ratio: f64) -> Result<Vec<SystemState>, ExperimentError> {
        let durations = self.durations();
        self.states
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let shape = |profile: &Option<Vec<f64>>, what: &str| -> Result<Vec<f64>, ExperimentError> {
                    match profile {
                        None => Ok(vec![1.0; buses]),
                        Some(p) if p.len() == buses => Ok(p.clone()),
                        Some(p) => Err(ExperimentError::Config(format!(
                            "state {i}: {what} profile has {} entries for {buses} buses",
                            p.len()
                        ))),
                    }
                };
                let load = shape(&s.load_profile, "load")?;
                let gen = shape(&s.gen_profile, "gen")?;
                Ok(SystemState {
                    index: i,
                    load_multipliers: load.iter().map(|v| v * s.load * load_ratio).collect(),
                    gen_multipliers: gen.iter().map(|v| v * s.gen * load_ratio).collect(),
                    duration: durations[i],
                })
            })
            .collect()
    }
}
