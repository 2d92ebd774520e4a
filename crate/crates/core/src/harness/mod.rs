//! Experiment driver: ERM comparator, seeded runs and report files.

pub mod erm;
pub mod experiment;
pub mod report;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::offline::OfflineTrainConfig;
use crate::online::InitPolicy;
use crate::pool::{effective_k, PriorityStrategy};
use crate::stream::StreamSpec;

pub use erm::{erm_oracle, ErmSolution, DEFAULT_ERM_TOL};
pub use experiment::{check_interval, run_experiment, IntervalSummary, RunReport, SeedReport, StepRow};
pub use report::{emit_reports, read_steps_csv, write_steps_csv};

fn default_k_max() -> usize {
    5
}
fn default_gamma_floor() -> f64 {
    OfflineTrainConfig::DEFAULT_GAMMA_FLOOR
}
fn default_r() -> f64 {
    1.0
}
fn default_early_horizon() -> usize {
    20
}
fn default_delta() -> f64 {
    0.05
}
fn default_erm_tol() -> f64 {
    DEFAULT_ERM_TOL
}
fn default_solver_tol() -> f64 {
    OfflineTrainConfig::DEFAULT_TOL
}

/// Everything needed to reproduce a run. Only `stream` and `seeds` are
/// required in JSON; the per-run seed replaces `stream.seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub stream: StreamSpec,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default)]
    pub strategy: PriorityStrategy,
    #[serde(default)]
    pub init: InitPolicy,
    #[serde(default = "default_gamma_floor")]
    pub gamma_floor: f64,
    pub seeds: Vec<u64>,
    /// Hypothesis norm bound.
    #[serde(default = "default_r")]
    pub r: f64,
    /// Step at which early cumulative losses are compared.
    #[serde(default = "default_early_horizon")]
    pub early_horizon: usize,
    /// Confidence parameter of the excess-risk bound.
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_erm_tol")]
    pub erm_tol: f64,
    #[serde(default = "default_solver_tol")]
    pub solver_tol: f64,
    /// LIBSVM file for dataset mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    /// Output directory for report files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Defaults around the given stream and seeds.
    pub fn synthetic(stream: StreamSpec, seeds: Vec<u64>) -> Self {
        Self {
            stream,
            k_max: default_k_max(),
            strategy: PriorityStrategy::default(),
            init: InitPolicy::default(),
            gamma_floor: default_gamma_floor(),
            seeds,
            r: default_r(),
            early_horizon: default_early_horizon(),
            delta: default_delta(),
            erm_tol: default_erm_tol(),
            solver_tol: default_solver_tol(),
            input: None,
            out: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.stream.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::invalid("at least one seed is required"));
        }
        effective_k(1, self.k_max)?;
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(Error::invalid(format!("R must be positive, got {}", self.r)));
        }
        if !(self.gamma_floor.is_finite() && self.gamma_floor >= 0.0) {
            return Err(Error::invalid(format!("gamma floor must be non-negative, got {}", self.gamma_floor)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid(format!("delta must be in (0, 1), got {}", self.delta)));
        }
        if self.early_horizon == 0 {
            return Err(Error::invalid("early horizon must be positive"));
        }
        for (name, tol) in [("erm_tol", self.erm_tol), ("solver_tol", self.solver_tol)] {
            if !(tol > 0.0 && tol < 1.0) {
                return Err(Error::invalid(format!("{name} must be in (0, 1), got {tol}")));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}
