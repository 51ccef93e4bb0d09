use std::collections::HashSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::solvers::{RunLimits, SolverConfig, TimeMode, DEFAULT_EVALS_PER_MS};

/// A solver configuration under a plan-unique id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub id: String,
    #[serde(default)]
    pub config: SolverConfig,
}

fn default_runs() -> u32 {
    10
}

fn default_evals_per_ms() -> u64 {
    DEFAULT_EVALS_PER_MS
}

/// Every instance is solved `runs` times by every solver, each run with its
/// own derived seed and the same cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub id: String,
    /// TSPLIB files, or directories whose `.tsp` files are all included.
    #[serde(default)]
    pub instances: Vec<PathBuf>,
    pub solvers: Vec<SolverSpec>,
    #[serde(default = "default_runs")]
    pub runs: u32,
    pub cutoff_ms: u64,
    #[serde(default)]
    pub base_seed: u64,
    /// Worker threads; 0 uses every available core.
    #[serde(default)]
    pub jobs: usize,
    #[serde(default)]
    pub time_mode: TimeMode,
    #[serde(default = "default_evals_per_ms")]
    pub evals_per_ms: u64,
}

impl ExperimentPlan {
    pub fn new(id: impl Into<String>, solvers: Vec<SolverSpec>, runs: u32, cutoff_ms: u64) -> Self {
        ExperimentPlan {
            id: id.into(),
            instances: Vec::new(),
            solvers,
            runs,
            cutoff_ms,
            base_seed: 0,
            jobs: 0,
            time_mode: TimeMode::Wall,
            evals_per_ms: DEFAULT_EVALS_PER_MS,
        }
    }

    pub fn limits(&self) -> RunLimits {
        RunLimits {
            cutoff_ms: self.cutoff_ms,
            time_mode: self.time_mode,
            evals_per_ms: self.evals_per_ms,
            target_length: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::InvalidConfig("plan id must not be empty".into()));
        }
        if self.runs == 0 {
            return Err(Error::InvalidConfig(
                "runs per pair must be at least 1".into(),
            ));
        }
        if self.solvers.is_empty() {
            return Err(Error::InvalidConfig("plan lists no solvers".into()));
        }
        self.limits().validate()?;
        let mut seen = HashSet::new();
        for s in &self.solvers {
            if !seen.insert(s.id.as_str()) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate solver id `{}`",
                    s.id
                )));
            }
            s.config
                .validate()
                .map_err(|e| Error::InvalidConfig(format!("solver `{}`: {e}", s.id)))?;
        }
        Ok(())
    }
}

/// Seed of one run, a stable hash of the run key.
pub fn run_seed(base_seed: u64, instance: &str, solver: &str, run: u32) -> u64 {
    let mut h = Sha256::new();
    h.update(base_seed.to_le_bytes());
    h.update((instance.len() as u64).to_le_bytes());
    h.update(instance.as_bytes());
    h.update((solver.len() as u64).to_le_bytes());
    h.update(solver.as_bytes());
    h.update(run.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}
