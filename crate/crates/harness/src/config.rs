//! Run configuration documents.
//!
//! Run `r` of a config initializes its parameters from seed
//! `base_seed + r`; `optimizer.rng_seed` in the file is ignored. In shot mode
//! the estimation seed is mixed with the same run seed.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use subspace_vqe::rng::derive_seed;
use subspace_vqe::{AnsatzSpec, Entangler, EstimationMode, FrameMode, FrameSpec, ModelSpec, OptimizerConfig};

use crate::error::{HarnessError, Result};

pub const SCHEMA_VERSION: u32 = 1;

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameConfig {
    pub mode: FrameMode,
    #[serde(default = "one")]
    pub k: usize,
    pub layers: usize,
    #[serde(default)]
    pub entangler: Entangler,
    /// Overlap penalty weight; only read for soft frames.
    #[serde(default)]
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsConfig {
    /// Fidelities (and CI grids) are computed on every `record_every`-th
    /// iteration and on the last one.
    #[serde(default = "one")]
    pub record_every: usize,
    #[serde(default)]
    pub enable_ci: bool,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            record_every: 1,
            enable_ci: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub model: ModelSpec,
    pub frame: FrameConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub estimation: EstimationMode,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default = "one")]
    pub runs: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

pub(crate) fn check_schema(version: u32, problems: &mut Vec<String>) {
    if version != SCHEMA_VERSION {
        problems.push(format!(
            "schema_version: {version} is not supported (expected {SCHEMA_VERSION})"
        ));
    }
}

impl ExperimentConfig {
    /// Collects every problem instead of stopping at the first.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        check_schema(self.schema_version, &mut problems);
        if let Err(e) = self.model.edge_couplings() {
            problems.push(format!("model: {e}"));
        }
        if self.frame.layers == 0 {
            problems.push("frame.layers: must be at least 1".into());
        }
        if self.frame.mode == FrameMode::SoftOrtho && !(self.frame.beta > 0.0 && self.frame.beta.is_finite()) {
            problems.push(format!("frame.beta: {} must be finite and positive", self.frame.beta));
        }
        if problems.is_empty() {
            if let Err(e) = self.frame_spec() {
                problems.push(format!("frame: {e}"));
            }
        }
        if let Err(e) = self.optimizer.validate() {
            problems.push(format!("optimizer: {e}"));
        }
        if let Err(e) = self.estimation.validate() {
            problems.push(format!("estimation: {e}"));
        }
        if self.metrics.record_every == 0 {
            problems.push("metrics.record_every: must be at least 1".into());
        }
        if self.runs == 0 {
            problems.push("runs: must be at least 1".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::Validation(problems))
        }
    }

    /// The frame on this model's qubits, entangling along the lattice bonds.
    pub fn frame_spec(&self) -> Result<FrameSpec> {
        let lattice = self.model.lattice()?;
        let ansatz = AnsatzSpec::new(
            self.model.num_qubits(),
            self.frame.layers,
            self.frame.entangler,
            lattice.edges(),
        )?;
        let spec = FrameSpec {
            mode: self.frame.mode,
            k: self.frame.k,
            ansatz,
            beta: if self.frame.mode == FrameMode::SoftOrtho { self.frame.beta } else { 0.0 },
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn run_seed(&self, run_index: usize) -> u64 {
        self.base_seed.wrapping_add(run_index as u64)
    }

    /// Optimizer settings for run `run_index`.
    pub fn run_optimizer(&self, run_index: usize) -> OptimizerConfig {
        OptimizerConfig {
            rng_seed: self.run_seed(run_index),
            ..self.optimizer.clone()
        }
    }

    pub fn run_estimation(&self, run_index: usize) -> EstimationMode {
        match self.estimation {
            EstimationMode::Analytic => EstimationMode::Analytic,
            EstimationMode::Shots { shots, seed } => EstimationMode::Shots {
                shots,
                seed: derive_seed(seed, self.run_seed(run_index)),
            },
        }
    }

    /// `method_K{k}_L{layers}`, the directory name of one sweep cell.
    pub fn cell_name(&self) -> String {
        format!("{}_K{}_L{}", self.frame.mode.name(), self.frame.k, self.frame.layers)
    }
}
