//! Cartesian sweeps over methods, frame sizes, depths and disorder
//! realizations, run in parallel and aggregated at the end.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use subspace_vqe::models::DEFAULT_DENSE_CAP;
use subspace_vqe::{Entangler, EstimationMode, FrameMode, ModelSpec, OptimizerConfig};

use crate::config::{check_schema, ExperimentConfig, FrameConfig, MetricsConfig};
use crate::error::{HarnessError, Result};
use crate::report::{self, Report};
use crate::run::{execute_run, run_dir, write_outcome, Reference, RunSummary};
use crate::io;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    pub mode: FrameMode,
    #[serde(default)]
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepManifest {
    pub schema_version: u32,
    pub model: ModelSpec,
    /// One realization per seed, overriding `model.disorder_seed`. Empty
    /// means the model as given.
    #[serde(default)]
    pub disorder_seeds: Vec<u64>,
    pub methods: Vec<MethodConfig>,
    /// Frame sizes for the subspace methods; single-state VQE always uses 1.
    pub k_values: Vec<usize>,
    pub layers: Vec<usize>,
    #[serde(default)]
    pub entangler: Entangler,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub estimation: EstimationMode,
    #[serde(default)]
    pub metrics: MetricsConfig,
    pub runs: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

/// One run of one sweep cell.
#[derive(Debug, Clone)]
pub struct Job {
    pub config: ExperimentConfig,
    pub run_index: usize,
    pub dir: PathBuf,
}

impl SweepManifest {
    pub fn models(&self) -> Vec<ModelSpec> {
        if self.disorder_seeds.is_empty() {
            return vec![self.model.clone()];
        }
        self.disorder_seeds
            .iter()
            .map(|&s| ModelSpec {
                disorder_seed: Some(s),
                couplings: None,
                ..self.model.clone()
            })
            .collect()
    }

    /// One config per cell, in a fixed order: model, method, K, depth.
    pub fn cells(&self, out: &Path) -> Vec<ExperimentConfig> {
        let mut cells = Vec::new();
        for model in self.models() {
            for method in &self.methods {
                let ks: Vec<usize> = if method.mode == FrameMode::Single {
                    vec![1]
                } else {
                    self.k_values.clone()
                };
                for &k in &ks {
                    for &layers in &self.layers {
                        let frame = FrameConfig {
                            mode: method.mode,
                            k,
                            layers,
                            entangler: self.entangler,
                            beta: method.beta,
                        };
                        let mut config = ExperimentConfig {
                            schema_version: self.schema_version,
                            model: model.clone(),
                            frame,
                            optimizer: self.optimizer.clone(),
                            estimation: self.estimation,
                            metrics: self.metrics,
                            runs: self.runs,
                            base_seed: self.base_seed,
                            output_dir: PathBuf::new(),
                        };
                        config.output_dir = out.join(model.label()).join(config.cell_name());
                        cells.push(config);
                    }
                }
            }
        }
        cells
    }

    pub fn jobs(&self, out: &Path) -> Vec<Job> {
        self.cells(out)
            .into_iter()
            .flat_map(|config| {
                (0..config.runs).map(move |r| Job {
                    dir: run_dir(&config.output_dir, r),
                    config: config.clone(),
                    run_index: r,
                })
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        check_schema(self.schema_version, &mut problems);
        if self.methods.is_empty() {
            problems.push("methods: at least one method is required".into());
        }
        if self.k_values.is_empty() && self.methods.iter().any(|m| m.mode != FrameMode::Single) {
            problems.push("k_values: subspace methods need at least one K".into());
        }
        if self.layers.is_empty() {
            problems.push("layers: at least one depth is required".into());
        }
        if self.runs == 0 {
            problems.push("runs: must be at least 1".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        for cell in self.cells(Path::new("")) {
            if !seen.insert(cell.output_dir.clone()) {
                problems.push(format!("duplicate cell {}", cell.output_dir.display()));
            }
            // Run counts are checked once above.
            let c = ExperimentConfig {
                runs: cell.runs.max(1),
                ..cell
            };
            if let Err(HarnessError::Validation(p)) = c.validate() {
                for msg in p {
                    let tagged = format!("{}: {msg}", c.output_dir.display());
                    if !problems.contains(&tagged) {
                        problems.push(tagged);
                    }
                }
            }
        }
        if self.metrics.enable_ci && self.model.num_qubits() > DEFAULT_DENSE_CAP {
            return Err(subspace_vqe::Error::Capability(format!(
                "cumulative infidelity needs the full spectrum, available up to {DEFAULT_DENSE_CAP} qubits"
            ))
            .into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::Validation(problems))
        }
    }
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub executed: usize,
    pub skipped: usize,
    pub failed: usize,
    pub report: Report,
}

fn completed(dir: &Path) -> bool {
    let path = dir.join("summary.json");
    path.exists() && io::read_json::<RunSummary>(&path).is_ok_and(|s| s.is_ok())
}

fn is_empty_dir(dir: &Path) -> Result<bool> {
    match fs::read_dir(dir) {
        Ok(mut entries) => Ok(entries.next().is_none()),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(true),
        Err(e) => Err(HarnessError::io(dir, e)),
    }
}

/// Runs every job of `manifest` under `out` on `workers` threads, then
/// writes the aggregate tables. With `resume`, jobs whose summary reports
/// success are skipped; without it, `out` must be empty or absent.
pub fn execute_sweep(manifest: &SweepManifest, out: &Path, workers: usize, resume: bool) -> Result<SweepOutcome> {
    manifest.validate()?;
    if workers == 0 {
        return Err(HarnessError::invalid("--jobs must be at least 1"));
    }
    if !resume && !is_empty_dir(out)? {
        return Err(HarnessError::invalid(format!(
            "output directory {} is not empty; pass --resume to continue a sweep there",
            out.display()
        )));
    }
    io::write_json(&out.join("manifest.json"), manifest)?;
    let jobs = manifest.jobs(out);
    let pending: Vec<&Job> = jobs.iter().filter(|j| !(resume && completed(&j.dir))).collect();
    let skipped = jobs.len() - pending.len();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::invalid(format!("cannot start {workers} workers: {e}")))?;

    // Reference spectra, one per realization, sized for the largest K.
    let mut max_k: BTreeMap<String, (ModelSpec, usize)> = BTreeMap::new();
    for job in &pending {
        let entry = max_k
            .entry(job.config.model.label())
            .or_insert((job.config.model.clone(), 1));
        entry.1 = entry.1.max(job.config.frame.k);
    }
    let models: Vec<(String, (ModelSpec, usize))> = max_k.into_iter().collect();
    let references: BTreeMap<String, Reference> = pool.install(|| {
        models
            .par_iter()
            .map(|(label, (model, k))| Ok((label.clone(), Reference::new(model, *k)?)))
            .collect::<Result<BTreeMap<_, _>>>()
    })?;

    let results: Vec<Result<bool>> = pool.install(|| {
        pending
            .par_iter()
            .map(|job| {
                let reference = &references[&job.config.model.label()];
                let spec = job.config.frame_spec()?;
                let outcome = execute_run(&job.config, &spec, reference, job.run_index);
                write_outcome(&job.dir, &outcome)?;
                Ok(outcome.summary.is_ok())
            })
            .collect()
    });
    let mut failed = 0;
    for r in results {
        if !r? {
            failed += 1;
        }
    }
    let report = report::generate(out)?;
    Ok(SweepOutcome {
        executed: pending.len(),
        skipped,
        failed,
        report,
    })
}
