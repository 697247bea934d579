//! One optimization run: the NFT loop with per-iteration monitoring, then
//! the end-of-run estimation and diagonalization.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use subspace_vqe::metrics::{cumulative_infidelity_grid, htrc_fidelity, normalized_cost, subspace_fidelity};
use subspace_vqe::models::DEFAULT_DENSE_CAP;
use subspace_vqe::{
    build_hamiltonian, dense_spectrum, estimate_frame_problem, extremal_spectrum, init_parameters, optimize,
    pairwise_overlaps, solve_generalized, FrameEvaluator, FrameSpec, GroundSolution, GroundSpace, ModelSpec,
    PauliSumOperator, SpectrumMode, SpectrumResult, StateVector, TruncatedProblem,
};

use crate::config::{ExperimentConfig, SCHEMA_VERSION};
use crate::error::{core_exit_code, HarnessError, Result};
use crate::io;

/// Exact reference data for one model, shared by all of its runs.
pub struct Reference {
    pub hamiltonian: PauliSumOperator,
    pub spectrum: SpectrumResult,
    pub ground: GroundSpace,
}

impl Reference {
    /// Dense spectrum up to the dense cap; above it, the lowest
    /// `max(k, 2) + 1` and highest `k` eigenpairs.
    pub fn new(model: &ModelSpec, k: usize) -> Result<Self> {
        let hamiltonian = build_hamiltonian(model)?;
        let spectrum = if model.num_qubits() <= DEFAULT_DENSE_CAP {
            dense_spectrum(&hamiltonian)?
        } else {
            extremal_spectrum(&hamiltonian, k.max(2) + 1, k)?
        };
        let ground = spectrum.ground_space()?;
        Ok(Self {
            hamiltonian,
            spectrum,
            ground,
        })
    }

    pub fn is_dense(&self) -> bool {
        self.spectrum.mode() == SpectrumMode::FullDense
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub parameter: usize,
    pub cost: f64,
    pub energy: f64,
    pub penalty: f64,
    pub max_pair_overlap: f64,
    pub normalized_cost: f64,
    pub f_sub: Option<f64>,
    pub f_trc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiRow {
    pub iteration: usize,
    pub mu: f64,
    pub log10_ci: f64,
    pub overlap: f64,
    pub clamped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub status: RunStatus,
    pub error: Option<String>,
    pub exit_code: i32,
    pub model: String,
    pub method: String,
    pub k: usize,
    pub layers: usize,
    pub beta: f64,
    pub run_index: usize,
    pub seed: u64,
    pub num_parameters: usize,
    pub iterations: usize,
    pub initial_cost: Option<f64>,
    pub final_cost: Option<f64>,
    pub final_energy: Option<f64>,
    pub final_penalty: Option<f64>,
    pub normalized_cost: Option<f64>,
    /// `|S_pq|²` for `p < q`, row-major.
    pub pair_overlaps: Vec<f64>,
    pub max_pair_overlap: Option<f64>,
    pub f_sub: Option<f64>,
    pub f_trc: Option<f64>,
    pub delta_f: Option<f64>,
    pub lambda0: Option<f64>,
    pub ground_energy: f64,
    pub ground_degeneracy: usize,
    /// `⟨Ψ₀|P_{>E_1}|Ψ₀⟩`, when the full spectrum is known.
    pub weight_above_e1: Option<f64>,
    pub truncated_problem: Option<TruncatedProblem>,
    pub solution: Option<GroundSolution>,
    pub final_params: Vec<f64>,
    pub config: ExperimentConfig,
}

impl RunSummary {
    pub fn is_ok(&self) -> bool {
        self.status == RunStatus::Ok
    }
}

pub struct RunOutcome {
    pub summary: RunSummary,
    pub trace: Vec<TraceRow>,
    pub ci: Vec<CiRow>,
}

/// `H_pq` and `S_pq` read directly off the states.
fn direct_problem(states: &[StateVector], h: &PauliSumOperator) -> subspace_vqe::Result<TruncatedProblem> {
    let k = states.len();
    let images = states.iter().map(|s| h.apply(s)).collect::<subspace_vqe::Result<Vec<_>>>()?;
    let mut hm = DMatrix::zeros(k, k);
    for p in 0..k {
        for q in 0..k {
            hm[(p, q)] = states[p].inner(&images[q])?;
        }
    }
    let frame = subspace_vqe::Frame {
        mode: subspace_vqe::FrameMode::SoftOrtho,
        states: states.to_vec(),
    };
    Ok(TruncatedProblem {
        h: hm,
        s: pairwise_overlaps(&frame),
    })
}

fn pair_overlaps(states: &[StateVector]) -> subspace_vqe::Result<Vec<f64>> {
    let mut out = Vec::new();
    for p in 0..states.len() {
        for q in p + 1..states.len() {
            out.push(states[p].inner(&states[q])?.norm_sqr());
        }
    }
    Ok(out)
}

struct Snapshot {
    f_sub: f64,
    f_trc: f64,
    ci: Vec<CiRow>,
}

/// Fidelities of the current frame and, when asked for, its CI grid.
fn snapshot(
    states: &[StateVector],
    reference: &Reference,
    iteration: usize,
    with_ci: bool,
) -> subspace_vqe::Result<Snapshot> {
    let problem = direct_problem(states, &reference.hamiltonian)?;
    let solution = solve_generalized(&problem, states)?;
    let f_sub = subspace_fidelity(states, &reference.ground)?;
    let f_trc = htrc_fidelity(&solution, &reference.ground)?;
    let ci = if with_ci {
        cumulative_infidelity_grid(solution.state()?, &reference.spectrum)?
            .into_iter()
            .map(|c| CiRow {
                iteration,
                mu: c.mu,
                log10_ci: c.log10,
                overlap: c.overlap,
                clamped: c.clamped,
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(Snapshot { f_sub, f_trc, ci })
}

/// Executes run `run_index` of `config`. Failures are reported in the
/// summary together with whatever trace was completed.
pub fn execute_run(config: &ExperimentConfig, spec: &FrameSpec, reference: &Reference, run_index: usize) -> RunOutcome {
    let optimizer = config.run_optimizer(run_index);
    let k = spec.k;
    let mut summary = RunSummary {
        schema_version: SCHEMA_VERSION,
        status: RunStatus::Failed,
        error: None,
        exit_code: 0,
        model: config.model.label(),
        method: spec.mode.name().to_string(),
        k,
        layers: spec.ansatz.layers,
        beta: spec.beta,
        run_index,
        seed: optimizer.rng_seed,
        num_parameters: spec.parameter_count(),
        iterations: 0,
        initial_cost: None,
        final_cost: None,
        final_energy: None,
        final_penalty: None,
        normalized_cost: None,
        pair_overlaps: Vec::new(),
        max_pair_overlap: None,
        f_sub: None,
        f_trc: None,
        delta_f: None,
        lambda0: None,
        ground_energy: reference.ground.energy,
        ground_degeneracy: reference.ground.degeneracy(),
        weight_above_e1: None,
        truncated_problem: None,
        solution: None,
        final_params: Vec::new(),
        config: config.clone(),
    };
    let mut ci = Vec::new();
    let fail = |summary: &mut RunSummary, e: subspace_vqe::Error| {
        summary.status = RunStatus::Failed;
        summary.exit_code = core_exit_code(&e);
        summary.error = Some(e.to_string());
    };

    let mut eval = match FrameEvaluator::new(spec.clone(), reference.hamiltonian.clone()) {
        Ok(e) => e,
        Err(e) => {
            fail(&mut summary, e);
            return RunOutcome {
                summary,
                trace: Vec::new(),
                ci,
            };
        }
    };
    let with_ci = config.metrics.enable_ci && reference.is_dense();
    let every = config.metrics.record_every;
    let last = optimizer.max_iterations;
    let monitor = |it: usize, params: &[f64], _: &subspace_vqe::CostBreakdown, eval: &mut FrameEvaluator| {
        if !it.is_multiple_of(every) && it != last {
            return Ok(subspace_vqe::nft::Monitoring::default());
        }
        let states = eval.states(params)?;
        let snap = snapshot(&states, reference, it, with_ci)?;
        ci.extend(snap.ci);
        Ok(subspace_vqe::nft::Monitoring {
            f_sub: Some(snap.f_sub),
            f_trc: Some(snap.f_trc),
        })
    };
    let result = init_parameters(spec.parameter_count(), &optimizer)
        .map_err(|e| Box::new(subspace_vqe::nft::Aborted {
            error: e,
            trace: empty_trace(),
        }))
        .and_then(|init| optimize(&mut eval, init, &optimizer, monitor));
    let run_trace = match result {
        Ok(t) => t,
        Err(aborted) => {
            let aborted = *aborted;
            fail(&mut summary, aborted.error);
            summary.initial_cost = Some(aborted.trace.initial_cost.total).filter(|c| c.is_finite());
            summary.iterations = aborted.trace.records.len();
            summary.final_params = aborted.trace.final_params.clone();
            let trace = trace_rows(&aborted.trace, &reference.spectrum, k);
            return RunOutcome { summary, trace, ci };
        }
    };
    summary.initial_cost = Some(run_trace.initial_cost.total);
    summary.iterations = run_trace.records.len();
    summary.final_params = run_trace.final_params.clone();
    let trace = trace_rows(&run_trace, &reference.spectrum, k);
    if let Err(e) = finish(&mut summary, &mut eval, spec, reference, config.run_estimation(run_index)) {
        fail(&mut summary, e);
    }
    RunOutcome { summary, trace, ci }
}

fn empty_trace() -> subspace_vqe::RunTrace {
    subspace_vqe::RunTrace {
        initial_params: Vec::new(),
        initial_cost: subspace_vqe::CostBreakdown::scalar(f64::NAN),
        records: Vec::new(),
        final_params: Vec::new(),
        final_cost: subspace_vqe::CostBreakdown::scalar(f64::NAN),
    }
}

fn trace_rows(trace: &subspace_vqe::RunTrace, spectrum: &SpectrumResult, k: usize) -> Vec<TraceRow> {
    trace
        .records
        .iter()
        .map(|r| TraceRow {
            iteration: r.iteration,
            parameter: r.parameter,
            cost: r.cost,
            energy: r.energy,
            penalty: r.penalty,
            max_pair_overlap: r.max_pair_overlap(),
            normalized_cost: normalized_cost(r.energy, spectrum, k).unwrap_or(f64::NAN),
            f_sub: r.f_sub,
            f_trc: r.f_trc,
        })
        .collect()
}

/// End of run: exact final costs, the estimated truncated problem and its
/// solution, and the final metrics.
fn finish(
    summary: &mut RunSummary,
    eval: &mut FrameEvaluator,
    spec: &FrameSpec,
    reference: &Reference,
    estimation: subspace_vqe::EstimationMode,
) -> subspace_vqe::Result<()> {
    use subspace_vqe::Objective;
    let params = summary.final_params.clone();
    let cost = eval.evaluate(&params)?;
    let states = eval.states(&params)?;
    summary.final_cost = Some(cost.total);
    summary.final_energy = Some(cost.energy);
    summary.final_penalty = Some(cost.penalty);
    summary.normalized_cost = Some(normalized_cost(cost.energy, &reference.spectrum, spec.k)?);
    summary.pair_overlaps = pair_overlaps(&states)?;
    summary.max_pair_overlap = Some(summary.pair_overlaps.iter().copied().fold(0.0, f64::max));

    let problem = estimate_frame_problem(spec, &params, &reference.hamiltonian, estimation)?;
    let solution = solve_generalized(&problem, &states)?;
    let f_sub = subspace_fidelity(&states, &reference.ground)?;
    let f_trc = htrc_fidelity(&solution, &reference.ground)?;
    if reference.is_dense() {
        let grid = cumulative_infidelity_grid(solution.state()?, &reference.spectrum)?;
        summary.weight_above_e1 = Some(grid.first().map_or(0.0, |c| c.overlap));
    }
    summary.f_sub = Some(f_sub);
    summary.f_trc = Some(f_trc);
    summary.delta_f = Some(f_sub - f_trc);
    summary.lambda0 = Some(solution.lambda0);
    summary.truncated_problem = Some(problem);
    summary.solution = Some(solution);
    summary.status = RunStatus::Ok;
    Ok(())
}

/// Writes `trace.csv`, `summary.json` and, if any, `ci_grid.csv` into `dir`.
pub fn write_outcome(dir: &Path, outcome: &RunOutcome) -> Result<()> {
    io::write_csv(&dir.join("trace.csv"), &outcome.trace)?;
    if !outcome.ci.is_empty() {
        io::write_csv(&dir.join("ci_grid.csv"), &outcome.ci)?;
    }
    // The summary goes last: its presence marks the run as complete.
    io::write_json(&dir.join("summary.json"), &outcome.summary)
}

pub fn run_dir(base: &Path, run_index: usize) -> std::path::PathBuf {
    base.join(format!("run_{run_index:03}"))
}

/// Runs every run of `config` into `output_dir/run_NNN`. Fails with the
/// first failing run's exit code after all runs have been written.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunSummary>> {
    config.validate()?;
    let spec = config.frame_spec()?;
    if config.metrics.enable_ci && config.model.num_qubits() > DEFAULT_DENSE_CAP {
        return Err(subspace_vqe::Error::Capability(format!(
            "cumulative infidelity needs the full spectrum, available up to {DEFAULT_DENSE_CAP} qubits"
        ))
        .into());
    }
    let reference = Reference::new(&config.model, spec.k)?;
    let mut summaries = Vec::with_capacity(config.runs);
    for r in 0..config.runs {
        let outcome = execute_run(config, &spec, &reference, r);
        write_outcome(&run_dir(&config.output_dir, r), &outcome)?;
        summaries.push(outcome.summary);
    }
    check_failures(&summaries)?;
    Ok(summaries)
}

pub(crate) fn check_failures(summaries: &[RunSummary]) -> Result<()> {
    let failed: Vec<&RunSummary> = summaries.iter().filter(|s| !s.is_ok()).collect();
    match failed.first() {
        None => Ok(()),
        Some(first) => Err(HarnessError::RunsFailed {
            failed: failed.len(),
            total: summaries.len(),
            first: first.error.clone().unwrap_or_default(),
            code: first.exit_code,
        }),
    }
}
