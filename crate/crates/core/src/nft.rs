//! Sequential single-parameter minimization (the NFT scheme).
//!
//! With every other angle frozen, the frame cost is `C + A cos d + B sin d`
//! in the shift `d` of one angle. Two extra evaluations at `d = ±π/2`
//! together with the current value fix `A`, `B`, `C`, and the exact minimum
//! along that direction sits at `d* = atan2(-B, -A)` with value `C - √(A²+B²)`.
//! Each iteration updates one parameter; parameters are visited cyclically.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// A cost value together with the pieces logged in run traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub total: f64,
    /// Penalty-free frame energy `Σ_p ⟨ψ_p|H|ψ_p⟩`.
    pub energy: f64,
    /// `Σ_{p<q} |⟨ψ_p|ψ_q⟩|²` (zero unless the frame is soft-orthogonal).
    pub penalty: f64,
    /// `|⟨ψ_p|ψ_q⟩|²` for `p < q`, row-major.
    pub pair_overlaps: Vec<f64>,
}

impl CostBreakdown {
    /// A bare scalar cost.
    pub fn scalar(total: f64) -> Self {
        Self {
            total,
            energy: total,
            penalty: 0.0,
            pair_overlaps: Vec::new(),
        }
    }

    pub fn max_pair_overlap(&self) -> f64 {
        self.pair_overlaps.iter().copied().fold(0.0, f64::max)
    }

    fn is_finite(&self) -> bool {
        self.total.is_finite()
            && self.energy.is_finite()
            && self.penalty.is_finite()
            && self.pair_overlaps.iter().all(|v| v.is_finite())
    }

    /// Applies `f` to every component of `(self, plus, minus)` in lockstep.
    fn zip3(&self, plus: &Self, minus: &Self, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        Self {
            total: f(self.total, plus.total, minus.total),
            energy: f(self.energy, plus.energy, minus.energy),
            penalty: f(self.penalty, plus.penalty, minus.penalty),
            pair_overlaps: self
                .pair_overlaps
                .iter()
                .zip(&plus.pair_overlaps)
                .zip(&minus.pair_overlaps)
                .map(|((&a, &b), &c)| f(a, b, c))
                .collect(),
        }
    }
}

/// A cost function of a flat parameter vector.
pub trait Objective {
    fn num_parameters(&self) -> usize;

    fn evaluate(&mut self, params: &[f64]) -> Result<CostBreakdown>;

    /// Cost at `params` with entry `index` replaced by `value`. Implementors
    /// may reuse work shared with earlier calls.
    fn evaluate_with(&mut self, params: &[f64], index: usize, value: f64) -> Result<CostBreakdown> {
        let mut p = params.to_vec();
        p[index] = value;
        self.evaluate(&p)
    }
}

/// Wraps a plain closure as an [`Objective`].
pub struct FnObjective<F> {
    f: F,
    n: usize,
}

impl<F: FnMut(&[f64]) -> f64> FnObjective<F> {
    pub fn new(num_parameters: usize, f: F) -> Self {
        Self { f, n: num_parameters }
    }
}

impl<F: FnMut(&[f64]) -> f64> Objective for FnObjective<F> {
    fn num_parameters(&self) -> usize {
        self.n
    }

    fn evaluate(&mut self, params: &[f64]) -> Result<CostBreakdown> {
        Ok(CostBreakdown::scalar((self.f)(params)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IterationUnit {
    #[default]
    ParameterUpdate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepOrder {
    #[default]
    Cyclic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    /// Half-width of the uniform initialization interval.
    pub init_range: f64,
    pub rng_seed: u64,
    pub iteration_unit: IterationUnit,
    pub sweep_order: SweepOrder,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iterations: 1500,
            init_range: 0.2 * PI,
            rng_seed: 0,
            iteration_unit: IterationUnit::ParameterUpdate,
            sweep_order: SweepOrder::Cyclic,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::domain("max_iterations must be at least 1"));
        }
        if !(self.init_range > 0.0 && self.init_range <= PI) {
            return Err(Error::domain(format!(
                "init_range {} outside (0, π]",
                self.init_range
            )));
        }
        Ok(())
    }
}

/// I.i.d. uniform draws in `[-init_range, init_range]` from the config seed.
pub fn init_parameters(count: usize, config: &OptimizerConfig) -> Result<Vec<f64>> {
    config.validate()?;
    if count == 0 {
        return Err(Error::domain("parameter count must be at least 1"));
    }
    let mut stream = rng::stream(config.rng_seed);
    Ok((0..count)
        .map(|_| rng::uniform_symmetric(&mut stream, config.init_range))
        .collect())
}

/// Maps an angle into `(-π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = x - TAU * ((x + PI) / TAU).floor();
    if y <= -PI {
        y + TAU
    } else {
        y
    }
}

/// Result of one single-parameter update.
#[derive(Debug, Clone, PartialEq)]
pub struct Update {
    pub index: usize,
    pub old_value: f64,
    pub new_value: f64,
    /// Cost at the new value, predicted from the sinusoid fit.
    pub cost: CostBreakdown,
}

/// Minimizes along parameter `j`, updating `params` in place. `current` is
/// the cost at `params`; exactly two new evaluations are made.
pub fn nft_update<O: Objective + ?Sized>(
    objective: &mut O,
    params: &mut [f64],
    j: usize,
    current: &CostBreakdown,
) -> Result<Update> {
    if j >= params.len() {
        return Err(Error::domain(format!(
            "parameter index {j} out of range for {} parameters",
            params.len()
        )));
    }
    let theta = params[j];
    let plus = objective.evaluate_with(params, j, theta + FRAC_PI_2)?;
    let minus = objective.evaluate_with(params, j, theta - FRAC_PI_2)?;
    if !plus.is_finite() || !minus.is_finite() || !current.is_finite() {
        return Err(Error::numerical(format!(
            "non-finite cost while updating parameter {j}"
        )));
    }
    let c = 0.5 * (plus.total + minus.total);
    let b = 0.5 * (plus.total - minus.total);
    let a = current.total - c;
    if a == 0.0 && b == 0.0 {
        return Ok(Update {
            index: j,
            old_value: theta,
            new_value: theta,
            cost: current.clone(),
        });
    }
    let step = (-b).atan2(-a);
    let (s, co) = step.sin_cos();
    let predict = |z0: f64, zp: f64, zm: f64| {
        let cc = 0.5 * (zp + zm);
        cc + (z0 - cc) * co + 0.5 * (zp - zm) * s
    };
    let mut cost = current.zip3(&plus, &minus, predict);
    // The total is the exact line minimum; use the closed form for it.
    cost.total = c - a.hypot(b);
    let new_value = wrap_angle(theta + step);
    params[j] = new_value;
    Ok(Update {
        index: j,
        old_value: theta,
        new_value,
        cost,
    })
}

/// Metric values supplied by a run monitor for one iteration.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Monitoring {
    pub f_sub: Option<f64>,
    pub f_trc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based.
    pub iteration: usize,
    pub parameter: usize,
    pub cost: f64,
    pub energy: f64,
    pub penalty: f64,
    pub pair_overlaps: Vec<f64>,
    pub f_sub: Option<f64>,
    pub f_trc: Option<f64>,
    pub elapsed_s: f64,
}

impl IterationRecord {
    pub fn max_pair_overlap(&self) -> f64 {
        self.pair_overlaps.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub initial_params: Vec<f64>,
    pub initial_cost: CostBreakdown,
    pub records: Vec<IterationRecord>,
    pub final_params: Vec<f64>,
    pub final_cost: CostBreakdown,
}

/// An optimization that stopped on an error; the trace holds every completed
/// iteration.
#[derive(Debug, Clone)]
pub struct Aborted {
    pub error: Error,
    pub trace: RunTrace,
}

/// Runs `config.max_iterations` cyclic single-parameter updates from
/// `initial`. After each update `monitor` is called with the iteration
/// number, the current parameters, the predicted cost and the objective.
pub fn optimize<O, M>(
    objective: &mut O,
    initial: Vec<f64>,
    config: &OptimizerConfig,
    mut monitor: M,
) -> std::result::Result<RunTrace, Box<Aborted>>
where
    O: Objective + ?Sized,
    M: FnMut(usize, &[f64], &CostBreakdown, &mut O) -> Result<Monitoring>,
{
    let start = Instant::now();
    let mut trace = RunTrace {
        initial_params: initial.clone(),
        initial_cost: CostBreakdown::scalar(f64::NAN),
        records: Vec::new(),
        final_params: initial.clone(),
        final_cost: CostBreakdown::scalar(f64::NAN),
    };
    let abort = |error: Error, trace: RunTrace| Box::new(Aborted { error, trace });
    if let Err(e) = config.validate() {
        return Err(abort(e, trace));
    }
    if initial.len() != objective.num_parameters() || initial.is_empty() {
        let e = Error::domain(format!(
            "{} initial parameters for an objective with {}",
            initial.len(),
            objective.num_parameters()
        ));
        return Err(abort(e, trace));
    }
    let mut params = initial;
    let mut current = match objective.evaluate(&params) {
        Ok(c) if c.is_finite() => c,
        Ok(_) => return Err(abort(Error::numerical("initial cost is not finite"), trace)),
        Err(e) => return Err(abort(e, trace)),
    };
    trace.initial_cost = current.clone();
    trace.final_cost = current.clone();
    let n = params.len();
    for it in 0..config.max_iterations {
        let j = it % n;
        let update = match nft_update(objective, &mut params, j, &current) {
            Ok(u) => u,
            Err(e) => return Err(abort(e, trace)),
        };
        if update.cost.total > current.total + 1e-9 * current.total.abs().max(1.0) {
            let e = Error::numerical(format!(
                "cost increased from {} to {} at iteration {}",
                current.total,
                update.cost.total,
                it + 1
            ));
            return Err(abort(e, trace));
        }
        current = update.cost;
        let metrics = match monitor(it + 1, &params, &current, objective) {
            Ok(m) => m,
            Err(e) => return Err(abort(e, trace)),
        };
        trace.records.push(IterationRecord {
            iteration: it + 1,
            parameter: j,
            cost: current.total,
            energy: current.energy,
            penalty: current.penalty,
            pair_overlaps: current.pair_overlaps.clone(),
            f_sub: metrics.f_sub,
            f_trc: metrics.f_trc,
            elapsed_s: start.elapsed().as_secs_f64(),
        });
        trace.final_params.clone_from(&params);
        trace.final_cost = current.clone();
    }
    Ok(trace)
}

/// A monitor that records nothing.
pub fn no_monitor<O: ?Sized>(_: usize, _: &[f64], _: &CostBreakdown, _: &mut O) -> Result<Monitoring> {
    Ok(Monitoring::default())
}
