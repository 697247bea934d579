//! Subspace frames: `K` parameterized states whose span is the search space.
//!
//! * `single`: one state `U(θ)|0⟩` (plain VQE).
//! * `hard_ortho`: one shared `U(θ)` applied to `|0⟩ … |K-1⟩`; the members are
//!   orthonormal for every θ.
//! * `soft_ortho`: `K` independent parameter slices, each applied to `|0⟩`;
//!   orthogonality is encouraged by `β Σ_{p<q} |⟨ψ_q|ψ_p⟩|²`.

use std::ops::Range;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::ansatz::{build_ansatz_circuit, AnsatzSpec, Entangler};
use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::nft::{CostBreakdown, Objective};
use crate::pauli::PauliSumOperator;
use crate::statevector::{apply_ry, apply_rz_all, inner_slices, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameMode {
    Single,
    HardOrtho,
    SoftOrtho,
}

impl FrameMode {
    pub fn name(self) -> &'static str {
        match self {
            FrameMode::Single => "vqe",
            FrameMode::HardOrtho => "hard_ortho",
            FrameMode::SoftOrtho => "soft_ortho",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSpec {
    pub mode: FrameMode,
    pub k: usize,
    pub ansatz: AnsatzSpec,
    #[serde(default)]
    pub beta: f64,
}

impl FrameSpec {
    pub fn single(ansatz: AnsatzSpec) -> Self {
        Self {
            mode: FrameMode::Single,
            k: 1,
            ansatz,
            beta: 0.0,
        }
    }

    pub fn hard(ansatz: AnsatzSpec, k: usize) -> Self {
        Self {
            mode: FrameMode::HardOrtho,
            k,
            ansatz,
            beta: 0.0,
        }
    }

    pub fn soft(ansatz: AnsatzSpec, k: usize, beta: f64) -> Self {
        Self {
            mode: FrameMode::SoftOrtho,
            k,
            ansatz,
            beta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.ansatz.validate()?;
        if self.k == 0 {
            return Err(Error::domain("frame size K must be at least 1"));
        }
        match self.mode {
            FrameMode::Single if self.k != 1 => Err(Error::domain("single mode requires K = 1")),
            FrameMode::HardOrtho if self.ansatz.num_qubits < usize::BITS as usize
                && self.k > 1usize << self.ansatz.num_qubits =>
            {
                Err(Error::domain(format!(
                    "hard frame with K = {} exceeds 2^{}",
                    self.k, self.ansatz.num_qubits
                )))
            }
            FrameMode::SoftOrtho if !(self.beta > 0.0 && self.beta.is_finite()) => {
                Err(Error::domain("soft frames need a finite beta > 0"))
            }
            _ => Ok(()),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.ansatz.num_qubits
    }

    /// Length of the full parameter vector (`K ·` the ansatz count for soft frames).
    pub fn parameter_count(&self) -> usize {
        match self.mode {
            FrameMode::SoftOrtho => self.k * self.ansatz.parameter_count(),
            _ => self.ansatz.parameter_count(),
        }
    }

    /// Index range of member `p`'s angles within the full vector.
    pub fn member_range(&self, p: usize) -> Range<usize> {
        let n = self.ansatz.parameter_count();
        match self.mode {
            FrameMode::SoftOrtho => p * n..(p + 1) * n,
            _ => 0..n,
        }
    }

    /// Basis index of member `p`'s input state.
    pub fn input_index(&self, p: usize) -> usize {
        match self.mode {
            FrameMode::HardOrtho => p,
            _ => 0,
        }
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.parameter_count() {
            return Err(Error::domain(format!(
                "{} parameters given, frame needs {}",
                params.len(),
                self.parameter_count()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::domain("parameters must be finite"));
        }
        Ok(())
    }

    /// Circuit `U_p` with `U_p|0⟩ = |ψ_p⟩`: X gates preparing the input basis
    /// state followed by the ansatz.
    pub fn member_circuit(&self, params: &[f64], p: usize) -> Result<Circuit> {
        self.validate()?;
        self.check_params(params)?;
        if p >= self.k {
            return Err(Error::domain(format!("member {p} of a K = {} frame", self.k)));
        }
        let q = self.num_qubits();
        let mut c = Circuit::new(q);
        let input = self.input_index(p);
        for bit in 0..q {
            if input >> bit & 1 == 1 {
                c.push(Gate::X(bit))?;
            }
        }
        c.extend(&build_ansatz_circuit(&self.ansatz, &params[self.member_range(p)])?)?;
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub mode: FrameMode,
    pub states: Vec<StateVector>,
}

impl Frame {
    pub fn k(&self) -> usize {
        self.states.len()
    }
}

pub fn materialize_frame(spec: &FrameSpec, params: &[f64]) -> Result<Frame> {
    spec.validate()?;
    spec.check_params(params)?;
    let mut eval = FrameEvaluator::new(spec.clone(), PauliSumOperator::identity(spec.num_qubits(), 0.0)?)?;
    let states = eval.states(params)?;
    Ok(Frame {
        mode: spec.mode,
        states,
    })
}

/// `Σ_p ⟨ψ_p|H|ψ_p⟩`.
pub fn hard_cost(frame: &Frame, h: &PauliSumOperator) -> Result<f64> {
    let mut total = 0.0;
    for s in &frame.states {
        total += h.expectation(s)?;
    }
    Ok(total)
}

/// `(energy + β·penalty, energy, penalty)` with `penalty = Σ_{p<q} |⟨ψ_q|ψ_p⟩|²`.
pub fn soft_cost(frame: &Frame, h: &PauliSumOperator, beta: f64) -> Result<(f64, f64, f64)> {
    let energy = hard_cost(frame, h)?;
    let mut penalty = 0.0;
    for p in 0..frame.k() {
        for q in p + 1..frame.k() {
            penalty += frame.states[q].inner(&frame.states[p])?.norm_sqr();
        }
    }
    Ok((energy + beta * penalty, energy, penalty))
}

/// Gram matrix `S_pq = ⟨ψ_p|ψ_q⟩`.
pub fn pairwise_overlaps(frame: &Frame) -> DMatrix<C64> {
    let k = frame.k();
    let mut s = DMatrix::<C64>::zeros(k, k);
    for p in 0..k {
        for q in 0..k {
            s[(p, q)] = inner_slices(frame.states[p].amplitudes(), frame.states[q].amplitudes());
        }
    }
    s
}

/// Entangling layer in the cheapest form available: a CZ layer is diagonal,
/// so it reduces to one sign flip per amplitude.
#[derive(Debug, Clone)]
enum CompiledEntangler {
    Signs(Vec<bool>),
    Gates(Circuit),
}

impl CompiledEntangler {
    fn new(spec: &AnsatzSpec) -> Self {
        match spec.entangler {
            Entangler::Cz => {
                let masks: Vec<usize> = spec
                    .entangler_edges
                    .iter()
                    .map(|&(a, b)| (1 << a) | (1 << b))
                    .collect();
                let signs = (0..1usize << spec.num_qubits)
                    .map(|k| masks.iter().filter(|&&m| k & m == m).count() % 2 == 1)
                    .collect();
                CompiledEntangler::Signs(signs)
            }
            Entangler::Cnot => CompiledEntangler::Gates(spec.entangling_layer()),
        }
    }
}

#[derive(Debug, Clone)]
struct MemberCache {
    /// `layers[l]` is the state after rotation layer `l` and its entangler.
    layers: Vec<StateVector>,
    energy: Option<f64>,
}

/// Frame cost evaluator that caches every member's state after each layer.
///
/// A change to an angle in layer `l` only requires replaying layers `l..`,
/// and in soft frames only the member owning that angle. Consecutive NFT
/// updates mostly touch the same or nearby layers, so most of the circuit is
/// reused.
#[derive(Debug, Clone)]
pub struct FrameEvaluator {
    spec: FrameSpec,
    h: PauliSumOperator,
    entangler: CompiledEntangler,
    inputs: Vec<StateVector>,
    members: Vec<MemberCache>,
    cached_params: Vec<f64>,
    scratch: Vec<StateVector>,
}

impl FrameEvaluator {
    pub fn new(spec: FrameSpec, h: PauliSumOperator) -> Result<Self> {
        spec.validate()?;
        let q = spec.num_qubits();
        if h.num_qubits() != q {
            return Err(Error::domain(format!(
                "{}-qubit Hamiltonian for a {q}-qubit ansatz",
                h.num_qubits()
            )));
        }
        let inputs = (0..spec.k)
            .map(|p| StateVector::basis(q, spec.input_index(p)))
            .collect::<Result<Vec<_>>>()?;
        let members = (0..spec.k)
            .map(|_| MemberCache {
                layers: Vec::with_capacity(spec.ansatz.layers),
                energy: None,
            })
            .collect();
        Ok(Self {
            entangler: CompiledEntangler::new(&spec.ansatz),
            cached_params: vec![f64::NAN; spec.parameter_count()],
            scratch: inputs.clone(),
            inputs,
            members,
            spec,
            h,
        })
    }

    pub fn spec(&self) -> &FrameSpec {
        &self.spec
    }

    pub fn hamiltonian(&self) -> &PauliSumOperator {
        &self.h
    }

    /// Rotation layer `layer` followed by its entangler. All `Ry` gates go
    /// first; the `Rz` gates that follow them commute with `Ry` on other
    /// qubits and are applied together as one diagonal pass.
    fn rotation(&self, amps: &mut [C64], layer: usize, member_params: &[f64]) {
        let q = self.spec.num_qubits();
        let base = layer * 2 * q;
        let mut rz = Vec::with_capacity(q);
        for qubit in 0..q {
            let (sin, cos) = (0.5 * member_params[base + 2 * qubit]).sin_cos();
            apply_ry(amps, qubit, cos, sin);
            rz.push(member_params[base + 2 * qubit + 1]);
        }
        let entangle = layer + 1 < self.spec.ansatz.layers;
        match (&self.entangler, entangle) {
            (CompiledEntangler::Signs(signs), true) => apply_rz_all(amps, &rz, Some(signs)),
            (CompiledEntangler::Gates(c), true) => {
                apply_rz_all(amps, &rz, None);
                c.apply_to(amps);
            }
            (_, false) => apply_rz_all(amps, &rz, None),
        }
    }

    /// Drops cached layers that depend on entries where `params` differs
    /// from the parameters the cache was built with.
    fn sync(&mut self, params: &[f64]) -> Result<()> {
        self.spec.check_params(params)?;
        let per_layer = 2 * self.spec.num_qubits();
        for p in 0..self.spec.k {
            let range = self.spec.member_range(p);
            let first = params[range.clone()]
                .iter()
                .zip(&self.cached_params[range.clone()])
                .position(|(a, b)| a.to_bits() != b.to_bits());
            if let Some(i) = first {
                let m = &mut self.members[p];
                m.layers.truncate(i / per_layer);
                m.energy = None;
            }
        }
        self.cached_params.copy_from_slice(params);
        Ok(())
    }

    /// Extends member `p`'s cache to cover the first `upto` layers.
    fn build(&mut self, p: usize, upto: usize) {
        let range = self.spec.member_range(p);
        while self.members[p].layers.len() < upto {
            let l = self.members[p].layers.len();
            let mut s = match self.members[p].layers.last() {
                Some(prev) => prev.clone(),
                None => self.inputs[p].clone(),
            };
            let params = &self.cached_params[range.clone()];
            self.rotation(s.amplitudes_mut(), l, params);
            self.members[p].layers.push(s);
        }
    }

    fn final_energy(&mut self, p: usize) -> Result<f64> {
        self.build(p, self.spec.ansatz.layers);
        if let Some(e) = self.members[p].energy {
            return Ok(e);
        }
        let e = self.h.expectation(self.members[p].layers.last().expect("built"))?;
        self.members[p].energy = Some(e);
        Ok(e)
    }

    /// Member states at `params`.
    pub fn states(&mut self, params: &[f64]) -> Result<Vec<StateVector>> {
        self.sync(params)?;
        let layers = self.spec.ansatz.layers;
        (0..self.spec.k)
            .map(|p| {
                self.build(p, layers);
                Ok(self.members[p].layers.last().expect("built").clone())
            })
            .collect()
    }

    /// Current frame at `params`.
    pub fn frame(&mut self, params: &[f64]) -> Result<Frame> {
        Ok(Frame {
            mode: self.spec.mode,
            states: self.states(params)?,
        })
    }

    fn breakdown(&self, energy: f64, finals: &[&StateVector]) -> CostBreakdown {
        let k = finals.len();
        let mut pair_overlaps = Vec::with_capacity(k * k.saturating_sub(1) / 2);
        for p in 0..k {
            for q in p + 1..k {
                pair_overlaps.push(inner_slices(finals[q].amplitudes(), finals[p].amplitudes()).norm_sqr());
            }
        }
        let (penalty, total) = match self.spec.mode {
            FrameMode::SoftOrtho => {
                let penalty: f64 = pair_overlaps.iter().sum();
                (penalty, energy + self.spec.beta * penalty)
            }
            _ => (0.0, energy),
        };
        CostBreakdown {
            total,
            energy,
            penalty,
            pair_overlaps,
        }
    }
}

impl Objective for FrameEvaluator {
    fn num_parameters(&self) -> usize {
        self.spec.parameter_count()
    }

    fn evaluate(&mut self, params: &[f64]) -> Result<CostBreakdown> {
        self.sync(params)?;
        let mut energy = 0.0;
        for p in 0..self.spec.k {
            energy += self.final_energy(p)?;
        }
        let finals: Vec<&StateVector> = self
            .members
            .iter()
            .map(|m| m.layers.last().expect("built"))
            .collect();
        Ok(self.breakdown(energy, &finals))
    }

    fn evaluate_with(&mut self, params: &[f64], index: usize, value: f64) -> Result<CostBreakdown> {
        self.sync(params)?;
        if index >= params.len() || !value.is_finite() {
            return Err(Error::domain(format!("cannot set parameter {index} to {value}")));
        }
        let n = self.spec.ansatz.parameter_count();
        let layers = self.spec.ansatz.layers;
        let (owner, local) = match self.spec.mode {
            FrameMode::SoftOrtho => (Some(index / n), index % n),
            _ => (None, index),
        };
        let start = self.spec.ansatz.layer_of(local);
        let mut energy = 0.0;
        let mut scratch = std::mem::take(&mut self.scratch);
        for p in 0..self.spec.k {
            if owner.is_some_and(|o| o != p) {
                energy += self.final_energy(p)?;
                continue;
            }
            self.build(p, start);
            let mut member: Vec<f64> = self.cached_params[self.spec.member_range(p)].to_vec();
            member[local] = value;
            let src = match start {
                0 => &self.inputs[p],
                l => &self.members[p].layers[l - 1],
            };
            scratch[p].amplitudes_mut().copy_from_slice(src.amplitudes());
            for l in start..layers {
                self.rotation(scratch[p].amplitudes_mut(), l, &member);
            }
            energy += self.h.expectation(&scratch[p])?;
        }
        let finals: Vec<&StateVector> = (0..self.spec.k)
            .map(|p| {
                if owner.is_some_and(|o| o != p) {
                    self.members[p].layers.last().expect("built")
                } else {
                    &scratch[p]
                }
            })
            .collect();
        let out = self.breakdown(energy, &finals);
        self.scratch = scratch;
        Ok(out)
    }
}
