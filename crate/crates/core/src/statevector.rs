//! Dense statevector storage and the amplitude-level kernels.
//!
//! Qubit `i` is bit `i` of the amplitude index (qubit 0 is the least
//! significant bit). When an ancilla is attached to a register it is always
//! the highest-index qubit, so the two ancilla branches are the lower and
//! upper halves of the amplitude array.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::rng;

/// Largest register the simulator accepts (2^30 amplitudes = 16 GiB).
pub const MAX_QUBITS: usize = 30;

pub(crate) type Mat2 = [[C64; 2]; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<C64>,
}

/// Outcome counts of repeated single-qubit measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub m0: u64,
    pub m1: u64,
}

fn check_qubits(num_qubits: usize) -> Result<()> {
    if num_qubits == 0 || num_qubits > MAX_QUBITS {
        return Err(Error::domain(format!(
            "qubit count {num_qubits} outside 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

impl StateVector {
    /// The computational basis state `|index⟩` on `num_qubits` qubits.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        check_qubits(num_qubits)?;
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(Error::domain(format!(
                "basis index {index} out of range for {num_qubits} qubits"
            )));
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
        amplitudes[index] = C64::new(1.0, 0.0);
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    pub fn zero(num_qubits: usize) -> Result<Self> {
        Self::basis(num_qubits, 0)
    }

    pub fn from_amplitudes(num_qubits: usize, amplitudes: Vec<C64>) -> Result<Self> {
        check_qubits(num_qubits)?;
        if amplitudes.len() != 1usize << num_qubits {
            return Err(Error::domain(format!(
                "{} amplitudes given for {num_qubits} qubits",
                amplitudes.len()
            )));
        }
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Rescales to unit norm. Fails on the zero vector.
    pub fn normalize(&mut self) -> Result<()> {
        let norm = self.norm_sqr().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::numerical("cannot normalize a zero or non-finite vector"));
        }
        let inv = 1.0 / norm;
        for a in &mut self.amplitudes {
            *a *= inv;
        }
        Ok(())
    }

    /// `⟨self|other⟩ = Σ conj(self_i) other_i`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::domain(format!(
                "inner product between {} and {} qubit states",
                self.num_qubits, other.num_qubits
            )));
        }
        Ok(inner_slices(&self.amplitudes, &other.amplitudes))
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.num_qubits)?;
        apply_gate_slice(&mut self.amplitudes, gate, Condition::ALWAYS);
        Ok(())
    }

    pub fn apply_circuit(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.num_qubits() != self.num_qubits {
            return Err(Error::domain(format!(
                "{}-qubit circuit applied to {}-qubit state",
                circuit.num_qubits(),
                self.num_qubits
            )));
        }
        circuit.apply_to(&mut self.amplitudes);
        Ok(())
    }

    /// Marginal probability that `qubit` reads `value`.
    pub fn probability(&self, qubit: usize, value: bool) -> Result<f64> {
        if qubit >= self.num_qubits {
            return Err(Error::domain(format!(
                "qubit {qubit} out of range for {} qubits",
                self.num_qubits
            )));
        }
        let bit = 1usize << qubit;
        let want = if value { bit } else { 0 };
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit == want)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Simulates `shots` projective measurements of one qubit.
    pub fn sample_qubit(&self, qubit: usize, shots: u64, seed: u64) -> Result<Counts> {
        if shots == 0 {
            return Err(Error::domain("shots must be at least 1"));
        }
        let p0 = self.probability(qubit, false)?;
        let mut stream = rng::stream(seed);
        let m0 = rng::binomial(&mut stream, shots, p0);
        Ok(Counts {
            m0,
            m1: shots - m0,
        })
    }

    /// `a·self + b·other`, used to build superposition states.
    pub fn linear_combination(&self, a: C64, other: &StateVector, b: C64) -> Result<StateVector> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::domain("linear combination of states with different sizes"));
        }
        let amplitudes = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(StateVector {
            num_qubits: self.num_qubits,
            amplitudes,
        })
    }
}

/// The basis state `|index⟩`.
pub fn init_basis_state(num_qubits: usize, index: usize) -> Result<StateVector> {
    StateVector::basis(num_qubits, index)
}

/// Convenience wrapper matching the functional reading of the protocol.
pub fn inner_product(a: &StateVector, b: &StateVector) -> Result<C64> {
    a.inner(b)
}

/// Samples the ancilla (or any) qubit of a register.
pub fn sample_ancilla(state: &StateVector, ancilla: usize, shots: u64, seed: u64) -> Result<Counts> {
    state.sample_qubit(ancilla, shots, seed)
}

pub(crate) fn inner_slices(a: &[C64], b: &[C64]) -> C64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    C64::new(re, im)
}

/// Restricts a kernel to amplitudes whose index satisfies `i & mask == want`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Condition {
    pub mask: usize,
    pub want: usize,
}

impl Condition {
    pub const ALWAYS: Condition = Condition { mask: 0, want: 0 };

    pub fn and(self, qubit: usize, value: bool) -> Condition {
        let bit = 1usize << qubit;
        Condition {
            mask: self.mask | bit,
            want: if value { self.want | bit } else { self.want & !bit },
        }
    }

    fn holds(self, i: usize) -> bool {
        i & self.mask == self.want
    }
}

pub(crate) fn apply_gate_slice(amps: &mut [C64], gate: &Gate, cond: Condition) {
    match *gate {
        Gate::Cz { a, b } => apply_cz(amps, a, b, cond),
        Gate::Cnot { control, target } => {
            apply_single(amps, target, &Gate::pauli_x_matrix(), cond.and(control, true))
        }
        ref g => {
            let (qubit, m) = g.single_qubit_matrix().expect("two-qubit gates handled above");
            apply_single(amps, qubit, &m, cond)
        }
    }
}

pub(crate) fn apply_single(amps: &mut [C64], target: usize, m: &Mat2, cond: Condition) {
    let stride = 1usize << target;
    let [[m00, m01], [m10, m11]] = *m;
    if cond.mask == 0 {
        for chunk in amps.chunks_exact_mut(2 * stride) {
            let (lo, hi) = chunk.split_at_mut(stride);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = m00 * x + m01 * y;
                *b = m10 * x + m11 * y;
            }
        }
        return;
    }
    for (c, chunk) in amps.chunks_exact_mut(2 * stride).enumerate() {
        let base = c * 2 * stride;
        let (lo, hi) = chunk.split_at_mut(stride);
        for (k, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
            if !cond.holds(base + k) {
                continue;
            }
            let (x, y) = (*a, *b);
            *a = m00 * x + m01 * y;
            *b = m10 * x + m11 * y;
        }
    }
}

/// `Ry` with precomputed `cos(θ/2)`, `sin(θ/2)`; the matrix is real, which
/// halves the arithmetic of the general 2×2 kernel.
pub(crate) fn apply_ry(amps: &mut [C64], target: usize, cos: f64, sin: f64) {
    let stride = 1usize << target;
    for chunk in amps.chunks_exact_mut(2 * stride) {
        let (lo, hi) = chunk.split_at_mut(stride);
        for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x, y) = (*a, *b);
            *a = C64::new(cos * x.re - sin * y.re, cos * x.im - sin * y.im);
            *b = C64::new(sin * x.re + cos * y.re, sin * x.im + cos * y.im);
        }
    }
}

/// `Rz(angles[q])` on every qubit `q` at once, optionally followed by a sign
/// flip where `signs[k]` is set. The diagonal factorizes over qubits, so it
/// is assembled from two half-register phase tables.
pub(crate) fn apply_rz_all(amps: &mut [C64], angles: &[f64], signs: Option<&[bool]>) {
    let n = angles.len();
    let low_bits = n / 2;
    let table = |range: std::ops::Range<usize>| -> Vec<C64> {
        let width = range.len();
        (0..1usize << width)
            .map(|k| {
                let phase: f64 = range
                    .clone()
                    .enumerate()
                    .map(|(i, q)| if k >> i & 1 == 1 { 0.5 * angles[q] } else { -0.5 * angles[q] })
                    .sum();
                C64::from_polar(1.0, phase)
            })
            .collect()
    };
    let lo = table(0..low_bits);
    let hi = table(low_bits..n);
    let lo_mask = (1usize << low_bits) - 1;
    match signs {
        Some(signs) => {
            for (k, (a, &neg)) in amps.iter_mut().zip(signs).enumerate() {
                let f = lo[k & lo_mask] * hi[k >> low_bits];
                *a = if neg { -(*a * f) } else { *a * f };
            }
        }
        None => {
            for (k, a) in amps.iter_mut().enumerate() {
                *a *= lo[k & lo_mask] * hi[k >> low_bits];
            }
        }
    }
}

fn apply_cz(amps: &mut [C64], a: usize, b: usize, cond: Condition) {
    let both = (1usize << a) | (1usize << b);
    for (i, amp) in amps.iter_mut().enumerate() {
        if i & both == both && cond.holds(i) {
            *amp = -*amp;
        }
    }
}

pub(crate) fn matmul2(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}
