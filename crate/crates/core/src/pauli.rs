//! Weighted Pauli strings and their sums.
//!
//! A string acts on a basis state as `P|k⟩ = i^{nY} (-1)^{popcount(k & z)} |k ^ x⟩`
//! where `x` marks the X/Y letters, `z` the Z/Y letters and `nY` counts Y
//! letters (using `Y = iXZ`).

use std::fmt;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statevector::StateVector;

/// Tolerated imaginary residue of an expectation value before it is treated
/// as an internal inconsistency.
pub const IMAGINARY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliString {
    pub coefficient: f64,
    /// `letters[i]` acts on qubit `i`.
    pub letters: Vec<Pauli>,
}

impl PauliString {
    pub fn new(coefficient: f64, letters: Vec<Pauli>) -> Self {
        Self {
            coefficient,
            letters,
        }
    }

    /// Builds a string from `(qubit, letter)` pairs; unlisted qubits get `I`.
    pub fn from_sparse(num_qubits: usize, coefficient: f64, factors: &[(usize, Pauli)]) -> Result<Self> {
        let mut letters = vec![Pauli::I; num_qubits];
        for &(q, p) in factors {
            if q >= num_qubits {
                return Err(Error::domain(format!(
                    "Pauli factor on qubit {q} for a {num_qubits}-qubit string"
                )));
            }
            letters[q] = p;
        }
        Ok(Self::new(coefficient, letters))
    }

    /// Parses letters where character `i` is qubit `i`, e.g. `"XIZ"`.
    pub fn from_letters(coefficient: f64, text: &str) -> Result<Self> {
        let letters = text
            .chars()
            .map(|c| match c {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(Error::domain(format!("unknown Pauli letter {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(coefficient, letters))
    }

    pub fn num_qubits(&self) -> usize {
        self.letters.len()
    }

    fn masks(&self) -> (usize, usize, u32) {
        let mut x = 0usize;
        let mut z = 0usize;
        let mut ny = 0u32;
        for (q, p) in self.letters.iter().enumerate() {
            match p {
                Pauli::I => {}
                Pauli::X => x |= 1 << q,
                Pauli::Z => z |= 1 << q,
                Pauli::Y => {
                    x |= 1 << q;
                    z |= 1 << q;
                    ny += 1;
                }
            }
        }
        (x, z, ny)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+} ", self.coefficient)?;
        for p in &self.letters {
            write!(f, "{p:?}")?;
        }
        Ok(())
    }
}

/// Terms sharing one flip mask, stored as (z mask, coefficient × i^nY).
#[derive(Debug, Clone)]
struct FlipGroup {
    x_mask: usize,
    terms: Vec<(usize, C64)>,
}

/// A real-weighted sum of Pauli strings; Hermitian by construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawPauliSum", into = "RawPauliSum")]
pub struct PauliSumOperator {
    num_qubits: usize,
    terms: Vec<PauliString>,
    #[serde(skip)]
    groups: Vec<FlipGroup>,
    #[serde(skip)]
    diagonal: OnceLock<Vec<f64>>,
    /// Terms used by the expectation kernel, excluding those evaluated in
    /// the Hadamard-transformed basis.
    #[serde(skip)]
    expectation_groups: Vec<FlipGroup>,
    /// `(x mask, coefficient)` of pure X strings evaluated as a diagonal in
    /// the Hadamard basis.
    #[serde(skip)]
    x_terms: Vec<(usize, f64)>,
    #[serde(skip)]
    x_diagonal: OnceLock<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct RawPauliSum {
    num_qubits: usize,
    terms: Vec<PauliString>,
}

impl TryFrom<RawPauliSum> for PauliSumOperator {
    type Error = Error;
    fn try_from(raw: RawPauliSum) -> Result<Self> {
        PauliSumOperator::new(raw.num_qubits, raw.terms)
    }
}

impl From<PauliSumOperator> for RawPauliSum {
    fn from(op: PauliSumOperator) -> Self {
        RawPauliSum {
            num_qubits: op.num_qubits,
            terms: op.terms,
        }
    }
}

impl PartialEq for PauliSumOperator {
    fn eq(&self, other: &Self) -> bool {
        self.num_qubits == other.num_qubits && self.terms == other.terms
    }
}

fn i_power(n: u32) -> C64 {
    match n % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

fn group_terms<'a>(terms: impl Iterator<Item = &'a PauliString>) -> Vec<FlipGroup> {
    let mut groups: Vec<FlipGroup> = Vec::new();
    for t in terms {
        let (x, z, ny) = t.masks();
        let weight = i_power(ny) * t.coefficient;
        match groups.iter_mut().find(|g| g.x_mask == x) {
            Some(g) => g.terms.push((z, weight)),
            None => groups.push(FlipGroup {
                x_mask: x,
                terms: vec![(z, weight)],
            }),
        }
    }
    groups
}

/// Unnormalized Walsh–Hadamard transform (`2^{q/2} H^{⊗q}`) in place.
fn walsh_hadamard(amps: &mut [C64]) {
    let mut stride = 1;
    while stride < amps.len() {
        for chunk in amps.chunks_exact_mut(2 * stride) {
            let (lo, hi) = chunk.split_at_mut(stride);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        stride *= 2;
    }
}

#[inline]
fn parity_sign(k: usize, z: usize) -> f64 {
    if (k & z).count_ones() & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl PauliSumOperator {
    pub fn new(num_qubits: usize, terms: Vec<PauliString>) -> Result<Self> {
        if num_qubits == 0 {
            return Err(Error::domain("operator needs at least one qubit"));
        }
        for t in &terms {
            if t.num_qubits() != num_qubits {
                return Err(Error::domain(format!(
                    "term {t} has {} letters, expected {num_qubits}",
                    t.num_qubits()
                )));
            }
            if !t.coefficient.is_finite() {
                return Err(Error::domain(format!("term {t} has a non-finite coefficient")));
            }
        }
        let groups = group_terms(terms.iter());
        // With many X-only strings it is cheaper to rotate a copy of the state
        // with H on every qubit (q add/subtract passes) and read all of them
        // off one diagonal than to make one flip pass per string.
        let x_only: Vec<(usize, f64)> = terms
            .iter()
            .filter_map(|t| {
                let (x, z, _) = t.masks();
                (x != 0 && z == 0).then_some((x, t.coefficient))
            })
            .collect();
        let (expectation_groups, x_terms) = if x_only.len() >= 2 && 2 * x_only.len() >= num_qubits {
            let rest = terms.iter().filter(|t| {
                let (x, z, _) = t.masks();
                !(x != 0 && z == 0)
            });
            (group_terms(rest), x_only)
        } else {
            (groups.clone(), Vec::new())
        };
        Ok(Self {
            num_qubits,
            terms,
            groups,
            diagonal: OnceLock::new(),
            expectation_groups,
            x_terms,
            x_diagonal: OnceLock::new(),
        })
    }

    /// `c · I` on `num_qubits` qubits.
    pub fn identity(num_qubits: usize, c: f64) -> Result<Self> {
        Self::new(num_qubits, vec![PauliString::new(c, vec![Pauli::I; num_qubits])])
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn terms(&self) -> &[PauliString] {
        &self.terms
    }

    pub fn dim(&self) -> usize {
        1usize << self.num_qubits
    }

    /// Term-wise concatenation `self + other`.
    pub fn plus(&self, other: &PauliSumOperator) -> Result<Self> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::domain("adding operators on different registers"));
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self::new(self.num_qubits, terms)
    }

    /// `Z_a ⊗ self`, with the ancilla `a` appended as the new highest qubit.
    pub fn with_ancilla_z(&self) -> Result<Self> {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut letters = t.letters.clone();
                letters.push(Pauli::Z);
                PauliString::new(t.coefficient, letters)
            })
            .collect();
        Self::new(self.num_qubits + 1, terms)
    }

    /// True when the matrix in the computational basis is real.
    pub fn is_real(&self) -> bool {
        self.terms.iter().all(|t| t.masks().2 % 2 == 0)
    }

    /// Sum of the flip-free (diagonal) terms evaluated on every basis index.
    fn diagonal(&self) -> &[f64] {
        self.diagonal.get_or_init(|| {
            let mut diag = vec![0.0; self.dim()];
            if let Some(g) = self.groups.iter().find(|g| g.x_mask == 0) {
                for (k, d) in diag.iter_mut().enumerate() {
                    *d = g.terms.iter().map(|&(z, w)| w.re * parity_sign(k, z)).sum();
                }
            }
            diag
        })
    }

    fn check_state(&self, state: &StateVector) -> Result<()> {
        if state.num_qubits() != self.num_qubits {
            return Err(Error::domain(format!(
                "{}-qubit operator on {}-qubit state",
                self.num_qubits,
                state.num_qubits()
            )));
        }
        Ok(())
    }

    /// `⟨state|self|state⟩` with the imaginary part kept.
    pub fn expectation_complex(&self, state: &StateVector) -> Result<C64> {
        self.check_state(state)?;
        let amps = state.amplitudes();
        let mut total = C64::new(0.0, 0.0);
        for g in &self.expectation_groups {
            if g.x_mask == 0 {
                let diag = self.diagonal();
                total += amps
                    .iter()
                    .zip(diag)
                    .map(|(a, d)| a.norm_sqr() * d)
                    .sum::<f64>();
                continue;
            }
            for &(z, w) in &g.terms {
                let mut acc = C64::new(0.0, 0.0);
                if z == 0 {
                    for (k, a) in amps.iter().enumerate() {
                        acc += amps[k ^ g.x_mask].conj() * a;
                    }
                } else {
                    for (k, a) in amps.iter().enumerate() {
                        acc += amps[k ^ g.x_mask].conj() * a * parity_sign(k, z);
                    }
                }
                total += w * acc;
            }
        }
        if !self.x_terms.is_empty() {
            let table = self.x_diagonal.get_or_init(|| {
                (0..self.dim())
                    .map(|k| self.x_terms.iter().map(|&(x, c)| c * parity_sign(k, x)).sum())
                    .collect()
            });
            let mut rotated = amps.to_vec();
            walsh_hadamard(&mut rotated);
            let sum: f64 = rotated.iter().zip(table).map(|(a, d)| a.norm_sqr() * d).sum();
            total += sum / self.dim() as f64;
        }
        Ok(total)
    }

    /// Real expectation value; fails if the imaginary residue exceeds
    /// [`IMAGINARY_TOLERANCE`].
    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        let e = self.expectation_complex(state)?;
        if e.im.abs() > IMAGINARY_TOLERANCE || !e.re.is_finite() {
            return Err(Error::numerical(format!(
                "expectation value {e} is not real; operator or state corrupted"
            )));
        }
        Ok(e.re)
    }

    /// `⟨state|P_t|state⟩` for every term `t`, without its coefficient.
    pub fn term_expectations(&self, state: &StateVector) -> Result<Vec<f64>> {
        self.check_state(state)?;
        let amps = state.amplitudes();
        self.terms
            .iter()
            .map(|t| {
                let (x, z, ny) = t.masks();
                let mut acc = C64::new(0.0, 0.0);
                for (k, a) in amps.iter().enumerate() {
                    acc += amps[k ^ x].conj() * a * parity_sign(k, z);
                }
                let e = i_power(ny) * acc;
                if e.im.abs() > IMAGINARY_TOLERANCE {
                    return Err(Error::numerical(format!("Pauli expectation {e} is not real")));
                }
                Ok(e.re)
            })
            .collect()
    }

    /// `out = self · input` on raw amplitude slices.
    pub fn apply_into(&self, input: &[C64], out: &mut [C64]) {
        debug_assert_eq!(input.len(), self.dim());
        debug_assert_eq!(out.len(), self.dim());
        out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
        for g in &self.groups {
            if g.x_mask == 0 {
                for ((o, v), d) in out.iter_mut().zip(input).zip(self.diagonal()) {
                    *o += v * d;
                }
                continue;
            }
            for (k, v) in input.iter().enumerate() {
                let mut w = C64::new(0.0, 0.0);
                for &(z, c) in &g.terms {
                    w += c * parity_sign(k, z);
                }
                out[k ^ g.x_mask] += w * v;
            }
        }
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        self.check_state(state)?;
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        self.apply_into(state.amplitudes(), &mut out);
        StateVector::from_amplitudes(self.num_qubits, out)
    }

    /// `⟨bra|self|ket⟩`.
    pub fn matrix_element(&self, bra: &StateVector, ket: &StateVector) -> Result<C64> {
        self.check_state(bra)?;
        let applied = self.apply(ket)?;
        bra.inner(&applied)
    }

    /// Dense matrix assembled column by column from `self|k⟩`.
    pub fn dense_matrix(&self) -> DMatrix<C64> {
        let n = self.dim();
        let mut m = DMatrix::<C64>::zeros(n, n);
        for k in 0..n {
            for g in &self.groups {
                let mut w = C64::new(0.0, 0.0);
                for &(z, c) in &g.terms {
                    w += c * parity_sign(k, z);
                }
                m[(k ^ g.x_mask, k)] += w;
            }
        }
        m
    }

    /// Real part of the dense matrix, valid when [`Self::is_real`] holds.
    pub fn dense_real_matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            for g in &self.groups {
                let mut w = 0.0;
                for &(z, c) in &g.terms {
                    w += c.re * parity_sign(k, z);
                }
                m[(k ^ g.x_mask, k)] += w;
            }
        }
        m
    }
}

/// Free-function form of [`PauliSumOperator::expectation`].
pub fn expectation(state: &StateVector, op: &PauliSumOperator) -> Result<f64> {
    op.expectation(state)
}
