//! End-of-run subspace diagonalization.
//!
//! Off-diagonal overlaps `S_pq = ⟨ψ_p|ψ_q⟩` and matrix elements
//! `H_pq = ⟨ψ_p|H|ψ_q⟩` are read out with a generalized Hadamard test: an
//! ancilla in `|+⟩` selects `U_p` (ancilla 0) or `U_q` (ancilla 1), an
//! optional `S†` and a final Hadamard on the ancilla give
//!
//! `P(m=0|b) = ½(1 + Re((-i)^b S_pq))` and `⟨Z_a ⊗ H⟩_b = Re((-i)^b H_pq)`,
//!
//! so `b = 0` yields the real parts and `b = 1` the imaginary parts. The
//! `K × K` problem `H c = λ S c` is then solved by canonical
//! orthogonalization.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::frame::{FrameMode, FrameSpec};
use crate::pauli::PauliSumOperator;
use crate::rng;
use crate::statevector::StateVector;

/// S eigenvalues below `S_CUTOFF ·` the largest one are dropped.
pub const S_CUTOFF: f64 = 1e-6;
/// S eigenvalues below this are reported as an inconsistent estimate.
pub const NEGATIVE_S_TOLERANCE: f64 = -1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimationMode {
    /// Exact outcome probabilities and expectation values.
    #[default]
    Analytic,
    /// `shots` samples per ancilla probability and per Pauli term.
    Shots { shots: u64, seed: u64 },
}

impl EstimationMode {
    pub fn validate(&self) -> Result<()> {
        match self {
            EstimationMode::Shots { shots: 0, .. } => Err(Error::domain("shots must be at least 1")),
            _ => Ok(()),
        }
    }

    /// Same mode with the seed mixed with `tag`, for independent sub-estimates.
    fn derived(self, tag: u64) -> Self {
        match self {
            EstimationMode::Analytic => self,
            EstimationMode::Shots { shots, seed } => EstimationMode::Shots {
                shots,
                seed: rng::derive_seed(seed, tag),
            },
        }
    }
}

/// The `(q+1)`-qubit output of the Hadamard-test circuit; the ancilla is qubit `q`.
pub fn hadamard_test_state(u_p: &Circuit, u_q: &Circuit, b: bool) -> Result<StateVector> {
    let q = u_p.num_qubits();
    if u_q.num_qubits() != q {
        return Err(Error::domain(format!(
            "Hadamard test with {q}- and {}-qubit circuits",
            u_q.num_qubits()
        )));
    }
    let a = q;
    let mut c = Circuit::new(q + 1);
    c.push(Gate::H(a))?;
    c.push_controlled(a, false, u_p.clone())?;
    c.push_controlled(a, true, u_q.clone())?;
    if b {
        c.push(Gate::SDagger(a))?;
    }
    c.push(Gate::H(a))?;
    let mut s = StateVector::zero(q + 1)?;
    s.apply_circuit(&c)?;
    Ok(s)
}

/// `P(m=0)` on the ancilla, exact or as an empirical frequency.
fn ancilla_zero_probability(state: &StateVector, mode: EstimationMode) -> Result<f64> {
    let a = state.num_qubits() - 1;
    match mode {
        EstimationMode::Analytic => state.probability(a, false),
        EstimationMode::Shots { shots, seed } => {
            let counts = state.sample_qubit(a, shots, seed)?;
            Ok(counts.m0 as f64 / shots as f64)
        }
    }
}

/// `⟨op⟩`, exact or estimated term by term: each Pauli string is measured
/// `shots` times in its eigenbasis and contributes `c · (2 m₊/n - 1)`.
fn measured_expectation(op: &PauliSumOperator, state: &StateVector, mode: EstimationMode) -> Result<f64> {
    match mode {
        EstimationMode::Analytic => op.expectation(state),
        EstimationMode::Shots { shots, seed } => {
            let exact = op.term_expectations(state)?;
            let mut stream = rng::stream(seed);
            let mut total = 0.0;
            for (t, e) in op.terms().iter().zip(exact) {
                let p_plus = 0.5 * (1.0 + e);
                let m = rng::binomial(&mut stream, shots, p_plus);
                total += t.coefficient * (2.0 * m as f64 / shots as f64 - 1.0);
            }
            Ok(total)
        }
    }
}

/// `S_pq = ⟨ψ_p|ψ_q⟩` from the Hadamard test.
pub fn estimate_overlap_entry(u_p: &Circuit, u_q: &Circuit, mode: EstimationMode) -> Result<C64> {
    mode.validate()?;
    let mut parts = [0.0; 2];
    for (b, part) in parts.iter_mut().enumerate() {
        let state = hadamard_test_state(u_p, u_q, b == 1)?;
        let p0 = ancilla_zero_probability(&state, mode.derived(b as u64))?;
        *part = 2.0 * p0 - 1.0;
    }
    Ok(C64::new(parts[0], parts[1]))
}

/// `H_pq = ⟨H̃⟩_{b=0} + i⟨H̃⟩_{b=1}` with `H̃ = Z_ancilla ⊗ H`.
pub fn estimate_hamiltonian_entry(
    u_p: &Circuit,
    u_q: &Circuit,
    h: &PauliSumOperator,
    mode: EstimationMode,
) -> Result<C64> {
    mode.validate()?;
    if h.num_qubits() != u_p.num_qubits() {
        return Err(Error::domain("Hamiltonian and circuits act on different registers"));
    }
    let h_tilde = h.with_ancilla_z()?;
    let mut parts = [0.0; 2];
    for (b, part) in parts.iter_mut().enumerate() {
        let state = hadamard_test_state(u_p, u_q, b == 1)?;
        *part = measured_expectation(&h_tilde, &state, mode.derived(b as u64))?;
    }
    Ok(C64::new(parts[0], parts[1]))
}

/// The `K × K` matrices of the truncated problem `H c = λ S c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedProblem {
    #[serde(with = "complex_matrix")]
    pub h: DMatrix<C64>,
    #[serde(with = "complex_matrix")]
    pub s: DMatrix<C64>,
}

impl TruncatedProblem {
    pub fn k(&self) -> usize {
        self.h.nrows()
    }

    /// Eigenvalues of `S`, ascending.
    pub fn s_eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = SymmetricEigen::new(self.s.clone()).eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Largest `|M - M†|` entry over both matrices.
    pub fn hermiticity_defect(&self) -> f64 {
        let defect = |m: &DMatrix<C64>| (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        defect(&self.h).max(defect(&self.s))
    }
}

/// Hard frames: `H_pq` from the superposition states `(|p⟩ + i^b|q⟩)/√2`
/// prepared directly in the register and evolved with `U`. Their energies
/// are `½(H_pp + H_qq) + Re(i^b H_pq)`, i.e. `+Re H_pq` for `b = 0` and
/// `-Im H_pq` for `b = 1`. `S` is the identity.
pub fn estimate_hard_offdiagonals(
    u: &Circuit,
    k: usize,
    h: &PauliSumOperator,
    mode: EstimationMode,
) -> Result<TruncatedProblem> {
    mode.validate()?;
    let q = u.num_qubits();
    if h.num_qubits() != q {
        return Err(Error::domain("Hamiltonian and circuit act on different registers"));
    }
    if k == 0 || (q < usize::BITS as usize && k > 1usize << q) {
        return Err(Error::domain(format!("K = {k} invalid for {q} qubits")));
    }
    let mut hm = DMatrix::<C64>::zeros(k, k);
    let mut diag = vec![0.0; k];
    for (p, d) in diag.iter_mut().enumerate() {
        let mut s = StateVector::basis(q, p)?;
        s.apply_circuit(u)?;
        *d = measured_expectation(h, &s, mode.derived(pair_tag(p, p, 0)))?;
        hm[(p, p)] = C64::new(*d, 0.0);
    }
    let r = C64::new(FRAC_1_SQRT_2, 0.0);
    for p in 0..k {
        for qq in p + 1..k {
            let mean = 0.5 * (diag[p] + diag[qq]);
            let mut e = [0.0; 2];
            for (b, eb) in e.iter_mut().enumerate() {
                let phase = if b == 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 1.0) };
                let mut amps = vec![C64::new(0.0, 0.0); 1 << q];
                amps[p] = r;
                amps[qq] = r * phase;
                let mut s = StateVector::from_amplitudes(q, amps)?;
                s.apply_circuit(u)?;
                *eb = measured_expectation(h, &s, mode.derived(pair_tag(p, qq, 1 + b as u64)))?;
            }
            let hpq = C64::new(e[0] - mean, -(e[1] - mean));
            hm[(p, qq)] = hpq;
            hm[(qq, p)] = hpq.conj();
        }
    }
    Ok(TruncatedProblem {
        h: hm,
        s: DMatrix::identity(k, k),
    })
}

fn pair_tag(p: usize, q: usize, kind: u64) -> u64 {
    ((p as u64) << 40) ^ ((q as u64) << 20) ^ kind
}

/// General frames: diagonal `H_pp` as plain expectations, `S_pp = 1`, and
/// the upper triangle from Hadamard tests, mirrored to the lower triangle.
pub fn estimate_subspace_problem(
    circuits: &[Circuit],
    h: &PauliSumOperator,
    mode: EstimationMode,
) -> Result<TruncatedProblem> {
    mode.validate()?;
    let k = circuits.len();
    if k == 0 {
        return Err(Error::domain("empty frame"));
    }
    let q = h.num_qubits();
    let mut hm = DMatrix::<C64>::zeros(k, k);
    let mut sm = DMatrix::<C64>::identity(k, k);
    for (p, c) in circuits.iter().enumerate() {
        let mut s = StateVector::zero(q)?;
        s.apply_circuit(c)?;
        hm[(p, p)] = C64::new(measured_expectation(h, &s, mode.derived(pair_tag(p, p, 0)))?, 0.0);
    }
    for p in 0..k {
        for qq in p + 1..k {
            let spq = estimate_overlap_entry(&circuits[p], &circuits[qq], mode.derived(pair_tag(p, qq, 3)))?;
            let hpq = estimate_hamiltonian_entry(&circuits[p], &circuits[qq], h, mode.derived(pair_tag(p, qq, 4)))?;
            sm[(p, qq)] = spq;
            sm[(qq, p)] = spq.conj();
            hm[(p, qq)] = hpq;
            hm[(qq, p)] = hpq.conj();
        }
    }
    Ok(TruncatedProblem { h: hm, s: sm })
}

/// Measures the truncated problem of a frame with the route appropriate to
/// its mode: superposition states for hard frames, Hadamard tests otherwise.
pub fn estimate_frame_problem(
    spec: &FrameSpec,
    params: &[f64],
    h: &PauliSumOperator,
    mode: EstimationMode,
) -> Result<TruncatedProblem> {
    spec.validate()?;
    match spec.mode {
        FrameMode::HardOrtho => {
            let u = crate::ansatz::build_ansatz_circuit(&spec.ansatz, params)?;
            estimate_hard_offdiagonals(&u, spec.k, h, mode)
        }
        FrameMode::Single | FrameMode::SoftOrtho => {
            let circuits = (0..spec.k)
                .map(|p| spec.member_circuit(params, p))
                .collect::<Result<Vec<_>>>()?;
            estimate_subspace_problem(&circuits, h, mode)
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundSolution {
    pub lambda0: f64,
    /// `c*` with `|Ψ₀⟩ ∝ Σ_p c*_p |ψ_p⟩`.
    pub coefficients: Vec<C64>,
    #[serde(skip)]
    pub assembled_state: Option<StateVector>,
    /// Ascending eigenvalues of the reduced problem.
    pub eigenvalues: Vec<f64>,
    pub retained_rank: usize,
    pub min_s_eigenvalue: f64,
}

impl GroundSolution {
    pub fn state(&self) -> Result<&StateVector> {
        self.assembled_state
            .as_ref()
            .ok_or_else(|| Error::capability("solution carries no assembled state"))
    }
}

/// Solves `H c = λ S c` by canonical orthogonalization and assembles
/// `|Ψ₀⟩ = Σ_p c*_p |ψ_p⟩ / ‖·‖` from the frame `states`.
pub fn solve_generalized(problem: &TruncatedProblem, states: &[StateVector]) -> Result<GroundSolution> {
    let k = problem.k();
    if k == 0 || problem.s.shape() != (k, k) || problem.h.shape() != (k, k) {
        return Err(Error::domain("truncated problem matrices must be square and equal-sized"));
    }
    if !states.is_empty() && states.len() != k {
        return Err(Error::domain(format!("{} states for a K = {k} problem", states.len())));
    }
    if problem.h.iter().chain(problem.s.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::numerical("truncated problem has non-finite entries"));
    }
    let herm = |m: &DMatrix<C64>| (m + m.adjoint()) * C64::new(0.5, 0.0);
    let s_eig = SymmetricEigen::new(herm(&problem.s));
    let s_vals: Vec<f64> = s_eig.eigenvalues.iter().copied().collect();
    let s_min = s_vals.iter().copied().fold(f64::INFINITY, f64::min);
    let s_max = s_vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if s_min < NEGATIVE_S_TOLERANCE {
        return Err(Error::InconsistentEstimate(format!(
            "overlap matrix has eigenvalue {s_min:.3e}"
        )));
    }
    if !(s_max > 0.0) {
        return Err(Error::DegenerateSubspace("overlap matrix has no positive eigenvalue".into()));
    }
    let kept: Vec<usize> = (0..k).filter(|&i| s_vals[i] > S_CUTOFF * s_max).collect();
    if kept.is_empty() {
        return Err(Error::DegenerateSubspace("no overlap mode above the cutoff".into()));
    }
    let r = kept.len();
    let mut x = DMatrix::<C64>::zeros(k, r);
    for (col, &i) in kept.iter().enumerate() {
        let scale = 1.0 / s_vals[i].sqrt();
        for row in 0..k {
            x[(row, col)] = s_eig.eigenvectors[(row, i)] * scale;
        }
    }
    let reduced = x.adjoint() * herm(&problem.h) * &x;
    let h_eig = SymmetricEigen::new(herm(&reduced));
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| h_eig.eigenvalues[a].total_cmp(&h_eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| h_eig.eigenvalues[i]).collect();
    let y = h_eig.eigenvectors.column(order[0]);
    let c = &x * y;
    let coefficients: Vec<C64> = c.iter().copied().collect();
    let assembled_state = if states.is_empty() {
        None
    } else {
        let q = states[0].num_qubits();
        let mut amps = vec![C64::new(0.0, 0.0); states[0].dim()];
        for (s, &cp) in states.iter().zip(&coefficients) {
            if s.num_qubits() != q {
                return Err(Error::domain("frame states act on different registers"));
            }
            for (a, v) in amps.iter_mut().zip(s.amplitudes()) {
                *a += cp * v;
            }
        }
        let mut st = StateVector::from_amplitudes(q, amps)?;
        st.normalize()?;
        Some(st)
    };
    Ok(GroundSolution {
        lambda0: eigenvalues[0],
        coefficients,
        assembled_state,
        eigenvalues,
        retained_rank: r,
        min_s_eigenvalue: s_min,
    })
}

/// Serializes a complex matrix as `{"re": [[..]], "im": [[..]]}`, row-major.
mod complex_matrix {
    use nalgebra::DMatrix;
    use num_complex::Complex64 as C64;
    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Parts {
        re: Vec<Vec<f64>>,
        im: Vec<Vec<f64>>,
    }

    pub fn serialize<S: Serializer>(m: &DMatrix<C64>, ser: S) -> Result<S::Ok, S::Error> {
        let rows = |f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
                .collect()
        };
        Parts {
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
        .serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<DMatrix<C64>, D::Error> {
        let p = Parts::deserialize(de)?;
        let n = p.re.len();
        let m = p.re.first().map_or(0, Vec::len);
        if p.im.len() != n || p.re.iter().chain(&p.im).any(|r| r.len() != m) {
            return Err(D::Error::custom("re/im parts must be rectangular and equal-sized"));
        }
        Ok(DMatrix::from_fn(n, m, |i, j| C64::new(p.re[i][j], p.im[i][j])))
    }
}
