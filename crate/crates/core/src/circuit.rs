//! Gates and circuits.
//!
//! Rotation convention: `Ry(θ) = exp(-iθY/2)` and `Rz(θ) = exp(-iθZ/2)`.
//! Every gate matrix in the crate is derived from [`Gate::single_qubit_matrix`],
//! so this is the only place the convention is written down.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statevector::{apply_gate_slice, apply_single, matmul2, Condition, Mat2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    Ry { qubit: usize, angle: f64 },
    Rz { qubit: usize, angle: f64 },
    H(usize),
    X(usize),
    SDagger(usize),
    Cz { a: usize, b: usize },
    Cnot { control: usize, target: usize },
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::Ry { qubit, .. } | Gate::Rz { qubit, .. } => vec![qubit],
            Gate::H(q) | Gate::X(q) | Gate::SDagger(q) => vec![q],
            Gate::Cz { a, b } => vec![a, b],
            Gate::Cnot { control, target } => vec![control, target],
        }
    }

    pub(crate) fn validate(&self, num_qubits: usize) -> Result<()> {
        let qs = self.qubits();
        if let Some(q) = qs.iter().find(|&&q| q >= num_qubits) {
            return Err(Error::domain(format!(
                "gate {self:?} addresses qubit {q} on a {num_qubits}-qubit register"
            )));
        }
        if qs.len() == 2 && qs[0] == qs[1] {
            return Err(Error::domain(format!("gate {self:?} repeats a qubit")));
        }
        match *self {
            Gate::Ry { angle, .. } | Gate::Rz { angle, .. } if !angle.is_finite() => {
                Err(Error::domain(format!("gate {self:?} has a non-finite angle")))
            }
            _ => Ok(()),
        }
    }

    /// Target qubit and 2×2 unitary of a single-qubit gate; `None` for
    /// two-qubit gates.
    pub fn single_qubit_matrix(&self) -> Option<(usize, Mat2)> {
        let z = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let m = match *self {
            Gate::Ry { qubit, angle } => {
                let (s, c) = (0.5 * angle).sin_cos();
                (qubit, [[C64::new(c, 0.0), C64::new(-s, 0.0)], [C64::new(s, 0.0), C64::new(c, 0.0)]])
            }
            Gate::Rz { qubit, angle } => {
                let half = 0.5 * angle;
                (qubit, [[C64::from_polar(1.0, -half), z], [z, C64::from_polar(1.0, half)]])
            }
            Gate::H(q) => {
                let r = C64::new(FRAC_1_SQRT_2, 0.0);
                (q, [[r, r], [r, -r]])
            }
            Gate::X(q) => (q, Self::pauli_x_matrix()),
            Gate::SDagger(q) => (q, [[one, z], [z, C64::new(0.0, -1.0)]]),
            Gate::Cz { .. } | Gate::Cnot { .. } => return None,
        };
        Some(m)
    }

    pub(crate) fn pauli_x_matrix() -> Mat2 {
        let z = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        [[z, one], [one, z]]
    }
}

/// One circuit entry: a gate, or a subcircuit applied only on the branch
/// where `control` holds `value`.
#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    Gate(Gate),
    Controlled {
        control: usize,
        value: bool,
        body: Circuit,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    ops: Vec<Op>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            ops: Vec::new(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn ops(&self) -> &[Op] {
        &self.ops
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn gate_count(&self) -> usize {
        self.ops
            .iter()
            .map(|op| match op {
                Op::Gate(_) => 1,
                Op::Controlled { body, .. } => body.gate_count(),
            })
            .sum()
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        gate.validate(self.num_qubits)?;
        self.ops.push(Op::Gate(gate));
        Ok(self)
    }

    /// Appends `body`, applied only where qubit `control` equals `value`.
    /// The body may be narrower than this circuit; its qubit `i` is qubit `i`
    /// here.
    pub fn push_controlled(&mut self, control: usize, value: bool, body: Circuit) -> Result<&mut Self> {
        if control >= self.num_qubits {
            return Err(Error::domain(format!(
                "control qubit {control} out of range for {} qubits",
                self.num_qubits
            )));
        }
        if body.num_qubits > self.num_qubits {
            return Err(Error::domain("controlled body is wider than the circuit"));
        }
        if body.touches(control) {
            return Err(Error::domain(format!(
                "controlled body acts on its own control qubit {control}"
            )));
        }
        self.ops.push(Op::Controlled {
            control,
            value,
            body,
        });
        Ok(self)
    }

    /// Appends all operations of `other` (which must not be wider).
    pub fn extend(&mut self, other: &Circuit) -> Result<&mut Self> {
        if other.num_qubits > self.num_qubits {
            return Err(Error::domain("appended circuit is wider than the circuit"));
        }
        self.ops.extend(other.ops.iter().cloned());
        Ok(self)
    }

    fn touches(&self, qubit: usize) -> bool {
        self.ops.iter().any(|op| match op {
            Op::Gate(g) => g.qubits().contains(&qubit),
            Op::Controlled { control, body, .. } => *control == qubit || body.touches(qubit),
        })
    }

    /// Applies to a raw amplitude slice whose length is `2^num_qubits` of the
    /// enclosing register (already validated by the caller).
    pub(crate) fn apply_to(&self, amps: &mut [C64]) {
        self.apply_conditioned(amps, Condition::ALWAYS);
    }

    // Runs of single-qubit gates on the same qubit are fused into one 2×2
    // matrix before touching the amplitudes.
    fn apply_conditioned(&self, amps: &mut [C64], cond: Condition) {
        let mut pending: Option<(usize, Mat2)> = None;
        let flush = |pending: &mut Option<(usize, Mat2)>, amps: &mut [C64]| {
            if let Some((q, m)) = pending.take() {
                apply_single(amps, q, &m, cond);
            }
        };
        for op in &self.ops {
            match op {
                Op::Gate(g) => match g.single_qubit_matrix() {
                    Some((q, m)) => match pending {
                        Some((pq, ref pm)) if pq == q => pending = Some((q, matmul2(&m, pm))),
                        _ => {
                            flush(&mut pending, amps);
                            pending = Some((q, m));
                        }
                    },
                    None => {
                        flush(&mut pending, amps);
                        apply_gate_slice(amps, g, cond);
                    }
                },
                Op::Controlled {
                    control,
                    value,
                    body,
                } => {
                    flush(&mut pending, amps);
                    body.apply_conditioned(amps, cond.and(*control, *value));
                }
            }
        }
        flush(&mut pending, amps);
    }
}
