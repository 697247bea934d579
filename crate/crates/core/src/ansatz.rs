//! Layered hardware-efficient ansatz.
//!
//! `N_l` rotation layers alternate with `N_l - 1` entangling layers. In every
//! rotation layer each qubit gets `Ry(α)` followed by `Rz(β)`. Parameters are
//! stored layer-major, then by qubit, then `α` before `β`:
//! `index = layer · 2q + 2·qubit + {0: α, 1: β}`.

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};

/// Flat angle vector in the layout described in the module docs.
pub type ParameterVector = Vec<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Entangler {
    #[default]
    Cz,
    /// CNOT with the lower-index qubit of each edge as control.
    Cnot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Angle {
    Ry,
    Rz,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub num_qubits: usize,
    pub layers: usize,
    pub entangler: Entangler,
    /// Ascending `(min, max)` pairs.
    pub entangler_edges: Vec<(usize, usize)>,
}

impl AnsatzSpec {
    /// Normalizes the edge list to ascending, deduplicated `(min, max)` pairs.
    pub fn new(num_qubits: usize, layers: usize, entangler: Entangler, edges: &[(usize, usize)]) -> Result<Self> {
        let mut norm: Vec<(usize, usize)> = edges.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
        norm.sort_unstable();
        norm.dedup();
        let spec = Self {
            num_qubits,
            layers,
            entangler,
            entangler_edges: norm,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_qubits == 0 {
            return Err(Error::domain("ansatz needs at least one qubit"));
        }
        if self.layers == 0 {
            return Err(Error::domain("ansatz needs at least one rotation layer"));
        }
        for &(a, b) in &self.entangler_edges {
            if a == b || b >= self.num_qubits {
                return Err(Error::domain(format!(
                    "entangler edge ({a}, {b}) invalid for {} qubits",
                    self.num_qubits
                )));
            }
        }
        if self.entangler_edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain("entangler edges must be ascending and distinct"));
        }
        Ok(())
    }

    pub fn parameter_count(&self) -> usize {
        2 * self.num_qubits * self.layers
    }

    pub fn parameter_index(&self, layer: usize, qubit: usize, angle: Angle) -> usize {
        layer * 2 * self.num_qubits + 2 * qubit + matches!(angle, Angle::Rz) as usize
    }

    /// Rotation layer that parameter `index` belongs to.
    pub fn layer_of(&self, index: usize) -> usize {
        index / (2 * self.num_qubits)
    }

    pub(crate) fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.parameter_count() {
            return Err(Error::domain(format!(
                "{} parameters given, ansatz has {}",
                params.len(),
                self.parameter_count()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::domain("parameters must be finite"));
        }
        Ok(())
    }

    pub fn rotation_layer(&self, layer: usize, params: &[f64]) -> Result<Circuit> {
        self.check_params(params)?;
        if layer >= self.layers {
            return Err(Error::domain(format!("layer {layer} of {}", self.layers)));
        }
        let mut c = Circuit::new(self.num_qubits);
        for q in 0..self.num_qubits {
            let i = self.parameter_index(layer, q, Angle::Ry);
            c.push(Gate::Ry { qubit: q, angle: params[i] })?;
            c.push(Gate::Rz { qubit: q, angle: params[i + 1] })?;
        }
        Ok(c)
    }

    pub fn entangling_layer(&self) -> Circuit {
        let mut c = Circuit::new(self.num_qubits);
        for &(a, b) in &self.entangler_edges {
            let g = match self.entangler {
                Entangler::Cz => Gate::Cz { a, b },
                Entangler::Cnot => Gate::Cnot { control: a, target: b },
            };
            c.push(g).expect("edges validated");
        }
        c
    }
}

/// The full ansatz circuit `U(θ)`.
pub fn build_ansatz_circuit(spec: &AnsatzSpec, params: &[f64]) -> Result<Circuit> {
    spec.validate()?;
    spec.check_params(params)?;
    let mut c = Circuit::new(spec.num_qubits);
    let ent = spec.entangling_layer();
    for layer in 0..spec.layers {
        c.extend(&spec.rotation_layer(layer, params)?)?;
        if layer + 1 < spec.layers {
            c.extend(&ent)?;
        }
    }
    Ok(c)
}
