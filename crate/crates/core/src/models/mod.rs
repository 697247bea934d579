//! Ising-type benchmark Hamiltonians
//! `H = -Σ_(i,j) J_ij X_i X_j - h Σ_i Z_i` on rectangular lattices, the
//! Edwards–Anderson disorder sampler, and exact spectra.

mod lattice;
mod spectrum;

pub use lattice::{build_lattice, LatticeGraph};
pub use spectrum::{
    dense_spectrum, dense_spectrum_with_cap, extremal_spectrum, spectral_projector_overlap,
    GroundSpace, SpectrumMode, SpectrumResult, DEFAULT_DENSE_CAP, DEGENERACY_RTOL,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString, PauliSumOperator};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Homogeneous coupling `J` on every edge.
    Tfi,
    /// Independent standard-normal couplings per edge.
    Ea,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeCoupling {
    pub i: usize,
    pub j: usize,
    #[serde(rename = "J")]
    pub value: f64,
}

/// Model description as stored in configuration files.
///
/// TFI models carry `J`. EA models carry either explicit `couplings` (a
/// realization file) or a `disorder_seed` from which the couplings are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub rows: usize,
    pub cols: usize,
    #[serde(default = "default_true")]
    pub periodic: bool,
    #[serde(rename = "J", default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub couplings: Option<Vec<EdgeCoupling>>,
    pub h: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disorder_seed: Option<u64>,
}

fn default_true() -> bool {
    true
}

impl ModelSpec {
    pub fn tfi(rows: usize, cols: usize, periodic: bool, coupling: f64, h: f64) -> Self {
        Self {
            kind: ModelKind::Tfi,
            rows,
            cols,
            periodic,
            coupling: Some(coupling),
            couplings: None,
            h,
            disorder_seed: None,
        }
    }

    pub fn ea(rows: usize, cols: usize, periodic: bool, h: f64, disorder_seed: u64) -> Self {
        Self {
            kind: ModelKind::Ea,
            rows,
            cols,
            periodic,
            coupling: None,
            couplings: None,
            h,
            disorder_seed: Some(disorder_seed),
        }
    }

    pub fn lattice(&self) -> Result<LatticeGraph> {
        build_lattice(self.rows, self.cols, self.periodic)
    }

    pub fn num_qubits(&self) -> usize {
        self.rows * self.cols
    }

    /// Couplings in lattice edge order, validated against the lattice.
    pub fn edge_couplings(&self) -> Result<Vec<EdgeCoupling>> {
        let lattice = self.lattice()?;
        if !self.h.is_finite() {
            return Err(Error::domain("field h must be finite"));
        }
        if let Some(list) = &self.couplings {
            return align_couplings(&lattice, list, self.kind);
        }
        match self.kind {
            ModelKind::Tfi => {
                let j = self
                    .coupling
                    .ok_or_else(|| Error::domain("TFI model needs J or couplings"))?;
                if !j.is_finite() {
                    return Err(Error::domain("coupling J must be finite"));
                }
                Ok(lattice
                    .edges()
                    .iter()
                    .map(|&(i, k)| EdgeCoupling { i, j: k, value: j })
                    .collect())
            }
            ModelKind::Ea => {
                let seed = self
                    .disorder_seed
                    .ok_or_else(|| Error::domain("EA model needs couplings or disorder_seed"))?;
                Ok(sample_ea_couplings(&lattice, seed))
            }
        }
    }

    /// Copy of the spec with the couplings written out explicitly.
    pub fn realized(&self) -> Result<ModelSpec> {
        let mut out = self.clone();
        out.couplings = Some(self.edge_couplings()?);
        Ok(out)
    }

    /// Short identifier used in output paths.
    pub fn label(&self) -> String {
        let kind = match self.kind {
            ModelKind::Tfi => "tfi",
            ModelKind::Ea => "ea",
        };
        match (self.kind, self.disorder_seed) {
            (ModelKind::Ea, Some(seed)) if self.couplings.is_none() => {
                format!("{kind}_{}x{}_seed{seed}", self.rows, self.cols)
            }
            _ => format!("{kind}_{}x{}", self.rows, self.cols),
        }
    }
}

fn align_couplings(lattice: &LatticeGraph, list: &[EdgeCoupling], kind: ModelKind) -> Result<Vec<EdgeCoupling>> {
    let mut out = Vec::with_capacity(lattice.edges().len());
    for &(a, b) in lattice.edges() {
        let found: Vec<_> = list
            .iter()
            .filter(|c| (c.i.min(c.j), c.i.max(c.j)) == (a, b))
            .collect();
        match found.as_slice() {
            [c] if c.value.is_finite() => out.push(EdgeCoupling {
                i: a,
                j: b,
                value: c.value,
            }),
            [] => return Err(Error::domain(format!("no coupling given for edge ({a}, {b})"))),
            _ => return Err(Error::domain(format!("edge ({a}, {b}) has an invalid coupling entry"))),
        }
    }
    if list.len() != out.len() {
        return Err(Error::domain("couplings list contains pairs that are not lattice edges"));
    }
    if kind == ModelKind::Tfi && out.windows(2).any(|w| w[0].value != w[1].value) {
        return Err(Error::domain("TFI couplings must all be equal"));
    }
    Ok(out)
}

/// Draws one standard-normal coupling per lattice edge, in edge order, from
/// a ChaCha8 stream with the Box–Muller transform (see [`crate::rng`]).
pub fn sample_ea_couplings(lattice: &LatticeGraph, seed: u64) -> Vec<EdgeCoupling> {
    let mut stream = rng::stream(seed);
    let values = rng::standard_normals(&mut stream, lattice.edges().len());
    lattice
        .edges()
        .iter()
        .zip(values)
        .map(|(&(i, j), value)| EdgeCoupling { i, j, value })
        .collect()
}

/// One `XX` term per edge with coefficient `-J_ij` and one `Z` term per site
/// with coefficient `-h`.
pub fn build_hamiltonian(spec: &ModelSpec) -> Result<PauliSumOperator> {
    let couplings = spec.edge_couplings()?;
    let q = spec.num_qubits();
    let mut terms = Vec::with_capacity(couplings.len() + q);
    for c in &couplings {
        terms.push(PauliString::from_sparse(
            q,
            -c.value,
            &[(c.i, Pauli::X), (c.j, Pauli::X)],
        )?);
    }
    for site in 0..q {
        terms.push(PauliString::from_sparse(q, -spec.h, &[(site, Pauli::Z)])?);
    }
    PauliSumOperator::new(q, terms)
}

/// Open transverse-field Ising chain `-J Σ X_i X_{i+1} - h Σ Z_i`, for
/// instances below the smallest square lattice.
pub fn tfi_chain(sites: usize, coupling: f64, h: f64) -> Result<PauliSumOperator> {
    if sites < 2 {
        return Err(Error::domain("a chain needs at least two sites"));
    }
    let mut terms = Vec::with_capacity(2 * sites - 1);
    for i in 0..sites - 1 {
        terms.push(PauliString::from_sparse(sites, -coupling, &[(i, Pauli::X), (i + 1, Pauli::X)])?);
    }
    for site in 0..sites {
        terms.push(PauliString::from_sparse(sites, -h, &[(site, Pauli::Z)])?);
    }
    PauliSumOperator::new(sites, terms)
}
