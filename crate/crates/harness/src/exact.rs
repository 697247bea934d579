//! Exact spectra of a model for reference and plotting.

use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use subspace_vqe::{build_hamiltonian, dense_spectrum, extremal_spectrum, ModelSpec, SpectrumMode};

use crate::error::{HarnessError, Result};
use crate::io;

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumFile {
    pub model: ModelSpec,
    pub label: String,
    pub num_qubits: usize,
    pub mode: SpectrumMode,
    pub eigenvalues: Vec<f64>,
    pub degeneracy_groups: Vec<Vec<usize>>,
    /// Number of stored eigenvectors in `eigenvectors.bin`, each `2^n`
    /// complex amplitudes as little-endian `f64` pairs (re, im).
    pub num_eigenvectors: usize,
}

/// Reads a model from either a bare model document or a run config.
pub fn load_model(path: &Path) -> Result<ModelSpec> {
    let value: Value = io::read_json(path)?;
    let model = match value.get("model") {
        Some(m) => m.clone(),
        None => value,
    };
    serde_json::from_value(model).map_err(|e| HarnessError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// The full spectrum, or with `extremal = Some((k_low, k_high))` only the
/// ends of it. Writes `spectrum.json` and `eigenvectors.bin` into `out`.
pub fn write_spectrum(model: &ModelSpec, extremal: Option<(usize, usize)>, out: &Path) -> Result<SpectrumFile> {
    let realized = model.realized()?;
    let h = build_hamiltonian(&realized)?;
    let spectrum = match extremal {
        None => dense_spectrum(&h)?,
        Some((lo, hi)) => extremal_spectrum(&h, lo, hi)?,
    };
    let vectors = spectrum.eigenvectors().unwrap_or(&[]);
    let mut bytes = Vec::with_capacity(vectors.len() * (16 << realized.num_qubits()));
    for v in vectors {
        for a in v.amplitudes() {
            bytes.extend_from_slice(&a.re.to_le_bytes());
            bytes.extend_from_slice(&a.im.to_le_bytes());
        }
    }
    let file = SpectrumFile {
        label: realized.label(),
        num_qubits: realized.num_qubits(),
        model: realized,
        mode: spectrum.mode(),
        eigenvalues: spectrum.eigenvalues().to_vec(),
        degeneracy_groups: spectrum.degeneracy_groups().to_vec(),
        num_eigenvectors: vectors.len(),
    };
    io::write_json(&out.join("spectrum.json"), &file)?;
    io::write_bytes(&out.join("eigenvectors.bin"), &bytes)?;
    Ok(file)
}
