//! Exact spectra: full dense diagonalization for small registers and a
//! thick-restart Lanczos solver for a few extremal eigenpairs of larger ones.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::PauliSumOperator;
use crate::rng;
use crate::statevector::{inner_slices, StateVector};

/// Largest register [`dense_spectrum`] accepts.
pub const DEFAULT_DENSE_CAP: usize = 12;

/// Eigenvalues `a`, `b` are degenerate when `|a - b| < DEGENERACY_RTOL · max(1, |a|)`.
pub const DEGENERACY_RTOL: f64 = 1e-8;

const RESIDUAL_LIMIT: f64 = 1e-8;
const RESIDUAL_TARGET: f64 = 1e-10;
const MAX_RESTARTS: usize = 500;
const START_SEED: u64 = 0x1a2c_3e4f;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumMode {
    FullDense,
    ExtremalIterative,
}

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    num_qubits: usize,
    /// Ascending. For extremal spectra the first `num_low` entries are the
    /// lowest eigenvalues and the rest the highest.
    eigenvalues: Vec<f64>,
    eigenvectors: Option<Vec<StateVector>>,
    degeneracy_groups: Vec<Vec<usize>>,
    num_low: usize,
    mode: SpectrumMode,
}

/// The lowest eigenspace: energy and an orthonormal basis.
#[derive(Debug, Clone)]
pub struct GroundSpace {
    pub energy: f64,
    pub vectors: Vec<StateVector>,
}

impl GroundSpace {
    pub fn degeneracy(&self) -> usize {
        self.vectors.len()
    }

    /// `⟨ψ|P_ground|ψ⟩`.
    pub fn overlap(&self, state: &StateVector) -> Result<f64> {
        let mut total = 0.0;
        for v in &self.vectors {
            total += v.inner(state)?.norm_sqr();
        }
        Ok(total)
    }
}

fn degenerate(a: f64, b: f64) -> bool {
    (a - b).abs() < DEGENERACY_RTOL * a.abs().max(1.0)
}

fn group_indices(values: &[f64], offset: usize) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if degenerate(values[g[0] - offset], v) => g.push(i + offset),
            _ => groups.push(vec![i + offset]),
        }
    }
    groups
}

impl SpectrumResult {
    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> Option<&[StateVector]> {
        self.eigenvectors.as_deref()
    }

    pub fn degeneracy_groups(&self) -> &[Vec<usize>] {
        &self.degeneracy_groups
    }

    pub fn mode(&self) -> SpectrumMode {
        self.mode
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Energies of the distinct levels (one per degeneracy group).
    pub fn group_energies(&self) -> Vec<f64> {
        self.degeneracy_groups
            .iter()
            .map(|g| self.eigenvalues[g[0]])
            .collect()
    }

    /// The `k` lowest eigenvalues, ascending.
    pub fn lowest(&self, k: usize) -> Result<&[f64]> {
        if k > self.num_low {
            return Err(Error::capability(format!(
                "{k} lowest eigenvalues requested, {} available",
                self.num_low
            )));
        }
        Ok(&self.eigenvalues[..k])
    }

    /// The `k` highest eigenvalues, ascending.
    pub fn highest(&self, k: usize) -> Result<&[f64]> {
        let n = self.eigenvalues.len();
        let available = match self.mode {
            SpectrumMode::FullDense => n,
            SpectrumMode::ExtremalIterative => n - self.num_low,
        };
        if k > available {
            return Err(Error::capability(format!(
                "{k} highest eigenvalues requested, {available} available"
            )));
        }
        Ok(&self.eigenvalues[n - k..])
    }

    pub fn ground_space(&self) -> Result<GroundSpace> {
        let vectors = self
            .eigenvectors
            .as_ref()
            .ok_or_else(|| Error::capability("spectrum was computed without eigenvectors"))?;
        let group = &self.degeneracy_groups[0];
        Ok(GroundSpace {
            energy: self.eigenvalues[group[0]],
            vectors: group.iter().map(|&i| vectors[i].clone()).collect(),
        })
    }

    /// `(level energy, ⟨ψ|P_level|ψ⟩)` for every degeneracy group of a full
    /// dense spectrum, ascending in energy.
    pub fn group_weights(&self, state: &StateVector) -> Result<Vec<(f64, f64)>> {
        if self.mode != SpectrumMode::FullDense {
            return Err(Error::capability(
                "spectral projectors need the full dense spectrum",
            ));
        }
        let vectors = self
            .eigenvectors
            .as_ref()
            .ok_or_else(|| Error::capability("spectrum was computed without eigenvectors"))?;
        if state.num_qubits() != self.num_qubits {
            return Err(Error::domain("state and spectrum have different registers"));
        }
        let amps = state.amplitudes();
        Ok(self
            .degeneracy_groups
            .iter()
            .map(|g| {
                let w = g
                    .iter()
                    .map(|&i| inner_slices(vectors[i].amplitudes(), amps).norm_sqr())
                    .sum();
                (self.eigenvalues[g[0]], w)
            })
            .collect())
    }
}

/// [`dense_spectrum_with_cap`] with [`DEFAULT_DENSE_CAP`].
pub fn dense_spectrum(h: &PauliSumOperator) -> Result<SpectrumResult> {
    dense_spectrum_with_cap(h, DEFAULT_DENSE_CAP)
}

/// Full eigendecomposition of the `2^q × 2^q` matrix.
pub fn dense_spectrum_with_cap(h: &PauliSumOperator, cap: usize) -> Result<SpectrumResult> {
    let q = h.num_qubits();
    if q > cap {
        return Err(Error::capability(format!(
            "dense diagonalization is capped at {cap} qubits ({q} requested); use extremal_spectrum"
        )));
    }
    let n = h.dim();
    let (values, columns): (Vec<f64>, Vec<Vec<C64>>) = if h.is_real() {
        let eig = SymmetricEigen::new(h.dense_real_matrix());
        let order = ascending_order(eig.eigenvalues.as_slice());
        let cols = order
            .iter()
            .map(|&i| {
                eig.eigenvectors
                    .column(i)
                    .iter()
                    .map(|&x| C64::new(x, 0.0))
                    .collect()
            })
            .collect();
        (order.iter().map(|&i| eig.eigenvalues[i]).collect(), cols)
    } else {
        let eig = SymmetricEigen::new(h.dense_matrix());
        let order = ascending_order(eig.eigenvalues.as_slice());
        let cols = order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
            .collect();
        (order.iter().map(|&i| eig.eigenvalues[i]).collect(), cols)
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("dense eigensolver returned non-finite eigenvalues"));
    }
    let vectors = columns
        .into_iter()
        .map(|c| StateVector::from_amplitudes(q, c))
        .collect::<Result<Vec<_>>>()?;
    let degeneracy_groups = group_indices(&values, 0);
    Ok(SpectrumResult {
        num_qubits: q,
        eigenvalues: values,
        eigenvectors: Some(vectors),
        degeneracy_groups,
        num_low: n,
        mode: SpectrumMode::FullDense,
    })
}

fn ascending_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    order
}

/// The `k_low` lowest and `k_high` highest eigenpairs via thick-restart
/// Lanczos with full reorthogonalization.
///
/// A single Krylov sequence sees only one direction of each degenerate
/// eigenspace, so after the first solve the search is repeated in the
/// orthogonal complement of everything found so far until no new eigenvalue
/// at or below the current `k`-th one turns up. When the boundary level is
/// degenerate, all of its copies are returned, so a side may hold more than
/// the requested number of eigenpairs.
pub fn extremal_spectrum(h: &PauliSumOperator, k_low: usize, k_high: usize) -> Result<SpectrumResult> {
    let n = h.dim();
    if k_low == 0 {
        return Err(Error::domain("k_low must be at least 1"));
    }
    if k_low + k_high > n {
        return Err(Error::domain(format!(
            "{k_low} + {k_high} eigenpairs requested from a {n}-dimensional space"
        )));
    }
    let scale = operator_scale(h);
    let apply_low = |x: &[C64], y: &mut [C64]| h.apply_into(x, y);
    let apply_high = |x: &[C64], y: &mut [C64]| {
        h.apply_into(x, y);
        y.iter_mut().for_each(|v| *v = -*v);
    };
    let (low_vals, low_vecs) = lowest_with_locking(&apply_low, n, k_low, scale)?;
    let (mut high_vals, mut high_vecs) = if k_high > 0 {
        lowest_with_locking(&apply_high, n, k_high, scale)?
    } else {
        (Vec::new(), Vec::new())
    };
    high_vals.iter_mut().for_each(|v| *v = -*v);
    high_vals.reverse();
    high_vecs.reverse();

    let num_low = low_vals.len();
    let mut groups = group_indices(&low_vals, 0);
    groups.extend(group_indices(&high_vals, num_low));
    let q = h.num_qubits();
    let mut vectors = Vec::with_capacity(num_low + high_vals.len());
    for v in low_vecs.into_iter().chain(high_vecs) {
        vectors.push(StateVector::from_amplitudes(q, v)?);
    }
    let mut values = low_vals;
    values.extend(high_vals);
    Ok(SpectrumResult {
        num_qubits: q,
        eigenvalues: values,
        eigenvectors: Some(vectors),
        degeneracy_groups: groups,
        num_low,
        mode: SpectrumMode::ExtremalIterative,
    })
}

/// Upper bound on the spectral radius: sum of absolute coefficients.
fn operator_scale(h: &PauliSumOperator) -> f64 {
    h.terms()
        .iter()
        .map(|t| t.coefficient.abs())
        .sum::<f64>()
        .max(1.0)
}

fn lowest_with_locking<F>(apply: &F, n: usize, k: usize, scale: f64) -> Result<(Vec<f64>, Vec<Vec<C64>>)>
where
    F: Fn(&[C64], &mut [C64]),
{
    let (mut vals, mut vecs) = lanczos_lowest(apply, n, k, &[], scale, START_SEED)?;
    for pass in 1..=(k + 4) {
        if vecs.len() >= n {
            break;
        }
        let threshold = vals[k - 1];
        let (new_vals, new_vecs) = lanczos_lowest(apply, n, k, &vecs, scale, START_SEED + pass as u64)?;
        let mut added = false;
        for (v, x) in new_vals.into_iter().zip(new_vecs) {
            if v < threshold || degenerate(threshold, v) {
                vals.push(v);
                vecs.push(x);
                added = true;
            }
        }
        if !added {
            break;
        }
        let order = ascending_order(&vals);
        let kth = vals[order[k - 1]];
        let keep: Vec<usize> = order
            .into_iter()
            .filter(|&i| vals[i] <= kth || degenerate(kth, vals[i]))
            .collect();
        vals = keep.iter().map(|&i| vals[i]).collect();
        vecs = keep.iter().map(|&i| vecs[i].clone()).collect();
    }
    Ok((vals, vecs))
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Removes the components of `w` along every vector in `bases`, twice.
/// Returns the coefficients removed along the last basis.
fn orthogonalize(w: &mut [C64], locked: &[Vec<C64>], basis: &[Vec<C64>]) -> Vec<C64> {
    let mut coeffs = vec![C64::new(0.0, 0.0); basis.len()];
    for _ in 0..2 {
        for v in locked {
            let c = inner_slices(v, w);
            w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
        }
        for (v, acc) in basis.iter().zip(coeffs.iter_mut()) {
            let c = inner_slices(v, w);
            w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
            *acc += c;
        }
    }
    coeffs
}

/// A random unit vector orthogonal to `locked` and `basis`, or `None` when
/// they already span the space.
fn random_orthogonal(stream: &mut rng::Stream, n: usize, locked: &[Vec<C64>], basis: &[Vec<C64>]) -> Option<Vec<C64>> {
    if locked.len() + basis.len() >= n {
        return None;
    }
    for _ in 0..8 {
        let mut v: Vec<C64> = (0..n)
            .map(|_| C64::new(rng::uniform_symmetric(stream, 1.0), rng::uniform_symmetric(stream, 1.0)))
            .collect();
        let before = norm(&v);
        orthogonalize(&mut v, locked, basis);
        let after = norm(&v);
        if after > 1e-6 * before {
            v.iter_mut().for_each(|x| *x /= after);
            return Some(v);
        }
    }
    None
}

/// Lowest `k` eigenpairs of the operator restricted to the orthogonal
/// complement of `locked`.
fn lanczos_lowest<F>(
    apply: &F,
    n: usize,
    k: usize,
    locked: &[Vec<C64>],
    scale: f64,
    seed: u64,
) -> Result<(Vec<f64>, Vec<Vec<C64>>)>
where
    F: Fn(&[C64], &mut [C64]),
{
    let room = n - locked.len();
    if room == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let k = k.min(room);
    let m = room.min((2 * k + 20).max(40));
    let mut stream = rng::stream(seed);
    let mut basis: Vec<Vec<C64>> = vec![random_orthogonal(&mut stream, n, locked, &[]).expect("room > 0")];
    let mut t = DMatrix::<C64>::zeros(m, m);
    let mut computed = 0usize;
    let mut w = vec![C64::new(0.0, 0.0); n];
    let mut last_residual = f64::INFINITY;

    for _ in 0..MAX_RESTARTS {
        // Expand to m columns.
        let mut f_norm = 0.0;
        while computed < basis.len() {
            let j = computed;
            apply(&basis[j], &mut w);
            let coeffs = orthogonalize(&mut w, locked, &basis);
            for (i, c) in coeffs.iter().enumerate() {
                t[(i, j)] = *c;
                t[(j, i)] = c.conj();
            }
            t[(j, j)] = C64::new(t[(j, j)].re, 0.0);
            computed += 1;
            f_norm = norm(&w);
            if basis.len() < m {
                if f_norm > 1e-12 * scale {
                    let v: Vec<C64> = w.iter().map(|x| x / f_norm).collect();
                    basis.push(v);
                } else if let Some(v) = random_orthogonal(&mut stream, n, locked, &basis) {
                    basis.push(v);
                    f_norm = 0.0;
                }
            }
        }
        let residual_dir = (f_norm > 1e-12 * scale).then(|| w.iter().map(|x| x / f_norm).collect::<Vec<C64>>());
        let size = computed;
        let block = t.view((0, 0), (size, size)).into_owned();
        let eig = SymmetricEigen::new(block);
        let order = ascending_order(eig.eigenvalues.as_slice());
        let want = k.min(size);

        // Ritz residual estimates ‖f‖·|last component|.
        let estimates: Vec<f64> = order[..want]
            .iter()
            .map(|&i| f_norm * eig.eigenvectors[(size - 1, i)].norm())
            .collect();
        let converged = estimates
            .iter()
            .all(|&e| e < RESIDUAL_TARGET * scale.min(1e2) || size == room);

        let keep = (want + (size - want) / 2).min(size.saturating_sub(1)).max(want);
        let ritz: Vec<Vec<C64>> = order[..keep]
            .iter()
            .map(|&i| {
                let y = eig.eigenvectors.column(i);
                let mut v = vec![C64::new(0.0, 0.0); n];
                for (b, &c) in basis.iter().zip(y.iter()) {
                    v.iter_mut().zip(b).for_each(|(x, bx)| *x += c * bx);
                }
                let nv = norm(&v);
                v.iter_mut().for_each(|x| *x /= nv);
                v
            })
            .collect();
        let thetas: Vec<f64> = order[..keep].iter().map(|&i| eig.eigenvalues[i]).collect();

        if converged {
            let mut worst: f64 = 0.0;
            for (v, &theta) in ritz[..want].iter().zip(&thetas) {
                apply(v, &mut w);
                let r = w
                    .iter()
                    .zip(v)
                    .map(|(hv, x)| (hv - x * theta).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                worst = worst.max(r);
            }
            last_residual = worst;
            if worst < RESIDUAL_LIMIT {
                return Ok((thetas[..want].to_vec(), ritz[..want].to_vec()));
            }
        }

        // Thick restart: keep the leading Ritz vectors, continue from the residual.
        basis = ritz;
        t.fill(C64::new(0.0, 0.0));
        for (i, &theta) in thetas.iter().enumerate() {
            t[(i, i)] = C64::new(theta, 0.0);
        }
        computed = basis.len();
        let next = match residual_dir {
            Some(mut r) => {
                orthogonalize(&mut r, locked, &basis);
                let nr = norm(&r);
                if nr > 1e-8 {
                    r.iter_mut().for_each(|x| *x /= nr);
                    Some(r)
                } else {
                    random_orthogonal(&mut stream, n, locked, &basis)
                }
            }
            None => random_orthogonal(&mut stream, n, locked, &basis),
        };
        match next {
            Some(v) => basis.push(v),
            None => {
                // Space exhausted: the Ritz pairs are exact.
                return Ok((thetas[..want].to_vec(), basis[..want].to_vec()));
            }
        }
    }
    Err(Error::numerical(format!(
        "Lanczos did not converge after {MAX_RESTARTS} restarts (residual {last_residual:.3e})"
    )))
}

/// `⟨ψ|P_{>μ}|ψ⟩`, summing whole degeneracy groups whose energy exceeds `mu`.
pub fn spectral_projector_overlap(state: &StateVector, spectrum: &SpectrumResult, mu: f64) -> Result<f64> {
    Ok(spectrum
        .group_weights(state)?
        .into_iter()
        .filter(|&(e, _)| e > mu)
        .map(|(_, w)| w)
        .sum())
}
