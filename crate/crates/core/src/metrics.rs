//! Quality metrics: fidelities, normalized cost, cumulative infidelity,
//! relative gain factors and bootstrap statistics.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{GroundSolution, S_CUTOFF};
use crate::models::{GroundSpace, SpectrumResult};
use crate::rng;
use crate::statevector::{inner_slices, StateVector};

/// Overlaps below this are clamped before taking `log10`.
pub const CI_FLOOR: f64 = 1e-16;
pub const DEFAULT_RESAMPLES: usize = 10_000;

/// `‖P_V P_ground‖²`-type subspace fidelity: the weight of the ground
/// eigenspace inside the span of `states`, `Σ_g ‖P_V |g⟩‖²` over an
/// orthonormal ground basis (a single vector when the level is not
/// degenerate). The span is orthonormalized canonically with the same
/// relative cutoff as the generalized eigensolver.
pub fn subspace_fidelity(states: &[StateVector], ground: &GroundSpace) -> Result<f64> {
    let k = states.len();
    if k == 0 {
        return Err(Error::DegenerateSubspace("empty frame".into()));
    }
    let gram = DMatrix::<C64>::from_fn(k, k, |p, q| inner_slices(states[p].amplitudes(), states[q].amplitudes()));
    let eig = SymmetricEigen::new((&gram + gram.adjoint()) * C64::new(0.5, 0.0));
    let s_max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(s_max > 0.0) {
        return Err(Error::DegenerateSubspace("frame states span nothing".into()));
    }
    let kept: Vec<usize> = (0..k).filter(|&i| eig.eigenvalues[i] > S_CUTOFF * s_max).collect();
    let mut total = 0.0;
    for g in &ground.vectors {
        // o_p = ⟨ψ_p|g⟩; the orthonormal basis b_i = Σ_p U_pi ψ_p / √s_i has
        // ⟨b_i|g⟩ = Σ_p conj(U_pi) o_p / √s_i.
        let o: Vec<C64> = states.iter().map(|s| inner_slices(s.amplitudes(), g.amplitudes())).collect();
        for &i in &kept {
            let amp: C64 = (0..k).map(|p| eig.eigenvectors[(p, i)].conj() * o[p]).sum();
            total += amp.norm_sqr() / eig.eigenvalues[i];
        }
    }
    Ok(total)
}

/// `⟨Ψ₀|P_ground|Ψ₀⟩` for the assembled diagonalization state.
pub fn htrc_fidelity(solution: &GroundSolution, ground: &GroundSpace) -> Result<f64> {
    ground.overlap(solution.state()?)
}

/// `(C - C_min) / (C_max - C_min)` with `C_min` (`C_max`) the sum of the
/// `k` lowest (highest) eigenvalues.
pub fn normalized_cost(energy: f64, spectrum: &SpectrumResult, k: usize) -> Result<f64> {
    let c_min: f64 = spectrum.lowest(k)?.iter().sum();
    let c_max: f64 = spectrum.highest(k)?.iter().sum();
    if c_max == c_min {
        return Err(Error::domain("normalized cost undefined: K lowest and highest sums coincide"));
    }
    Ok((energy - c_min) / (c_max - c_min))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CumulativeInfidelity {
    pub mu: f64,
    /// `⟨Ψ₀|P_{>μ}|Ψ₀⟩` before clamping.
    pub overlap: f64,
    /// `log10(max(overlap, CI_FLOOR))`.
    pub log10: f64,
    pub clamped: bool,
}

fn ci_from_overlap(mu: f64, overlap: f64) -> CumulativeInfidelity {
    let clamped = overlap < CI_FLOOR;
    CumulativeInfidelity {
        mu,
        overlap,
        log10: overlap.max(CI_FLOOR).log10(),
        clamped,
    }
}

/// `CI(μ) = log10 ⟨Ψ₀|P_{>μ}|Ψ₀⟩`.
pub fn cumulative_infidelity(psi0: &StateVector, spectrum: &SpectrumResult, mu: f64) -> Result<CumulativeInfidelity> {
    let overlap = crate::models::spectral_projector_overlap(psi0, spectrum, mu)?;
    Ok(ci_from_overlap(mu, overlap))
}

/// `CI` at every distinct level above the ground level, `μ = E_1, E_2, …`.
pub fn cumulative_infidelity_grid(psi0: &StateVector, spectrum: &SpectrumResult) -> Result<Vec<CumulativeInfidelity>> {
    let weights = spectrum.group_weights(psi0)?;
    // Suffix sums from the top level down, so small tails keep full precision.
    let mut tail = vec![0.0; weights.len() + 1];
    for i in (0..weights.len()).rev() {
        tail[i] = tail[i + 1] + weights[i].1;
    }
    Ok(weights
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &(e, _))| ci_from_overlap(e, tail[i + 1]))
        .collect())
}

/// Median with linear interpolation between the two middle order statistics.
pub fn median(samples: &[f64]) -> f64 {
    percentile(samples, 50.0)
}

/// Linear-interpolation percentile (`p` in `[0, 100]`) of unsorted samples.
pub fn percentile(samples: &[f64], p: f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    percentile_sorted(&s, p)
}

pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = (p / 100.0).clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            let frac = pos - lo as f64;
            sorted[lo] + frac * (sorted[hi] - sorted[lo])
        }
    }
}

fn resample(stream: &mut rng::Stream, samples: &[f64], buf: &mut Vec<f64>) {
    buf.clear();
    buf.extend((0..samples.len()).map(|_| samples[rng::index(stream, samples.len())]));
}

fn std_dev(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt()
}

/// Bootstrap distribution of the median: `resamples` with-replacement
/// resamplings of `samples`.
pub fn bootstrap_medians(samples: &[f64], resamples: usize, seed: u64) -> Result<Vec<f64>> {
    if samples.len() < 2 {
        return Err(Error::domain("bootstrap needs at least 2 samples"));
    }
    if resamples < 100 {
        return Err(Error::domain("bootstrap needs at least 100 resamples"));
    }
    let mut stream = rng::stream(seed);
    let mut buf = Vec::with_capacity(samples.len());
    Ok((0..resamples)
        .map(|_| {
            resample(&mut stream, samples, &mut buf);
            median(&buf)
        })
        .collect())
}

/// `(median, standard deviation of the bootstrap medians)`.
pub fn bootstrap_median_error(samples: &[f64], resamples: usize, seed: u64) -> Result<(f64, f64)> {
    let medians = bootstrap_medians(samples, resamples, seed)?;
    Ok((median(samples), std_dev(&medians)))
}

/// Median with bootstrap error, plus the 80th percentile of the bootstrap
/// distribution reported as an upper bound when the median is compatible
/// with zero (`|median| < 2·error`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MedianEstimate {
    pub median: f64,
    pub error: f64,
    pub upper_bound_80: f64,
    pub compatible_with_zero: bool,
}

pub fn median_estimate(samples: &[f64], resamples: usize, seed: u64) -> Result<MedianEstimate> {
    let medians = bootstrap_medians(samples, resamples, seed)?;
    let m = median(samples);
    let error = std_dev(&medians);
    Ok(MedianEstimate {
        median: m,
        error,
        upper_bound_80: percentile(&medians, 80.0),
        compatible_with_zero: m.abs() < 2.0 * error || (m == 0.0 && error == 0.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainReport {
    /// Ratio of median infidelities (VQE over the method). `inf` when the
    /// method's median infidelity is zero.
    pub g_med: f64,
    pub g_med_err: f64,
    /// Ratio of minimum infidelities; reported without error.
    pub g_min: f64,
    pub infinite: bool,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            f64::NAN
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

/// Relative gains `med(1-F_VQE)/med(1-F_algo)` and `min(1-F_VQE)/min(1-F_algo)`.
/// The median ratio's error is the standard deviation over bootstrap
/// resamplings of both arrays.
pub fn gain_factors(vqe: &[f64], algo: &[f64], resamples: usize, seed: u64) -> Result<GainReport> {
    if vqe.is_empty() || algo.is_empty() {
        return Err(Error::domain("gain factors need non-empty fidelity arrays"));
    }
    if vqe.iter().chain(algo).any(|f| !(0.0..=1.0).contains(f)) {
        return Err(Error::domain("fidelities must lie in [0, 1]"));
    }
    let inf_v: Vec<f64> = vqe.iter().map(|f| 1.0 - f).collect();
    let inf_a: Vec<f64> = algo.iter().map(|f| 1.0 - f).collect();
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let g_med = ratio(median(&inf_v), median(&inf_a));
    let g_min = ratio(min(&inf_v), min(&inf_a));
    let infinite = g_med.is_infinite() || g_min.is_infinite();
    let g_med_err = if vqe.len() >= 2 && algo.len() >= 2 && g_med.is_finite() {
        if resamples < 100 {
            return Err(Error::domain("bootstrap needs at least 100 resamples"));
        }
        let mut stream = rng::stream(seed);
        let (mut bv, mut ba) = (Vec::new(), Vec::new());
        let ratios: Vec<f64> = (0..resamples)
            .filter_map(|_| {
                resample(&mut stream, &inf_v, &mut bv);
                resample(&mut stream, &inf_a, &mut ba);
                let r = ratio(median(&bv), median(&ba));
                r.is_finite().then_some(r)
            })
            .collect();
        if ratios.len() >= 2 {
            std_dev(&ratios)
        } else {
            f64::NAN
        }
    } else {
        f64::NAN
    };
    Ok(GainReport {
        g_med,
        g_med_err,
        g_min,
        infinite,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gain_examples() {
        let g = gain_factors(&[0.8], &[0.9], 1000, 1).unwrap();
        assert!((g.g_med - 2.0).abs() < 1e-12);
        let g = gain_factors(&[0.9], &[0.98], 1000, 1).unwrap();
        assert!((g.g_med - 5.0).abs() < 1e-9);
        assert!((g.g_min - 5.0).abs() < 1e-9);
        let same = [0.5, 0.7, 0.9];
        let g = gain_factors(&same, &same, 1000, 1).unwrap();
        assert_eq!((g.g_med, g.g_min), (1.0, 1.0));
    }

    #[test]
    fn perfect_fidelity_flags_infinite_gain() {
        let g = gain_factors(&[0.5, 0.6], &[1.0, 1.0], 1000, 1).unwrap();
        assert!(g.infinite && g.g_med.is_infinite());
    }

    #[test]
    fn percentiles() {
        let v = [3.0, 1.0, 2.0, 4.0];
        assert_eq!(median(&v), 2.5);
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 100.0), 4.0);
        assert!((percentile(&v, 25.0) - 1.75).abs() < 1e-15);
    }

    #[test]
    fn bootstrap_constant_and_seeded() {
        let (m, e) = bootstrap_median_error(&[2.0; 10], 500, 3).unwrap();
        assert_eq!((m, e), (2.0, 0.0));
        let v: Vec<f64> = (0..20).map(|i| (i as f64 * 1.7).sin()).collect();
        assert_eq!(
            bootstrap_median_error(&v, 500, 11).unwrap(),
            bootstrap_median_error(&v, 500, 11).unwrap()
        );
        assert!(bootstrap_median_error(&[1.0], 500, 1).is_err());
        assert!(bootstrap_median_error(&v, 10, 1).is_err());
    }
}
