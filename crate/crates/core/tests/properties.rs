//! Randomized invariants.

mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::Rng;
use subspace_vqe::metrics::{gain_factors, htrc_fidelity, normalized_cost, subspace_fidelity};
use subspace_vqe::nft::no_monitor;
use subspace_vqe::{
    dense_spectrum, estimate_frame_problem, hard_cost, init_parameters, materialize_frame, nft_update, optimize,
    pairwise_overlaps, soft_cost, solve_generalized, spectral_projector_overlap, Entangler, EstimationMode,
    FrameEvaluator, FrameMode, FrameSpec, Objective, OptimizerConfig, PauliSumOperator, StateVector,
};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

fn entangler(cnot: bool) -> Entangler {
    if cnot {
        Entangler::Cnot
    } else {
        Entangler::Cz
    }
}

/// A random frame spec of the given mode on `q` qubits.
fn frame_spec<R: Rng>(r: &mut R, mode: FrameMode, q: usize) -> FrameSpec {
    let ansatz = ring_ansatz(q, r.random_range(1..=3), entangler(r.random_bool(0.5)));
    match mode {
        FrameMode::Single => FrameSpec::single(ansatz),
        FrameMode::HardOrtho => FrameSpec::hard(ansatz, r.random_range(1..=(1usize << q).min(3))),
        FrameMode::SoftOrtho => FrameSpec::soft(ansatz, r.random_range(1..=3), r.random_range(0.5..10.0)),
    }
}

fn mode_of(i: u8) -> FrameMode {
    [FrameMode::Single, FrameMode::HardOrtho, FrameMode::SoftOrtho][i as usize % 3]
}

fn pauli_sum_sum(a: &PauliSumOperator, b: &PauliSumOperator) -> PauliSumOperator {
    a.plus(b).unwrap()
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn circuits_preserve_norm(seed in any::<u64>(), q in 1usize..=6) {
        let mut r = rng(seed);
        let c = random_circuit(&mut r, q, 30);
        let mut s = random_state(&mut r, q);
        s.apply_circuit(&c).unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn expectation_is_linear_and_real(seed in any::<u64>(), q in 1usize..=6) {
        let mut r = rng(seed);
        let a = random_operator(&mut r, q, 5);
        let b = random_operator(&mut r, q, 5);
        let s = random_state(&mut r, q);
        let sum = pauli_sum_sum(&a, &b).expectation(&s).unwrap();
        prop_assert!((sum - a.expectation(&s).unwrap() - b.expectation(&s).unwrap()).abs() < 1e-10);
        prop_assert!(a.expectation_complex(&s).unwrap().im.abs() < 1e-10);
    }

    #[test]
    fn cached_frame_states_match_plain_circuits(seed in any::<u64>(), q in 1usize..=5, m in 0u8..3) {
        let mut r = rng(seed);
        let spec = frame_spec(&mut r, mode_of(m), q);
        let h = random_real_operator(&mut r, q, 4);
        let mut eval = FrameEvaluator::new(spec.clone(), h).unwrap();
        let mut params = random_angles(&mut r, spec.parameter_count());
        // Warm the caches, then change one angle so only part is recomputed.
        eval.states(&params).unwrap();
        let j = r.random_range(0..params.len());
        params[j] += 0.7;
        let states = eval.states(&params).unwrap();
        for (p, s) in states.iter().enumerate() {
            let mut direct = StateVector::zero(q).unwrap();
            direct.apply_circuit(&spec.member_circuit(&params, p).unwrap()).unwrap();
            let diff = s.amplitudes().iter().zip(direct.amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            prop_assert!(diff < 1e-10, "member {p}: {diff}");
        }
    }

    #[test]
    fn hard_frames_are_orthonormal(seed in any::<u64>(), q in 1usize..=6) {
        let mut r = rng(seed);
        let spec = frame_spec(&mut r, FrameMode::HardOrtho, q);
        let params = random_angles(&mut r, spec.parameter_count());
        let s = pairwise_overlaps(&materialize_frame(&spec, &params).unwrap());
        let k = s.nrows();
        prop_assert!(max_abs_diff(&s, &DMatrix::identity(k, k)) < 1e-10);
    }

    #[test]
    fn overlap_matrix_is_hermitian_with_unit_diagonal(seed in any::<u64>(), q in 1usize..=5) {
        let mut r = rng(seed);
        let spec = frame_spec(&mut r, FrameMode::SoftOrtho, q);
        let params = random_angles(&mut r, spec.parameter_count());
        let s = pairwise_overlaps(&materialize_frame(&spec, &params).unwrap());
        prop_assert!(max_abs_diff(&s, &s.adjoint()) < 1e-12);
        for i in 0..s.nrows() {
            prop_assert!((s[(i, i)] - C64::new(1.0, 0.0)).norm() < 1e-10);
        }
    }
}

/// Least-squares fit of `a cos θ + b sin θ + c`; returns the largest residual.
fn sinusoid_residual(thetas: &[f64], values: &[f64]) -> f64 {
    let x = DMatrix::from_fn(thetas.len(), 3, |i, j| match j {
        0 => thetas[i].cos(),
        1 => thetas[i].sin(),
        _ => 1.0,
    });
    let y = DVector::from_column_slice(values);
    let coef = (x.transpose() * &x).try_inverse().unwrap() * x.transpose() * &y;
    (x * coef - y).amax()
}

proptest! {
    #![proptest_config(config(128))]

    #[test]
    fn costs_are_sinusoidal_in_each_angle(seed in any::<u64>(), q in 1usize..=5, m in 0u8..3) {
        let mut r = rng(seed);
        let spec = frame_spec(&mut r, mode_of(m), q);
        let h = random_real_operator(&mut r, q, 5);
        let mut params = random_angles(&mut r, spec.parameter_count());
        let j = r.random_range(0..params.len());
        let thetas: Vec<f64> = (0..8).map(|i| -3.0 + 0.8 * i as f64).collect();
        let mut hard = Vec::new();
        let mut soft = Vec::new();
        for &t in &thetas {
            params[j] = t;
            let frame = materialize_frame(&spec, &params).unwrap();
            hard.push(hard_cost(&frame, &h).unwrap());
            soft.push(soft_cost(&frame, &h, 2.5).unwrap().0);
        }
        prop_assert!(sinusoid_residual(&thetas, &hard) < 1e-8);
        prop_assert!(sinusoid_residual(&thetas, &soft) < 1e-8);
    }

    #[test]
    fn frame_energies_are_bounded(seed in any::<u64>(), q in 1usize..=5, m in 0u8..3) {
        let mut r = rng(seed);
        let spec = frame_spec(&mut r, mode_of(m), q);
        let h = random_real_operator(&mut r, q, 5);
        let e0 = dense_spectrum(&h).unwrap().ground_energy();
        let params = random_angles(&mut r, spec.parameter_count());
        let frame = materialize_frame(&spec, &params).unwrap();
        let (total, energy, penalty) = soft_cost(&frame, &h, spec.beta.max(1.0)).unwrap();
        prop_assert!(penalty >= 0.0 && total >= energy);
        prop_assert!(energy >= spec.k as f64 * e0 - 1e-9);
    }

    #[test]
    fn subspace_solution_is_variational_and_consistent(seed in any::<u64>(), q in 1usize..=6, m in 0u8..3) {
        let mut r = rng(seed);
        let spec = frame_spec(&mut r, mode_of(m), q);
        let h = random_real_operator(&mut r, q, 6);
        let spectrum = dense_spectrum(&h).unwrap();
        let ground = spectrum.ground_space().unwrap();
        let params = random_angles(&mut r, spec.parameter_count());
        let frame = materialize_frame(&spec, &params).unwrap();
        let problem = estimate_frame_problem(&spec, &params, &h, EstimationMode::Analytic).unwrap();
        prop_assert!(problem.hermiticity_defect() < 1e-12);
        let solution = solve_generalized(&problem, &frame.states).unwrap();
        prop_assert!(solution.lambda0 >= spectrum.ground_energy() - 1e-9);
        let f_sub = subspace_fidelity(&frame.states, &ground).unwrap();
        let f_trc = htrc_fidelity(&solution, &ground).unwrap();
        prop_assert!(f_trc <= f_sub + 1e-9, "{f_trc} > {f_sub}");
        if solution.retained_rank == spec.k {
            let e = h.expectation(solution.state().unwrap()).unwrap();
            prop_assert!((e - solution.lambda0).abs() < 1e-8);
        }
    }

    #[test]
    fn hadamard_protocol_matches_direct_elements(seed in any::<u64>(), q in 1usize..=6) {
        let mut r = rng(seed);
        let spec = frame_spec(&mut r, FrameMode::SoftOrtho, q);
        let h = random_real_operator(&mut r, q, 4);
        let params = random_angles(&mut r, spec.parameter_count());
        let frame = materialize_frame(&spec, &params).unwrap();
        let problem = estimate_frame_problem(&spec, &params, &h, EstimationMode::Analytic).unwrap();
        prop_assert!(max_abs_diff(&problem.s, &pairwise_overlaps(&frame)) < 1e-10);
        for p in 0..spec.k {
            for qq in 0..spec.k {
                let direct = h.matrix_element(&frame.states[p], &frame.states[qq]).unwrap();
                prop_assert!((problem.h[(p, qq)] - direct).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn projector_sum_rule_and_monotonicity(seed in any::<u64>(), q in 1usize..=5) {
        let mut r = rng(seed);
        let h = random_real_operator(&mut r, q, 5);
        let spectrum = dense_spectrum(&h).unwrap();
        let psi = random_state(&mut r, q);
        let (values, vectors) = eigh(&operator_matrix(&h));
        let lo = values[0] - 1.0;
        let hi = values[values.len() - 1] + 1.0;
        let mut mus: Vec<f64> = (0..20).map(|_| r.random_range(lo..hi)).collect();
        mus.sort_by(f64::total_cmp);
        let mut last = f64::INFINITY;
        for mu in mus {
            let above = spectrum_overlap(&psi, &spectrum, mu);
            let below: f64 = values
                .iter()
                .enumerate()
                .filter(|&(_, &e)| e <= mu)
                .map(|(i, _)| column(&vectors, i).inner(&psi).unwrap().norm_sqr())
                .sum();
            // The spectra differ at rounding level; skip μ that sit on a level.
            if values.iter().all(|e| (e - mu).abs() > 1e-9) {
                prop_assert!((above + below - 1.0).abs() < 1e-10);
            }
            prop_assert!(above <= last + 1e-12);
            last = above;
        }
        prop_assert!((spectrum_overlap(&psi, &spectrum, lo) - 1.0).abs() < 1e-10);
        prop_assert!(spectrum_overlap(&psi, &spectrum, hi).abs() < 1e-12);
    }

    #[test]
    fn projector_includes_degenerate_groups_whole(seed in any::<u64>(), q in 2usize..=5) {
        let mut r = rng(seed);
        // A sum of single-qubit Z fields has large degenerate levels.
        let mut h = PauliSumOperator::identity(q, 0.0).unwrap();
        let field = r.random_range(0.5..2.0);
        for i in 0..q {
            let z = subspace_vqe::PauliString::from_sparse(q, field, &[(i, subspace_vqe::Pauli::Z)]).unwrap();
            h = h.plus(&PauliSumOperator::new(q, vec![z]).unwrap()).unwrap();
        }
        let spectrum = dense_spectrum(&h).unwrap();
        let psi = random_state(&mut r, q);
        for group in spectrum.degeneracy_groups() {
            let reference = spectrum_overlap(&psi, &spectrum, spectrum.eigenvalues()[group[0]]);
            for &i in group {
                let v = spectral_projector_overlap(&psi, &spectrum, spectrum.eigenvalues()[i]).unwrap();
                prop_assert!((v - reference).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn normalized_cost_endpoints(seed in any::<u64>(), q in 2usize..=5, k in 1usize..=3) {
        let mut r = rng(seed);
        let h = random_real_operator(&mut r, q, 5);
        let spectrum = dense_spectrum(&h).unwrap();
        let c_min: f64 = spectrum.lowest(k).unwrap().iter().sum();
        let c_max: f64 = spectrum.highest(k).unwrap().iter().sum();
        prop_assume!(c_max > c_min);
        prop_assert_eq!(normalized_cost(c_min, &spectrum, k).unwrap(), 0.0);
        prop_assert_eq!(normalized_cost(c_max, &spectrum, k).unwrap(), 1.0);
        let spec = FrameSpec::hard(ring_ansatz(q, 2, Entangler::Cz), k);
        let params = random_angles(&mut r, spec.parameter_count());
        let e = hard_cost(&materialize_frame(&spec, &params).unwrap(), &h).unwrap();
        let c = normalized_cost(e, &spectrum, k).unwrap();
        prop_assert!((-1e-10..=1.0 + 1e-10).contains(&c));
    }

    #[test]
    fn gains_are_scale_invariant(seed in any::<u64>(), n in 2usize..12, scale in 0.01f64..1.0) {
        let mut r = rng(seed);
        let vqe: Vec<f64> = (0..n).map(|_| r.random_range(0.0..0.9)).collect();
        let algo: Vec<f64> = (0..n).map(|_| r.random_range(0.0..0.9)).collect();
        let rescale = |f: &[f64]| f.iter().map(|x| 1.0 - scale * (1.0 - x)).collect::<Vec<_>>();
        let a = gain_factors(&vqe, &algo, 200, 1).unwrap();
        let b = gain_factors(&rescale(&vqe), &rescale(&algo), 200, 1).unwrap();
        prop_assert!((a.g_med - b.g_med).abs() < 1e-12 * a.g_med.abs().max(1.0));
        prop_assert!((a.g_min - b.g_min).abs() < 1e-12 * a.g_min.abs().max(1.0));
        let same = gain_factors(&vqe, &vqe, 200, 1).unwrap();
        prop_assert_eq!(same.g_med, 1.0);
        prop_assert_eq!(same.g_min, 1.0);
    }
}

fn spectrum_overlap(psi: &StateVector, spectrum: &subspace_vqe::SpectrumResult, mu: f64) -> f64 {
    spectral_projector_overlap(psi, spectrum, mu).unwrap()
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn nft_updates_are_line_minima(seed in any::<u64>(), q in 1usize..=4, m in 0u8..3) {
        let mut r = rng(seed);
        let spec = frame_spec(&mut r, mode_of(m), q);
        let h = random_real_operator(&mut r, q, 5);
        let mut eval = FrameEvaluator::new(spec.clone(), h).unwrap();
        let mut params = random_angles(&mut r, spec.parameter_count());
        let j = r.random_range(0..params.len());
        let current = eval.evaluate(&params).unwrap();
        let update = nft_update(&mut eval, &mut params, j, &current).unwrap();
        let at = eval.evaluate(&params).unwrap().total;
        prop_assert!((at - update.cost.total).abs() < 1e-9);
        for delta in [-0.05, 0.05] {
            let mut p = params.clone();
            p[j] += delta;
            prop_assert!(eval.evaluate(&p).unwrap().total >= at - 1e-9);
        }
    }

    #[test]
    fn optimization_descends_monotonically_and_deterministically(seed in any::<u64>(), q in 1usize..=4, m in 0u8..3) {
        let mut r = rng(seed);
        let spec = frame_spec(&mut r, mode_of(m), q);
        let h = random_real_operator(&mut r, q, 5);
        let config = OptimizerConfig { max_iterations: 60, rng_seed: seed, ..OptimizerConfig::default() };
        let run = || {
            let mut eval = FrameEvaluator::new(spec.clone(), h.clone()).unwrap();
            let init = init_parameters(spec.parameter_count(), &config).unwrap();
            optimize(&mut eval, init, &config, no_monitor).unwrap()
        };
        let (a, b) = (run(), run());
        let mut last = a.initial_cost.total;
        for rec in &a.records {
            prop_assert!(rec.cost <= last + 1e-9);
            last = rec.cost;
        }
        let costs = |t: &subspace_vqe::RunTrace| t.records.iter().map(|x| x.cost.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(costs(&a), costs(&b));
    }
}

#[test]
fn initial_parameters_are_reproducible() {
    let config = OptimizerConfig {
        rng_seed: 5,
        ..OptimizerConfig::default()
    };
    assert_eq!(init_parameters(50, &config).unwrap(), init_parameters(50, &config).unwrap());
}
