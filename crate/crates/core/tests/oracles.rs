//! Checks against independent brute-force references.

mod common;

use common::*;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;
use subspace_vqe::estimator::estimate_subspace_problem;
use subspace_vqe::metrics::{bootstrap_median_error, htrc_fidelity, subspace_fidelity};
use subspace_vqe::nft::no_monitor;
use subspace_vqe::{
    build_hamiltonian, build_lattice, dense_spectrum, estimate_hamiltonian_entry, estimate_hard_offdiagonals,
    estimate_overlap_entry, extremal_spectrum, hadamard_test_state, hard_cost, init_parameters, materialize_frame,
    optimize, sample_ancilla, sample_ea_couplings, solve_generalized, tfi_chain, Circuit, Entangler, EstimationMode,
    FrameEvaluator, FrameSpec, Gate, GroundSpace, ModelSpec, Objective, OptimizerConfig, StateVector,
    TruncatedProblem,
};

#[test]
fn circuits_match_kronecker_products() {
    let mut r = rng(11);
    for trial in 0..200 {
        let q = 1 + trial % 4;
        let c = random_circuit(&mut r, q, 12);
        let u = circuit_matrix(&c, q);
        for input in [0, (1 << q) - 1, r.random_range(0..1 << q)] {
            let mut s = StateVector::basis(q, input).unwrap();
            s.apply_circuit(&c).unwrap();
            for (k, a) in s.amplitudes().iter().enumerate() {
                assert!((a - u[(k, input)]).norm() < 1e-10, "q={q} input={input} k={k}");
            }
        }
    }
}

#[test]
fn hadamard_test_state_has_branch_structure() {
    let mut r = rng(12);
    for q in 1..=3 {
        let up = random_circuit(&mut r, q, 10);
        let uq = random_circuit(&mut r, q, 10);
        let psi_p = circuit_matrix(&up, q).column(0).into_owned();
        let psi_q = circuit_matrix(&uq, q).column(0).into_owned();
        for b in [false, true] {
            let phase = if b { C64::new(0.0, -1.0) } else { C64::new(1.0, 0.0) };
            let zero_branch = (&psi_p + &psi_q * phase) * C64::new(0.5, 0.0);
            let one_branch = (&psi_p - &psi_q * phase) * C64::new(0.5, 0.0);
            let s = hadamard_test_state(&up, &uq, b).unwrap();
            let d = 1 << q;
            for k in 0..d {
                assert!((s.amplitudes()[k] - zero_branch[k]).norm() < 1e-10);
                assert!((s.amplitudes()[d + k] - one_branch[k]).norm() < 1e-10);
            }
        }
    }
}

#[test]
fn ry_overlap_with_zero_is_cosine() {
    let mut r = rng(13);
    for _ in 0..100 {
        let theta = r.random_range(-10.0..10.0);
        let mut s = StateVector::zero(1).unwrap();
        s.apply_gate(&Gate::Ry { qubit: 0, angle: theta }).unwrap();
        let direct = (ry(theta) * DMatrix::from_column_slice(2, 1, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]))[(0, 0)];
        let zero = StateVector::zero(1).unwrap();
        let overlap = zero.inner(&s).unwrap();
        assert!((overlap - direct).norm() < 1e-12);
        assert!((overlap.re - (theta / 2.0).cos()).abs() < 1e-12 && overlap.im.abs() < 1e-12);
    }
}

#[test]
fn chain_ground_energy_matches_dense_oracle() {
    for (h_field, closed_form) in [(2.0, -(17.0f64).sqrt()), (3.044, -(1.0 + 4.0 * 3.044f64 * 3.044).sqrt())] {
        let h = tfi_chain(2, 1.0, h_field).unwrap();
        let (values, vectors) = eigh(&operator_matrix(&h));
        assert!((values[0] - closed_form).abs() < 1e-10);
        let ground = column(&vectors, 0);
        assert!((h.expectation(&ground).unwrap() - values[0]).abs() < 1e-10);
        let spectrum = dense_spectrum(&h).unwrap();
        assert!((spectrum.ground_energy() - values[0]).abs() < 1e-10);
        for (a, b) in spectrum.eigenvalues().iter().zip(&values) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn operator_matrices_match_kronecker_products() {
    let mut r = rng(14);
    for q in 1..=4 {
        let h = random_operator(&mut r, q, 6);
        let m = operator_matrix(&h);
        assert!(max_abs_diff(&h.dense_matrix(), &m) < 1e-12);
        let s = random_state(&mut r, q);
        let e = sandwich(&s, &m, &s);
        assert!((h.expectation(&s).unwrap() - e.re).abs() < 1e-10);
        let hs = h.apply(&s).unwrap();
        let direct = &m * to_vector(&s);
        for (a, b) in hs.amplitudes().iter().zip(direct.iter()) {
            assert!((a - b).norm() < 1e-10);
        }
    }
}

#[test]
fn ea_couplings_are_standard_normal() {
    let lattice = build_lattice(224, 224, true).unwrap();
    let values: Vec<f64> = sample_ea_couplings(&lattice, 2024).iter().map(|c| c.value).collect();
    assert!(values.len() >= 100_000);
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!(mean.abs() <= 0.02, "mean {mean}");
    assert!((0.98..=1.02).contains(&var), "variance {var}");
}

#[test]
fn dense_spectrum_residuals_on_3x3_tfi() {
    let h = build_hamiltonian(&ModelSpec::tfi(3, 3, true, 1.0, 3.044)).unwrap();
    let spectrum = dense_spectrum(&h).unwrap();
    assert_eq!(spectrum.eigenvalues().len(), 512);
    let vectors = spectrum.eigenvectors().unwrap();
    for (e, v) in spectrum.eigenvalues().iter().zip(vectors) {
        let hv = h.apply(v).unwrap();
        let residual: f64 = hv
            .amplitudes()
            .iter()
            .zip(v.amplitudes())
            .map(|(a, b)| (a - b * e).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(residual < 1e-8, "residual {residual} at {e}");
    }
}

#[test]
fn extremal_ground_energy_matches_dense() {
    let h = build_hamiltonian(&ModelSpec::tfi(3, 3, true, 1.0, 3.044)).unwrap();
    let dense = dense_spectrum(&h).unwrap();
    let lanczos = extremal_spectrum(&h, 1, 0).unwrap();
    assert!((lanczos.ground_energy() - dense.ground_energy()).abs() < 1e-8);
}

#[test]
fn extremal_low_states_of_ea_have_small_residuals() {
    let h = build_hamiltonian(&ModelSpec::ea(4, 4, true, 2.0, 5)).unwrap();
    let spectrum = extremal_spectrum(&h, 8, 0).unwrap();
    let low = spectrum.lowest(8).unwrap();
    assert!(low.windows(2).all(|w| w[0] <= w[1]));
    for (e, v) in spectrum.eigenvalues().iter().zip(spectrum.eigenvectors().unwrap()) {
        let hv = h.apply(v).unwrap();
        let residual: f64 = hv
            .amplitudes()
            .iter()
            .zip(v.amplitudes())
            .map(|(a, b)| (a - b * e).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(residual < 1e-8, "residual {residual} at {e}");
    }
}

#[test]
fn classical_limit_matches_spin_enumeration() {
    let spec = ModelSpec::tfi(2, 2, false, 1.0, 0.0);
    let lattice = spec.lattice().unwrap();
    assert_eq!(lattice.edges().len(), 4);
    let brute = (0..16u32)
        .map(|cfg| {
            let s = |i: usize| if cfg >> i & 1 == 1 { -1.0 } else { 1.0 };
            -lattice.edges().iter().map(|&(i, j)| s(i) * s(j)).sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min);
    assert_eq!(brute, -4.0);
    let spectrum = dense_spectrum(&build_hamiltonian(&spec).unwrap()).unwrap();
    assert!((spectrum.ground_energy() - brute).abs() < 1e-10);
}

#[test]
fn hard_cost_is_trace_of_projected_hamiltonian() {
    let mut r = rng(15);
    for _ in 0..20 {
        let h = random_real_operator(&mut r, 2, 5);
        let spec = FrameSpec::hard(ring_ansatz(2, 2, Entangler::Cz), 2);
        let params = random_angles(&mut r, spec.parameter_count());
        let frame = materialize_frame(&spec, &params).unwrap();
        let u = circuit_matrix(&spec.member_circuit(&params, 0).unwrap(), 2);
        let basis = u.columns(0, 2).into_owned();
        let projected = basis.adjoint() * operator_matrix(&h) * &basis;
        let trace = projected[(0, 0)].re + projected[(1, 1)].re;
        assert!((hard_cost(&frame, &h).unwrap() - trace).abs() < 1e-10);
    }
}

#[test]
fn hadamard_route_matches_direct_overlaps_and_matrix_elements() {
    let mut r = rng(16);
    for q in 1..=4 {
        for _ in 0..10 {
            let up = random_circuit(&mut r, q, 10);
            let uq = random_circuit(&mut r, q, 10);
            let psi_p = column(&circuit_matrix(&up, q), 0);
            let psi_q = column(&circuit_matrix(&uq, q), 0);
            let s = estimate_overlap_entry(&up, &uq, EstimationMode::Analytic).unwrap();
            assert!((s - psi_p.inner(&psi_q).unwrap()).norm() < 1e-10);
            let h = random_operator(&mut r, q, 5);
            let hpq = estimate_hamiltonian_entry(&up, &uq, &h, EstimationMode::Analytic).unwrap();
            let direct = sandwich(&psi_p, &operator_matrix(&h), &psi_q);
            assert!((hpq - direct).norm() < 1e-10, "q={q}: {hpq} vs {direct}");
        }
    }
}

#[test]
fn hard_route_agrees_with_hadamard_route() {
    let mut r = rng(17);
    for q in 2..=4 {
        for k in 2..=3 {
            let spec = FrameSpec::hard(ring_ansatz(q, 2, Entangler::Cnot), k);
            let params = random_angles(&mut r, spec.parameter_count());
            let h = random_real_operator(&mut r, q, 6);
            let u = subspace_vqe::build_ansatz_circuit(&spec.ansatz, &params).unwrap();
            let hard = estimate_hard_offdiagonals(&u, k, &h, EstimationMode::Analytic).unwrap();
            let circuits: Vec<Circuit> = (0..k).map(|p| spec.member_circuit(&params, p).unwrap()).collect();
            let general = estimate_subspace_problem(&circuits, &h, EstimationMode::Analytic).unwrap();
            assert!(max_abs_diff(&hard.h, &general.h) < 1e-10);
            assert!(max_abs_diff(&hard.s, &general.s) < 1e-10);
        }
    }
}

#[test]
fn shot_estimate_of_overlap_is_within_binomial_band() {
    let mut r = rng(18);
    let up = random_circuit(&mut r, 3, 12);
    let uq = random_circuit(&mut r, 3, 12);
    let exact = estimate_overlap_entry(&up, &uq, EstimationMode::Analytic).unwrap();
    let shots = EstimationMode::Shots {
        shots: 1_000_000,
        seed: 7,
    };
    let est = estimate_overlap_entry(&up, &uq, shots).unwrap();
    assert!((est - exact).norm() < 5e-3, "{est} vs {exact}");
}

#[test]
fn ancilla_in_plus_state_samples_evenly() {
    let mut s = StateVector::zero(2).unwrap();
    s.apply_gate(&Gate::H(1)).unwrap();
    let counts = sample_ancilla(&s, 1, 100_000, 2024).unwrap();
    let f = counts.m0 as f64 / 1e5;
    assert!((0.49..=0.51).contains(&f), "{f}");
}

/// Problem matrices computed directly from dense states.
fn dense_problem(states: &[StateVector], h: &DMatrix<C64>) -> TruncatedProblem {
    let k = states.len();
    TruncatedProblem {
        h: DMatrix::from_fn(k, k, |p, q| sandwich(&states[p], h, &states[q])),
        s: DMatrix::from_fn(k, k, |p, q| states[p].inner(&states[q]).unwrap()),
    }
}

fn mix(a: &StateVector, ca: C64, b: &StateVector, cb: C64) -> StateVector {
    let mut s = a.linear_combination(ca, b, cb).unwrap();
    s.normalize().unwrap();
    s
}

#[test]
fn generalized_solver_recovers_ground_energy_from_mixed_eigenvectors() {
    let mut r = rng(19);
    for _ in 0..20 {
        let h = random_real_operator(&mut r, 3, 6);
        let m = operator_matrix(&h);
        let (values, vectors) = eigh(&m);
        let (e0, e1) = (column(&vectors, 0), column(&vectors, 1));
        let mut coeff = || C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
        let states = vec![mix(&e0, coeff(), &e1, coeff()), mix(&e0, coeff(), &e1, coeff())];
        let solution = solve_generalized(&dense_problem(&states, &m), &states).unwrap();
        assert!((solution.lambda0 - values[0]).abs() < 1e-9);
        assert!((solution.eigenvalues[1] - values[1]).abs() < 1e-9);
    }
}

#[test]
fn duplicated_state_reduces_rank() {
    let mut r = rng(20);
    let h = random_real_operator(&mut r, 3, 6);
    let m = operator_matrix(&h);
    let psi = random_state(&mut r, 3);
    let states = vec![psi.clone(), psi.clone()];
    let solution = solve_generalized(&dense_problem(&states, &m), &states).unwrap();
    assert_eq!(solution.retained_rank, 1);
    assert!((solution.lambda0 - h.expectation(&psi).unwrap()).abs() < 1e-10);
}

/// `‖P_V g‖²` with `P_V = B (B†B)⁻¹ B†`.
fn projector_fidelity(states: &[StateVector], ground: &StateVector) -> f64 {
    let d = ground.dim();
    let b = DMatrix::from_fn(d, states.len(), |i, p| states[p].amplitudes()[i]);
    let gram_inv = (b.adjoint() * &b).try_inverse().unwrap();
    let projector = &b * gram_inv * b.adjoint();
    let g = to_vector(ground);
    (projector * g).norm_squared()
}

#[test]
fn subspace_fidelity_matches_projector_oracle() {
    let mut r = rng(21);
    for _ in 0..50 {
        let q = r.random_range(2..=4);
        let states = vec![random_state(&mut r, q), random_state(&mut r, q)];
        let ground = random_state(&mut r, q);
        let space = GroundSpace {
            energy: 0.0,
            vectors: vec![ground.clone()],
        };
        let f = subspace_fidelity(&states, &space).unwrap();
        assert!((f - projector_fidelity(&states, &ground)).abs() < 1e-9);
    }
}

#[test]
fn exact_eigenspace_frame_has_unit_fidelities() {
    let mut r = rng(22);
    let h = random_real_operator(&mut r, 3, 6);
    let m = operator_matrix(&h);
    let (_, vectors) = eigh(&m);
    let (e0, e1) = (column(&vectors, 0), column(&vectors, 1));
    let states = vec![
        mix(&e0, C64::new(0.3, 0.1), &e1, C64::new(-0.8, 0.2)),
        mix(&e0, C64::new(0.5, 0.0), &e1, C64::new(0.4, -0.6)),
    ];
    let spectrum = dense_spectrum(&h).unwrap();
    let ground = spectrum.ground_space().unwrap();
    let solution = solve_generalized(&dense_problem(&states, &m), &states).unwrap();
    let f_sub = subspace_fidelity(&states, &ground).unwrap();
    let f_trc = htrc_fidelity(&solution, &ground).unwrap();
    assert!((f_trc - 1.0).abs() < 1e-9);
    assert!((f_sub - f_trc).abs() < 1e-9);
}

#[test]
fn single_qubit_vqe_reaches_minus_one_in_one_sweep() {
    let h = subspace_vqe::PauliSumOperator::new(1, vec![subspace_vqe::PauliString::from_letters(-1.0, "Z").unwrap()])
        .unwrap();
    let spec = FrameSpec::single(subspace_vqe::AnsatzSpec::new(1, 1, Entangler::Cz, &[]).unwrap());
    let mut eval = FrameEvaluator::new(spec.clone(), h.clone()).unwrap();
    let config = OptimizerConfig {
        max_iterations: spec.parameter_count(),
        rng_seed: 3,
        ..OptimizerConfig::default()
    };
    let init = init_parameters(spec.parameter_count(), &config).unwrap();
    let trace = optimize(&mut eval, init, &config, no_monitor).unwrap();
    let state = &materialize_frame(&spec, &trace.final_params).unwrap().states[0];
    assert!((h.expectation(state).unwrap() + 1.0).abs() < 1e-9);
}

#[test]
fn two_site_chain_vqe_converges_to_ground_energy() {
    let h = tfi_chain(2, 1.0, 3.044).unwrap();
    let (values, _) = eigh(&operator_matrix(&h));
    let spec = FrameSpec::single(ring_ansatz(2, 2, Entangler::Cz));
    let mut eval = FrameEvaluator::new(spec.clone(), h.clone()).unwrap();
    let config = OptimizerConfig {
        max_iterations: 300,
        rng_seed: 1,
        ..OptimizerConfig::default()
    };
    let init = init_parameters(spec.parameter_count(), &config).unwrap();
    let trace = optimize(&mut eval, init, &config, no_monitor).unwrap();
    let energy = eval.evaluate(&trace.final_params).unwrap().energy;
    assert!((energy - values[0]).abs() < 1e-6, "{energy} vs {}", values[0]);
}

#[test]
fn initial_parameters_are_centred() {
    let config = OptimizerConfig {
        rng_seed: 99,
        ..OptimizerConfig::default()
    };
    let draws = init_parameters(100_000, &config).unwrap();
    let bound = config.init_range;
    assert!(draws.iter().all(|&x| (-bound..=bound).contains(&x)));
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    assert!(mean.abs() <= 0.01, "{mean}");
}

#[test]
fn bootstrap_error_matches_median_sampling_formula() {
    // For n draws from U(0,1) the sample median has standard error
    // 1 / (2 f(m) √n) with density f(m) = 1.
    let mut r = rng(23);
    let mut ratios = Vec::new();
    for seed in 0..20 {
        let samples: Vec<f64> = (0..100).map(|_| r.random_range(0.0..1.0)).collect();
        let (_, err) = bootstrap_median_error(&samples, 10_000, seed).unwrap();
        ratios.push(err / 0.05);
    }
    let mean_ratio = ratios.iter().sum::<f64>() / ratios.len() as f64;
    assert!((mean_ratio - 1.0).abs() < 0.2, "bootstrap/analytic = {mean_ratio}");
}
