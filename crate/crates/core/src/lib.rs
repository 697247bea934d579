//! Statevector simulation of variational eigensolvers over parameterized
//! subspaces: single-state VQE, frames made orthogonal by construction, and
//! frames kept orthogonal by an overlap penalty.

pub mod ansatz;
pub mod circuit;
pub mod error;
pub mod estimator;
pub mod frame;
pub mod metrics;
pub mod models;
pub mod nft;
pub mod pauli;
pub mod rng;
pub mod statevector;

pub use ansatz::{build_ansatz_circuit, AnsatzSpec, Entangler, ParameterVector};
pub use circuit::{Circuit, Gate, Op};
pub use error::{Error, Result};
pub use estimator::{
    estimate_frame_problem, estimate_hamiltonian_entry, estimate_hard_offdiagonals, estimate_overlap_entry,
    hadamard_test_state, solve_generalized, EstimationMode, GroundSolution, TruncatedProblem,
};
pub use frame::{
    hard_cost, materialize_frame, pairwise_overlaps, soft_cost, Frame, FrameEvaluator, FrameMode, FrameSpec,
};
pub use models::{
    build_hamiltonian, build_lattice, dense_spectrum, extremal_spectrum, sample_ea_couplings,
    spectral_projector_overlap, tfi_chain, EdgeCoupling, GroundSpace, LatticeGraph, ModelKind, ModelSpec, SpectrumMode,
    SpectrumResult,
};
pub use nft::{init_parameters, nft_update, optimize, CostBreakdown, Objective, OptimizerConfig, RunTrace};
pub use pauli::{Pauli, PauliString, PauliSumOperator};
pub use statevector::{init_basis_state, inner_product, sample_ancilla, Counts, StateVector};
