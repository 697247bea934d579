//! Brute-force reference implementations shared by the integration tests.
//! Everything here is built from explicit Kronecker products and dense
//! linear algebra, independently of the simulator's kernels.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use subspace_vqe::{AnsatzSpec, Circuit, Entangler, Gate, Op, Pauli, PauliString, PauliSumOperator, StateVector};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn m2(a: C64, b: C64, cc: C64, d: C64) -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[a, b, cc, d])
}

pub fn identity2() -> DMatrix<C64> {
    DMatrix::identity(2, 2)
}

pub fn ry(theta: f64) -> DMatrix<C64> {
    let (s, co) = (theta / 2.0).sin_cos();
    m2(c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0))
}

pub fn rz(theta: f64) -> DMatrix<C64> {
    m2(C64::from_polar(1.0, -theta / 2.0), c(0.0, 0.0), c(0.0, 0.0), C64::from_polar(1.0, theta / 2.0))
}

pub fn pauli(p: Pauli) -> DMatrix<C64> {
    let (o, z) = (c(1.0, 0.0), c(0.0, 0.0));
    match p {
        Pauli::I => identity2(),
        Pauli::X => m2(z, o, o, z),
        Pauli::Y => m2(z, c(0.0, -1.0), c(0.0, 1.0), z),
        Pauli::Z => m2(o, z, z, -o),
    }
}

fn projector(bit: bool) -> DMatrix<C64> {
    let (o, z) = (c(1.0, 0.0), c(0.0, 0.0));
    if bit {
        m2(z, z, z, o)
    } else {
        m2(o, z, z, z)
    }
}

/// `m` on `qubit` of a `q`-qubit register; qubit 0 is the rightmost factor.
pub fn embed(m: &DMatrix<C64>, qubit: usize, q: usize) -> DMatrix<C64> {
    let mut out = DMatrix::<C64>::identity(1, 1);
    for k in (0..q).rev() {
        out = if k == qubit { out.kronecker(m) } else { out.kronecker(&identity2()) };
    }
    out
}

pub fn gate_matrix(gate: &Gate, q: usize) -> DMatrix<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match *gate {
        Gate::Ry { qubit, angle } => embed(&ry(angle), qubit, q),
        Gate::Rz { qubit, angle } => embed(&rz(angle), qubit, q),
        Gate::H(k) => embed(&m2(c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)), k, q),
        Gate::X(k) => embed(&pauli(Pauli::X), k, q),
        Gate::SDagger(k) => embed(&m2(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, -1.0)), k, q),
        Gate::Cz { a, b } => {
            let both = embed(&projector(true), a, q) * embed(&projector(true), b, q);
            DMatrix::identity(1 << q, 1 << q) - both * c(2.0, 0.0)
        }
        Gate::Cnot { control, target } => {
            embed(&projector(false), control, q)
                + embed(&projector(true), control, q) * embed(&pauli(Pauli::X), target, q)
        }
    }
}

/// Matrix of a whole circuit on its `q`-qubit register, later gates on the left.
pub fn circuit_matrix(circuit: &Circuit, q: usize) -> DMatrix<C64> {
    let mut u = DMatrix::<C64>::identity(1 << q, 1 << q);
    for op in circuit.ops() {
        let m = match op {
            Op::Gate(g) => gate_matrix(g, q),
            Op::Controlled { control, value, body } => {
                embed(&projector(*value), *control, q) * circuit_matrix(body, q)
                    + embed(&projector(!*value), *control, q)
            }
        };
        u = m * u;
    }
    u
}

pub fn pauli_string_matrix(s: &PauliString) -> DMatrix<C64> {
    let mut out = DMatrix::<C64>::identity(1, 1);
    for &p in s.letters.iter().rev() {
        out = out.kronecker(&pauli(p));
    }
    out * c(s.coefficient, 0.0)
}

pub fn operator_matrix(h: &PauliSumOperator) -> DMatrix<C64> {
    let d = 1 << h.num_qubits();
    h.terms()
        .iter()
        .fold(DMatrix::zeros(d, d), |acc, t| acc + pauli_string_matrix(t))
}

pub fn to_vector(s: &StateVector) -> DVector<C64> {
    DVector::from_column_slice(s.amplitudes())
}

pub fn from_vector(v: &DVector<C64>) -> StateVector {
    let q = v.len().trailing_zeros() as usize;
    StateVector::from_amplitudes(q, v.iter().copied().collect()).unwrap()
}

pub fn column(m: &DMatrix<C64>, j: usize) -> StateVector {
    from_vector(&m.column(j).into_owned())
}

/// Ascending eigenvalues and matching eigenvector columns of a Hermitian matrix.
pub fn eigh(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), m.ncols(), |r, k| eig.eigenvectors[(r, order[k])]);
    (values, vectors)
}

pub fn random_state<R: Rng>(rng: &mut R, q: usize) -> StateVector {
    let amps: Vec<C64> = (0..1usize << q)
        .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let mut s = StateVector::from_amplitudes(q, amps).unwrap();
    s.normalize().unwrap();
    s
}

pub fn random_gate<R: Rng>(rng: &mut R, q: usize) -> Gate {
    let a = rng.random_range(0..q);
    let angle = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    let kinds = if q > 1 { 7 } else { 5 };
    match rng.random_range(0..kinds) {
        0 => Gate::Ry { qubit: a, angle },
        1 => Gate::Rz { qubit: a, angle },
        2 => Gate::H(a),
        3 => Gate::X(a),
        4 => Gate::SDagger(a),
        k => {
            let b = (a + rng.random_range(1..q)) % q;
            if k == 5 {
                Gate::Cz { a, b }
            } else {
                Gate::Cnot { control: a, target: b }
            }
        }
    }
}

/// Random gates with occasional controlled blocks of random gates.
pub fn random_circuit<R: Rng>(rng: &mut R, q: usize, len: usize) -> Circuit {
    let mut c = Circuit::new(q);
    for _ in 0..len {
        if q > 1 && rng.random_bool(0.2) {
            let control = rng.random_range(0..q);
            let mut body = Circuit::new(q);
            for _ in 0..rng.random_range(1..4) {
                let g = random_gate(rng, q);
                if !g.qubits().contains(&control) {
                    body.push(g).unwrap();
                }
            }
            c.push_controlled(control, rng.random_bool(0.5), body).unwrap();
        } else {
            c.push(random_gate(rng, q)).unwrap();
        }
    }
    c
}

/// Random Pauli sum with real coefficients.
pub fn random_operator<R: Rng>(rng: &mut R, q: usize, terms: usize) -> PauliSumOperator {
    let letters = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    let strings = (0..terms)
        .map(|_| {
            let l = (0..q).map(|_| letters[rng.random_range(0..4)]).collect();
            PauliString::new(rng.random_range(-2.0..2.0), l)
        })
        .collect();
    PauliSumOperator::new(q, strings).unwrap()
}

/// Random real Hamiltonian (no `Y` letters in odd number), like the lattice models.
pub fn random_real_operator<R: Rng>(rng: &mut R, q: usize, terms: usize) -> PauliSumOperator {
    let letters = [Pauli::I, Pauli::X, Pauli::Z];
    let strings = (0..terms)
        .map(|_| {
            let l = (0..q).map(|_| letters[rng.random_range(0..3)]).collect();
            PauliString::new(rng.random_range(-2.0..2.0), l)
        })
        .collect();
    PauliSumOperator::new(q, strings).unwrap()
}

/// Ring of nearest neighbours, used as an entangler pattern for small tests.
pub fn ring_ansatz(q: usize, layers: usize, entangler: Entangler) -> AnsatzSpec {
    let edges: Vec<(usize, usize)> = if q < 2 {
        vec![]
    } else {
        (0..q).map(|i| (i, (i + 1) % q)).filter(|(a, b)| a != b).collect()
    };
    AnsatzSpec::new(q, layers, entangler, &edges).unwrap()
}

pub fn random_angles<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
        .collect()
}

/// `⟨a|M|b⟩` on dense vectors.
pub fn sandwich(a: &StateVector, m: &DMatrix<C64>, b: &StateVector) -> C64 {
    (to_vector(a).adjoint() * m * to_vector(b))[(0, 0)]
}

pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}
