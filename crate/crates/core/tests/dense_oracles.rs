//! Dense-matrix cross-checks of the state-vector simulator and the reference solver.

use gpdd::circuit::{ansatz_state, AnsatzSpec, Gate};
use gpdd::grid::ProblemSpec;
use gpdd::newton::{dense_linear_ground_state, linear_hamiltonian_matrix, newton_ground_state};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type C = Complex64;

fn one_qubit(n: usize, q: usize, g: [[C; 2]; 2]) -> DMatrix<C> {
    let dim = 1 << n;
    DMatrix::from_fn(dim, dim, |i, j| {
        if (i ^ j) & !(1 << q) != 0 {
            C::new(0.0, 0.0)
        } else {
            g[(i >> q) & 1][(j >> q) & 1]
        }
    })
}

fn cnot(n: usize, c: usize, t: usize) -> DMatrix<C> {
    let dim = 1 << n;
    DMatrix::from_fn(dim, dim, |i, j| {
        let image = if (j >> c) & 1 == 1 { j ^ (1 << t) } else { j };
        if i == image {
            C::new(1.0, 0.0)
        } else {
            C::new(0.0, 0.0)
        }
    })
}

fn dense_unitary(spec: &AnsatzSpec, theta: &[f64]) -> DMatrix<C> {
    let n = spec.qubits;
    let mut u = DMatrix::<C>::identity(1 << n, 1 << n);
    for gate in spec.gates() {
        let m = match gate {
            Gate::Rx { qubit, param } => {
                let (c, s) = ((theta[param] / 2.0).cos(), (theta[param] / 2.0).sin());
                one_qubit(
                    n,
                    qubit,
                    [[C::new(c, 0.0), C::new(0.0, -s)], [C::new(0.0, -s), C::new(c, 0.0)]],
                )
            }
            Gate::Rz { qubit, param } => {
                let a = C::from_polar(1.0, -theta[param] / 2.0);
                one_qubit(n, qubit, [[a, C::new(0.0, 0.0)], [C::new(0.0, 0.0), a.conj()]])
            }
            Gate::Cnot { control, target } => cnot(n, control, target),
        };
        u = m * u;
    }
    u
}

#[test]
fn simulator_matches_dense_unitary() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (n, depth) in [(2, 1), (3, 2), (4, 3)] {
        let spec = AnsatzSpec::new(n, depth).unwrap();
        let theta: Vec<f64> = (0..spec.num_params())
            .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
            .collect();
        let u = dense_unitary(&spec, &theta);
        let unitary_err = (u.adjoint() * &u - DMatrix::<C>::identity(1 << n, 1 << n)).camax();
        assert!(unitary_err < 1e-12);
        let state = ansatz_state(&spec, &theta).unwrap();
        let diff = state
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(i, a)| (a - u[(i, 0)]).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12, "n={n}: {diff}");
    }
}

#[test]
fn gate_counts() {
    for (n, d) in [(2, 3), (5, 3), (7, 10)] {
        let gates = AnsatzSpec::new(n, d).unwrap().gates();
        let rot = gates.iter().filter(|g| !matches!(g, Gate::Cnot { .. })).count();
        let cx = gates.len() - rot;
        assert_eq!(rot, 2 * n * (d + 1));
        assert_eq!(cx, n * d);
    }
}

#[test]
fn newton_agrees_with_dense_eigensolver() {
    for n in 3..=8 {
        let prob = ProblemSpec::default_for(n, 0.0).unwrap();
        let r = newton_ground_state(&prob, 1e-12, 100).unwrap();
        let (e, _) = dense_linear_ground_state(&prob).unwrap();
        assert!((r.energy - e).abs() < 1e-10, "n={n}");
        let h = linear_hamiltonian_matrix(&prob);
        assert!((&h - h.transpose()).amax() < 1e-12);
    }
}
