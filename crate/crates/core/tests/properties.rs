use gpdd::circuit::{ansatz_state, AnsatzSpec};
use gpdd::dd::{build_layout, embed};
use gpdd::dla::{cnot_conjugate, pauli_commutator, PauliString};
use gpdd::grid::{energy, energy_gradient, ProblemSpec, Wavefunction};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

fn state(values: &[(f64, f64)]) -> Wavefunction {
    Wavefunction(values.iter().map(|&(re, im)| Complex64::new(re, im)).collect())
}

fn normalized(values: &[(f64, f64)], dx: f64) -> Wavefunction {
    let psi = state(values);
    let s = (psi.mass(dx)).sqrt();
    Wavefunction(psi.0.into_iter().map(|z| z / s).collect())
}

fn amplitudes(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << n)
        .prop_filter("nonzero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ansatz_output_has_unit_norm(n in 2usize..=8, depth in 0usize..4, seed in any::<u64>()) {
        let spec = AnsatzSpec::new(n, depth).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta: Vec<f64> = (0..spec.num_params()).map(|_| rng.random_range(0.0..TAU)).collect();
        let norm = ansatz_state(&spec, &theta).unwrap().norm();
        prop_assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn energy_is_phase_invariant(v in amplitudes(4), gamma in 0.0f64..TAU) {
        let prob = ProblemSpec::default_for(4, 1.0).unwrap();
        let psi = state(&v);
        let rotated = Wavefunction(psi.0.iter().map(|z| z * Complex64::from_polar(1.0, gamma)).collect());
        let (a, b) = (energy(&psi, &prob).unwrap(), energy(&rotated, &prob).unwrap());
        prop_assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn parseval(v in amplitudes(5)) {
        let prob = ProblemSpec::default_for(5, 0.0).unwrap();
        let psi = state(&v);
        let hat = prob.spectral().coefficients(psi.values());
        let lhs: f64 = hat.iter().map(|z| z.norm_sqr()).sum();
        let rhs = psi.values().iter().map(|z| z.norm_sqr()).sum::<f64>() / 32.0;
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn gradient_is_a_directional_derivative(v in amplitudes(3), d in amplitudes(3), kappa in 0.0f64..3.0) {
        let prob = ProblemSpec::default_for(3, kappa).unwrap();
        let psi = state(&v);
        let dir = state(&d);
        let g = energy_gradient(&psi, &prob).unwrap();
        let analytic: f64 = g.iter().zip(dir.values()).map(|(a, b)| (a.conj() * b).re).sum();
        let h = 1e-6;
        let shift = |t: f64| Wavefunction(psi.0.iter().zip(dir.values()).map(|(p, q)| p + q * t).collect());
        let fd = (energy(&shift(h), &prob).unwrap() - energy(&shift(-h), &prob).unwrap()) / (2.0 * h);
        prop_assert!((analytic - fd).abs() <= 1e-6 * fd.abs().max(1.0));
    }

    #[test]
    fn embedding_preserves_mass(v in amplitudes(5), w in amplitudes(4), k in 0usize..3) {
        let prob = ProblemSpec::default_for(5, 1.0).unwrap();
        let dx = prob.grid().dx();
        let layout = build_layout(5).unwrap();
        let psi = normalized(&v, dx);
        let phi: Vec<Complex64> = w.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
        prop_assume!(phi[1..15].iter().any(|z| z.norm() > 1e-3));
        let new = embed(&psi, &phi, &layout, k).unwrap();
        prop_assert!((new.mass(dx) - 1.0).abs() < 1e-12);
        let sub = layout.subdomains[k];
        for j in 0..32 {
            let interior = sub.contains(j) && !sub.boundary().contains(&j);
            if !interior {
                prop_assert_eq!(new.values()[j], psi.values()[j]);
            }
        }
    }

    #[test]
    fn layout_covers_grid(n in 3usize..=12) {
        let layout = build_layout(n).unwrap();
        let size = 1usize << n;
        let mut hits = vec![0usize; size];
        for sub in &layout.subdomains {
            prop_assert_eq!(sub.len, size / 2);
            for j in sub.indices() {
                hits[j] += 1;
            }
        }
        prop_assert!(hits.iter().all(|&h| h >= 1));
        prop_assert_eq!(hits.iter().sum::<usize>(), 3 * size / 2);
    }

    #[test]
    fn commutator_is_symmetric_and_cnot_an_involution(x1 in 0u64..64, z1 in 0u64..64, x2 in 0u64..64, z2 in 0u64..64,
                                                       c in 0usize..6, t in 0usize..6) {
        let p = PauliString::new(6, x1, z1).unwrap();
        let q = PauliString::new(6, x2, z2).unwrap();
        prop_assert_eq!(pauli_commutator(&p, &q).unwrap(), pauli_commutator(&q, &p).unwrap());
        prop_assume!(c != t);
        let once = cnot_conjugate(&p, c, t).unwrap();
        prop_assert_eq!(cnot_conjugate(&once, c, t).unwrap(), p);
        // Conjugation is an automorphism: commutation relations are kept.
        let q1 = cnot_conjugate(&q, c, t).unwrap();
        prop_assert_eq!(p.symplectic(&q), once.symplectic(&q1));
    }
}
