//! Classical reference ground state.
//!
//! Solves the real augmented system
//!
//! ```text
//! F(ψ, λ) = ( Hψ + κ ψ³ − λψ ,  Δx Σψ² − 1 ) = 0
//! ```
//!
//! by Newton's method with dense linear solves, where `H` is the spectral
//! kinetic operator plus `diag(V)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{energy, ProblemSpec, Wavefunction};
use crate::vqa::Reference;

pub const MAX_DENSE_QUBITS: usize = 10;
const MAX_HALVINGS: usize = 30;

#[derive(Clone, Debug)]
pub struct NewtonResult {
    /// Real, with the sign gauge `Σψ_j > 0`.
    pub psi: Vec<f64>,
    pub lambda: f64,
    pub energy: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    /// Max-norm residual before each Newton step, and after the last one.
    pub residual_history: Vec<f64>,
}

impl NewtonResult {
    pub fn wavefunction(&self) -> Wavefunction {
        Wavefunction::from_real(&self.psi)
    }

    pub fn reference(&self) -> Reference {
        Reference {
            psi: self.wavefunction(),
            energy: self.energy,
        }
    }

    pub fn summary(&self) -> NewtonSummary {
        NewtonSummary {
            energy: self.energy,
            lambda: self.lambda,
            residual_norm: self.residual_norm,
            iterations: self.iterations,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NewtonSummary {
    pub energy: f64,
    pub lambda: f64,
    pub residual_norm: f64,
    pub iterations: usize,
}

/// Dense matrix of `H = K + diag(V)` in the grid basis.
pub fn linear_hamiltonian_matrix(prob: &ProblemSpec) -> DMatrix<f64> {
    let n = prob.grid().len();
    let mut h = DMatrix::zeros(n, n);
    let mut e = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n {
        e[j] = Complex64::new(1.0, 0.0);
        let col = prob.apply_kinetic(&e);
        for i in 0..n {
            h[(i, j)] = col[i].re;
        }
        e[j] = Complex64::new(0.0, 0.0);
    }
    // Exact symmetry; the FFT leaves O(ε) asymmetry.
    let h = (&h + h.transpose()) * 0.5;
    let mut h = h;
    for (j, v) in prob.potential().iter().enumerate() {
        h[(j, j)] += v;
    }
    h
}

fn apply_h(prob: &ProblemSpec, psi: &[f64]) -> Vec<f64> {
    let c: Vec<Complex64> = psi.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    prob.apply_kinetic(&c)
        .iter()
        .zip(psi)
        .zip(prob.potential())
        .map(|((k, p), v)| k.re + v * p)
        .collect()
}

fn residual(prob: &ProblemSpec, psi: &[f64], lambda: f64) -> Vec<f64> {
    let dx = prob.grid().dx();
    let kappa = prob.kappa();
    let hpsi = apply_h(prob, psi);
    let mut f: Vec<f64> = hpsi
        .iter()
        .zip(psi)
        .map(|(h, p)| h + kappa * p * p * p - lambda * p)
        .collect();
    f.push(dx * psi.iter().map(|p| p * p).sum::<f64>() - 1.0);
    f
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// `λ = Δx ψᵀHψ + κΔx Σψ⁴`.
fn rayleigh_lambda(prob: &ProblemSpec, psi: &[f64]) -> f64 {
    let dx = prob.grid().dx();
    let hpsi = apply_h(prob, psi);
    let quad: f64 = hpsi.iter().zip(psi).map(|(h, p)| h * p).sum();
    let quartic: f64 = psi.iter().map(|p| p.powi(4)).sum();
    dx * quad + prob.kappa() * dx * quartic
}

pub fn newton_ground_state(prob: &ProblemSpec, tol: f64, max_iters: usize) -> Result<NewtonResult> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("Newton tolerance must be positive (got {tol})")));
    }
    let n = prob.grid().len();
    let dx = prob.grid().dx();
    let kappa = prob.kappa();
    let h = linear_hamiltonian_matrix(prob);

    let mut psi = vec![1.0 / (2.0 * std::f64::consts::PI).sqrt(); n];
    let mut lambda = rayleigh_lambda(prob, &psi);
    let mut f = residual(prob, &psi, lambda);
    let mut res = max_norm(&f);
    let mut history = vec![res];
    let mut iterations = 0;

    while res >= tol {
        if iterations >= max_iters {
            return Err(Error::NonConvergence {
                iterations,
                residual: res,
            });
        }
        iterations += 1;
        let mut jac = DMatrix::zeros(n + 1, n + 1);
        jac.view_mut((0, 0), (n, n)).copy_from(&h);
        for j in 0..n {
            jac[(j, j)] += 3.0 * kappa * psi[j] * psi[j] - lambda;
            jac[(j, n)] = -psi[j];
            jac[(n, j)] = 2.0 * dx * psi[j];
        }
        let rhs = -DVector::from_vec(f.clone());
        let delta = jac.lu().solve(&rhs).ok_or(Error::SingularJacobian(iterations))?;

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = psi.iter().zip(delta.iter()).map(|(p, d)| p + t * d).collect();
            let trial_lambda = lambda + t * delta[n];
            let trial_f = residual(prob, &trial, trial_lambda);
            let trial_res = max_norm(&trial_f);
            if trial_res < res || t < 0.5f64.powi(MAX_HALVINGS as i32 - 1) {
                accepted = Some((trial, trial_lambda, trial_f, trial_res));
                break;
            }
            t *= 0.5;
        }
        let (p, l, fv, r) = accepted.expect("halving loop always accepts its last trial");
        if r >= res {
            return Err(Error::NonConvergence {
                iterations,
                residual: res,
            });
        }
        psi = p;
        lambda = l;
        f = fv;
        res = r;
        history.push(res);
        log::debug!("Newton iteration {iterations}: residual {res:.3e} (step {t})");
    }

    if psi.iter().sum::<f64>() < 0.0 {
        psi.iter_mut().for_each(|p| *p = -*p);
    }
    let e = energy(&Wavefunction::from_real(&psi), prob)?;
    Ok(NewtonResult {
        psi,
        lambda,
        energy: e,
        residual_norm: res,
        iterations,
        residual_history: history,
    })
}

/// Lowest eigenpair of the linear (κ = 0) problem by a dense symmetric eigensolve.
pub fn dense_linear_ground_state(prob: &ProblemSpec) -> Result<(f64, Vec<f64>)> {
    if prob.kappa() != 0.0 {
        return Err(Error::Config("dense eigensolve requires kappa = 0".into()));
    }
    if prob.grid().qubits() > MAX_DENSE_QUBITS {
        return Err(Error::Config(format!(
            "dense eigensolve limited to n <= {MAX_DENSE_QUBITS}"
        )));
    }
    let eig = SymmetricEigen::new(linear_hamiltonian_matrix(prob));
    let (idx, &value) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty spectrum");
    let col = eig.eigenvectors.column(idx);
    let dx = prob.grid().dx();
    let scale = 1.0 / (dx * col.norm_squared()).sqrt();
    let sign = if col.sum() < 0.0 { -1.0 } else { 1.0 };
    Ok((value, col.iter().map(|v| v * scale * sign).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use std::f64::consts::PI;

    #[test]
    fn free_constant_state() {
        let grid = make_grid(5).unwrap();
        let prob = ProblemSpec::new(grid, vec![0.0; 32], 0.0).unwrap();
        let r = newton_ground_state(&prob, 1e-12, 50).unwrap();
        assert!(r.energy.abs() < 1e-14);
        assert!(r.lambda.abs() < 1e-14);
        let c = 1.0 / (2.0 * PI).sqrt();
        assert!(r.psi.iter().all(|p| (p - c).abs() < 1e-14));
    }

    #[test]
    fn linear_case_matches_dense_eigensolver() {
        for n in [4, 6, 7] {
            let prob = ProblemSpec::default_for(n, 0.0).unwrap();
            let r = newton_ground_state(&prob, 1e-12, 50).unwrap();
            let (e, v) = dense_linear_ground_state(&prob).unwrap();
            assert!((r.energy - e).abs() < 1e-10, "n={n}: {} vs {e}", r.energy);
            let diff = r.psi.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(diff < 1e-8);
        }
    }

    #[test]
    fn interacting_case_converges_below_constant_bound() {
        let prob = ProblemSpec::default_for(6, 1.0).unwrap();
        let r = newton_ground_state(&prob, 1e-12, 50).unwrap();
        assert!(r.residual_norm < 1e-12);
        assert!(r.energy <= 1.0 + 1.0 / (4.0 * PI));
        let dx = prob.grid().dx();
        assert!((dx * r.psi.iter().map(|p| p * p).sum::<f64>() - 1.0).abs() < 1e-13);
        assert!(r.psi.iter().all(|&p| p > -1e-10));
        let quartic: f64 = r.psi.iter().map(|p| p.powi(4)).sum();
        assert!((r.lambda - (r.energy + 0.5 * dx * quartic)).abs() < 1e-10);
    }

    #[test]
    fn quadratic_convergence_tail() {
        let prob = ProblemSpec::default_for(6, 1.0).unwrap();
        let r = newton_ground_state(&prob, 1e-13, 50).unwrap();
        for w in r.residual_history.windows(2) {
            if w[0] < 1e-3 && w[1] > 1e-13 {
                assert!(w[1] <= w[0] * w[0] * 10.0, "{:?}", r.residual_history);
            }
        }
    }

    #[test]
    fn dense_matrix_properties() {
        let grid = make_grid(5).unwrap();
        let prob = ProblemSpec::new(grid, vec![0.0; 32], 0.0).unwrap();
        let h = linear_hamiltonian_matrix(&prob);
        assert!((&h - h.transpose()).amax() < 1e-12);
        let (e, v) = dense_linear_ground_state(&prob).unwrap();
        assert!(e.abs() < 1e-12);
        let c = 1.0 / (2.0 * PI).sqrt();
        assert!(v.iter().all(|p| (p - c).abs() < 1e-10));
    }

    #[test]
    fn dense_ground_energy_converges_spectrally() {
        let e5 = dense_linear_ground_state(&ProblemSpec::default_for(5, 0.0).unwrap())
            .unwrap()
            .0;
        let e8 = dense_linear_ground_state(&ProblemSpec::default_for(8, 0.0).unwrap())
            .unwrap()
            .0;
        assert!((e5 - e8).abs() < 1e-8);
    }

    #[test]
    fn dense_rejects_interaction() {
        assert!(dense_linear_ground_state(&ProblemSpec::default_for(4, 1.0).unwrap()).is_err());
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let prob = ProblemSpec::default_for(6, 1.0).unwrap();
        assert!(matches!(
            newton_ground_state(&prob, 1e-12, 1),
            Err(Error::NonConvergence { .. })
        ));
    }
}
