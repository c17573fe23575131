//! Full-domain variational formulation: `C(θ) = E(φ(θ)/√Δx)`.

use std::time::Instant;

use num_complex::Complex64;

use crate::circuit::{ansatz_state, cost_gradient_from_state, AnsatzSpec};
use crate::error::{Error, Result};
use crate::grid::{energy, energy_gradient, l2_error, ProblemSpec, Wavefunction};
use crate::optimizer::{minimize_with_observer, OptimizeResult, OptimizerConfig};
use crate::trace::TrainingTrace;

/// Ground state used for error columns.
#[derive(Clone, Debug)]
pub struct Reference {
    pub psi: Wavefunction,
    pub energy: f64,
}

impl Reference {
    /// `(|E − E_ref|, phase-aligned L2 distance)`.
    pub fn errors(&self, psi: &Wavefunction, e: f64) -> Result<(f64, f64)> {
        Ok(((e - self.energy).abs(), l2_error(psi, &self.psi)?))
    }
}

pub(crate) fn errors_or_nan(reference: Option<&Reference>, psi: &Wavefunction, e: f64) -> Result<(f64, f64)> {
    match reference {
        Some(r) => r.errors(psi, e),
        None => Ok((f64::NAN, f64::NAN)),
    }
}

#[derive(Clone, Debug)]
pub struct GlobalVqaProblem {
    pub prob: ProblemSpec,
    pub spec: AnsatzSpec,
    pub reference: Option<Reference>,
}

impl GlobalVqaProblem {
    pub fn new(prob: ProblemSpec, depth: usize, reference: Option<Reference>) -> Result<Self> {
        let spec = AnsatzSpec::new(prob.grid().qubits(), depth)?;
        Ok(Self { prob, spec, reference })
    }

    pub fn num_params(&self) -> usize {
        self.spec.num_params()
    }

    /// Grid wavefunction `ψ(θ) = φ(θ)/√Δx`.
    pub fn wavefunction(&self, theta: &[f64]) -> Result<Wavefunction> {
        let state = ansatz_state(&self.spec, theta)?;
        Ok(to_grid(state.into_amplitudes(), self.prob.grid().dx()))
    }
}

pub(crate) fn to_grid(amps: Vec<Complex64>, dx: f64) -> Wavefunction {
    let s = 1.0 / dx.sqrt();
    Wavefunction(amps.into_iter().map(|z| z * s).collect())
}

fn check_shape(problem: &GlobalVqaProblem) -> Result<()> {
    if problem.spec.qubits != problem.prob.grid().qubits() {
        return Err(Error::Dimension {
            expected: problem.prob.grid().qubits(),
            got: problem.spec.qubits,
        });
    }
    Ok(())
}

pub fn global_cost(problem: &GlobalVqaProblem, theta: &[f64]) -> Result<f64> {
    check_shape(problem)?;
    energy(&problem.wavefunction(theta)?, &problem.prob)
}

/// Cost and its exact parameter gradient.
pub fn global_cost_and_gradient(problem: &GlobalVqaProblem, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_shape(problem)?;
    let dx = problem.prob.grid().dx();
    let state = ansatz_state(&problem.spec, theta)?;
    let psi = to_grid(state.amplitudes().to_vec(), dx);
    let e = energy(&psi, &problem.prob)?;
    // ψ = φ/√Δx  ⇒  2∂C/∂φ* = (2∂E/∂ψ*)/√Δx.
    let s = 1.0 / dx.sqrt();
    let state_grad: Vec<Complex64> = energy_gradient(&psi, &problem.prob)?
        .into_iter()
        .map(|g| g * s)
        .collect();
    let grad = cost_gradient_from_state(&problem.spec, theta, state, &state_grad)?;
    Ok((e, grad))
}

pub fn global_cost_gradient(problem: &GlobalVqaProblem, theta: &[f64]) -> Result<Vec<f64>> {
    global_cost_and_gradient(problem, theta).map(|(_, g)| g)
}

/// All-ones starting parameters.
pub fn default_theta0(spec: &AnsatzSpec) -> Vec<f64> {
    vec![1.0; spec.num_params()]
}

/// Full-domain BFGS training with a trace row per accepted iteration.
pub fn train_full_domain(
    problem: &GlobalVqaProblem,
    theta0: Option<&[f64]>,
    config: &OptimizerConfig,
) -> Result<(OptimizeResult, TrainingTrace)> {
    check_shape(problem)?;
    let start = Instant::now();
    let ones;
    let theta0 = match theta0 {
        Some(t) => t,
        None => {
            ones = default_theta0(&problem.spec);
            &ones
        }
    };
    let reference = problem.reference.as_ref();
    let (e0, g0) = global_cost_and_gradient(problem, theta0)?;
    let psi0 = problem.wavefunction(theta0)?;
    let (ee, le) = errors_or_nan(reference, &psi0, e0)?;
    let mut trace = TrainingTrace::default();
    trace.push(-1, -1, e0, ee, le, norm(&g0), start.elapsed().as_secs_f64());

    let mut observer_err = None;
    let result = minimize_with_observer(
        |t| global_cost_and_gradient(problem, t),
        theta0,
        config,
        |rec, theta| {
            let errs = problem
                .wavefunction(theta)
                .and_then(|psi| errors_or_nan(reference, &psi, rec.objective));
            match errs {
                Ok((ee, le)) => trace.push(
                    -1,
                    -1,
                    rec.objective,
                    ee,
                    le,
                    rec.grad_norm,
                    start.elapsed().as_secs_f64(),
                ),
                Err(e) => observer_err = Some(e),
            }
        },
    )?;
    if let Some(e) = observer_err {
        return Err(e);
    }
    log::info!(
        "full-domain training: {} iterations, E = {:.12}, {:?}",
        result.iterations,
        result.objective,
        result.termination
    );
    Ok((result, trace))
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
