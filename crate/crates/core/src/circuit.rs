//! State-vector simulation of the layered Rx/Rz + CNOT-ring ansatz and its
//! reverse-mode parameter gradient.
//!
//! Qubit 0 is the least significant bit of the amplitude index, so amplitude
//! `j` corresponds to grid node `x_j`.

use num_complex::Complex64;

use crate::error::{check_len, Error, Result};

/// Shape of the hardware-efficient ansatz: `n` qubits, `depth` entangling layers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AnsatzSpec {
    pub qubits: usize,
    pub depth: usize,
}

impl AnsatzSpec {
    pub fn new(qubits: usize, depth: usize) -> Result<Self> {
        if qubits == 0 || qubits > crate::grid::MAX_QUBITS {
            return Err(Error::Config(format!("ansatz qubit count {qubits} out of range")));
        }
        Ok(Self { qubits, depth })
    }

    /// `2n(d+1)`.
    pub fn num_params(&self) -> usize {
        2 * self.qubits * (self.depth + 1)
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    /// Index of `θ_x` (or `θ_z` when `z`) for qubit `q` in rotation layer `layer`.
    pub fn param_index(&self, layer: usize, q: usize, z: bool) -> usize {
        layer * 2 * self.qubits + 2 * q + usize::from(z)
    }

    /// Gate sequence in application order.
    pub fn gates(&self) -> Vec<Gate> {
        let n = self.qubits;
        let mut gates = Vec::with_capacity(self.num_params() + n * self.depth);
        for layer in 0..=self.depth {
            for q in 0..n {
                gates.push(Gate::Rx {
                    qubit: q,
                    param: self.param_index(layer, q, false),
                });
                gates.push(Gate::Rz {
                    qubit: q,
                    param: self.param_index(layer, q, true),
                });
            }
            if layer < self.depth && n >= 2 {
                gates.extend(ring(n).map(|(control, target)| Gate::Cnot { control, target }));
            }
        }
        gates
    }
}

/// CNOT ring in circuit order: `0→1, 1→2, …, n-2→n-1, n-1→0`.
pub fn ring(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).map(move |q| (q, (q + 1) % n))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate {
    Rx { qubit: usize, param: usize },
    Rz { qubit: usize, param: usize },
    Cnot { control: usize, target: usize },
}

/// Unit-norm amplitudes of an `n`-qubit register.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩`.
    pub fn zero(qubits: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Self { qubits, amps }
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if !amps.len().is_power_of_two() || amps.len() < 2 {
            return Err(Error::Dimension {
                expected: amps.len().next_power_of_two().max(2),
                got: amps.len(),
            });
        }
        Ok(Self {
            qubits: amps.len().trailing_zeros() as usize,
            amps,
        })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q < self.qubits {
            Ok(())
        } else {
            Err(Error::Index(format!("qubit {q} on a {}-qubit register", self.qubits)))
        }
    }

    /// `exp(-iθX/2)` on `qubit`.
    pub fn apply_rx(&mut self, qubit: usize, angle: f64) -> Result<()> {
        self.check_qubit(qubit)?;
        rx_kernel(&mut self.amps, qubit, angle);
        Ok(())
    }

    /// `exp(-iθZ/2)` on `qubit`.
    pub fn apply_rz(&mut self, qubit: usize, angle: f64) -> Result<()> {
        self.check_qubit(qubit)?;
        rz_kernel(&mut self.amps, qubit, angle);
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::Index(format!("CNOT control and target both {control}")));
        }
        cnot_kernel(&mut self.amps, control, target);
        Ok(())
    }
}

fn rx_kernel(amps: &mut [Complex64], qubit: usize, angle: f64) {
    let (s, c) = (0.5 * angle).sin_cos();
    let mis = Complex64::new(0.0, -s);
    let bit = 1usize << qubit;
    for base in (0..amps.len()).filter(|i| i & bit == 0) {
        let a = amps[base];
        let b = amps[base | bit];
        amps[base] = a * c + b * mis;
        amps[base | bit] = a * mis + b * c;
    }
}

fn rz_kernel(amps: &mut [Complex64], qubit: usize, angle: f64) {
    let lo = Complex64::from_polar(1.0, -0.5 * angle);
    let hi = lo.conj();
    let bit = 1usize << qubit;
    for (i, z) in amps.iter_mut().enumerate() {
        *z *= if i & bit == 0 { lo } else { hi };
    }
}

fn cnot_kernel(amps: &mut [Complex64], control: usize, target: usize) {
    let (cb, tb) = (1usize << control, 1usize << target);
    for i in 0..amps.len() {
        if i & cb != 0 && i & tb == 0 {
            amps.swap(i, i | tb);
        }
    }
}

/// `0.5 · Im Σ conj(λ_j) (Gψ)_j`, i.e. `Re⟨λ, (-iG/2) ψ⟩`, for `G = X` on `qubit`.
fn x_generator_overlap(lambda: &[Complex64], psi: &[Complex64], qubit: usize) -> f64 {
    let bit = 1usize << qubit;
    let mut acc = 0.0;
    for (j, l) in lambda.iter().enumerate() {
        acc += (l.conj() * psi[j ^ bit]).im;
    }
    0.5 * acc
}

fn z_generator_overlap(lambda: &[Complex64], psi: &[Complex64], qubit: usize) -> f64 {
    let bit = 1usize << qubit;
    let mut acc = 0.0;
    for (j, (l, p)) in lambda.iter().zip(psi).enumerate() {
        let v = (l.conj() * p).im;
        acc += if j & bit == 0 { v } else { -v };
    }
    0.5 * acc
}

fn check_params(spec: &AnsatzSpec, theta: &[f64]) -> Result<()> {
    check_len(spec.num_params(), theta.len())
}

/// Prepares `U(θ)|0…0⟩`.
pub fn ansatz_state(spec: &AnsatzSpec, theta: &[f64]) -> Result<StateVector> {
    check_params(spec, theta)?;
    let mut state = StateVector::zero(spec.qubits);
    for gate in spec.gates() {
        match gate {
            Gate::Rx { qubit, param } => rx_kernel(&mut state.amps, qubit, theta[param]),
            Gate::Rz { qubit, param } => rz_kernel(&mut state.amps, qubit, theta[param]),
            Gate::Cnot { control, target } => cnot_kernel(&mut state.amps, control, target),
        }
    }
    Ok(state)
}

/// Pulls a state-space gradient back to the circuit parameters.
///
/// `state_gradient` must be `2 ∂C/∂φ*` at `φ = ansatz_state(theta)`. The
/// return value is `∂C/∂θ`. One reverse sweep uncomputes the state and
/// propagates the adjoint together, so the cost is a small multiple of a
/// forward evaluation.
pub fn cost_gradient_through_circuit(
    spec: &AnsatzSpec,
    theta: &[f64],
    state_gradient: &[Complex64],
) -> Result<Vec<f64>> {
    let state = ansatz_state(spec, theta)?;
    cost_gradient_from_state(spec, theta, state, state_gradient)
}

/// Same as [`cost_gradient_through_circuit`] but reuses an already prepared
/// output state.
pub fn cost_gradient_from_state(
    spec: &AnsatzSpec,
    theta: &[f64],
    state: StateVector,
    state_gradient: &[Complex64],
) -> Result<Vec<f64>> {
    check_params(spec, theta)?;
    check_len(spec.dim(), state_gradient.len())?;
    check_len(spec.dim(), state.amps.len())?;
    let mut psi = state.amps;
    let mut lambda = state_gradient.to_vec();
    let mut grad = vec![0.0; theta.len()];
    for gate in spec.gates().into_iter().rev() {
        match gate {
            Gate::Rx { qubit, param } => {
                grad[param] = x_generator_overlap(&lambda, &psi, qubit);
                rx_kernel(&mut psi, qubit, -theta[param]);
                rx_kernel(&mut lambda, qubit, -theta[param]);
            }
            Gate::Rz { qubit, param } => {
                grad[param] = z_generator_overlap(&lambda, &psi, qubit);
                rz_kernel(&mut psi, qubit, -theta[param]);
                rz_kernel(&mut lambda, qubit, -theta[param]);
            }
            Gate::Cnot { control, target } => {
                cnot_kernel(&mut psi, control, target);
                cnot_kernel(&mut lambda, control, target);
            }
        }
    }
    Ok(grad)
}
