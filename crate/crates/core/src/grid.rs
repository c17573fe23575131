//! Periodic Fourier grid and the discrete Gross-Pitaevskii energy.
//!
//! The wavefunction lives on `N = 2^n` equispaced nodes of `[0, 2π)` and is
//! normalized so that `Δx Σ|ψ_j|² = 1`. The energy is
//!
//! ```text
//! E(ψ) = π Σ_ℓ ℓ² |ψ̂_ℓ|²  +  Δx Σ_j V_j |ψ_j|²  +  (κ Δx / 2) Σ_j |ψ_j|⁴
//! ```
//!
//! with `ψ̂_ℓ = (1/N) Σ_j ψ_j e^{-iℓx_j}` and `ℓ` ranging over
//! `{-N/2+1, …, N/2}`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{check_len, Error, Result};

pub const MIN_QUBITS: usize = 2;
pub const MAX_QUBITS: usize = 14;

/// Uniform periodic grid on `[0, 2π)` with `2^n` nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    n: usize,
    size: usize,
    dx: f64,
}

impl GridSpec {
    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.dx
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.size).map(|j| self.node(j)).collect()
    }

    /// Integer frequency of FFT bin `k`. The Nyquist bin maps to `+N/2`.
    pub fn frequency(&self, k: usize) -> i64 {
        let n = self.size as i64;
        let k = k as i64;
        if k <= n / 2 {
            k
        } else {
            k - n
        }
    }

    pub fn frequencies(&self) -> Vec<i64> {
        (0..self.size).map(|k| self.frequency(k)).collect()
    }
}

/// Builds the `2^n`-point grid.
pub fn make_grid(n: usize) -> Result<GridSpec> {
    if !(MIN_QUBITS..=MAX_QUBITS).contains(&n) {
        return Err(Error::Config(format!(
            "qubit count {n} outside [{MIN_QUBITS}, {MAX_QUBITS}]"
        )));
    }
    let size = 1usize << n;
    Ok(GridSpec {
        n,
        size,
        dx: 2.0 * PI / size as f64,
    })
}

/// `V(x) = 1 - cos(x)` sampled on the grid nodes.
pub fn sample_default_potential(grid: &GridSpec) -> Vec<f64> {
    (0..grid.len()).map(|j| 1.0 - grid.node(j).cos()).collect()
}

/// Complex grid values of a wavefunction.
#[derive(Clone, Debug, PartialEq)]
pub struct Wavefunction(pub Vec<Complex64>);

impl Wavefunction {
    pub fn new(values: Vec<Complex64>) -> Self {
        Self(values)
    }

    pub fn constant(grid: &GridSpec) -> Self {
        let c = Complex64::new(1.0 / (2.0 * PI).sqrt(), 0.0);
        Self(vec![c; grid.len()])
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn values(&self) -> &[Complex64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `Δx Σ|ψ_j|²`.
    pub fn mass(&self, dx: f64) -> f64 {
        dx * self.0.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }
}

/// Forward/inverse FFT plans for one grid size.
#[derive(Clone)]
pub struct Spectral {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Spectral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spectral").field("len", &self.forward.len()).finish()
    }
}

impl Spectral {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    /// Normalized coefficients `ψ̂_k = (1/N) Σ_j ψ_j e^{-2πijk/N}` in FFT bin order.
    pub fn coefficients(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut buf = values.to_vec();
        self.forward.process(&mut buf);
        let scale = 1.0 / values.len() as f64;
        buf.iter_mut().for_each(|z| *z *= scale);
        buf
    }

    /// Applies the Fourier multiplier `weights[k]` (bin order) to `values`.
    pub fn apply_multiplier(&self, values: &[Complex64], weights: &[f64]) -> Vec<Complex64> {
        let mut buf = values.to_vec();
        self.forward.process(&mut buf);
        let scale = 1.0 / values.len() as f64;
        for (z, w) in buf.iter_mut().zip(weights) {
            *z *= w * scale;
        }
        self.inverse.process(&mut buf);
        buf
    }
}

/// The discrete problem: grid, sampled potential and interaction strength.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    grid: GridSpec,
    potential: Vec<f64>,
    kappa: f64,
    spectral: Spectral,
    freq_sq: Vec<f64>,
}

impl ProblemSpec {
    pub fn new(grid: GridSpec, potential: Vec<f64>, kappa: f64) -> Result<Self> {
        check_len(grid.len(), potential.len())?;
        if potential.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("potential sample".into()));
        }
        if !kappa.is_finite() {
            return Err(Error::NonFinite("kappa".into()));
        }
        let spectral = Spectral::new(grid.len());
        let freq_sq = grid.frequencies().into_iter().map(|l| (l * l) as f64).collect();
        Ok(Self {
            grid,
            potential,
            kappa,
            spectral,
            freq_sq,
        })
    }

    /// `V = 1 - cos x` on the `2^n` grid.
    pub fn default_for(n: usize, kappa: f64) -> Result<Self> {
        let grid = make_grid(n)?;
        let potential = sample_default_potential(&grid);
        Self::new(grid, potential, kappa)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    /// `ℓ²` per FFT bin.
    pub fn frequency_squares(&self) -> &[f64] {
        &self.freq_sq
    }

    /// `(-½ ∂xx) ψ` through the spectral multiplier `ℓ²/2`.
    pub fn apply_kinetic(&self, values: &[Complex64]) -> Vec<Complex64> {
        let half: Vec<f64> = self.freq_sq.iter().map(|l2| 0.5 * l2).collect();
        self.spectral.apply_multiplier(values, &half)
    }
}

/// The three terms of the discrete energy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyParts {
    pub kinetic: f64,
    pub potential: f64,
    pub interaction: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.kinetic + self.potential + self.interaction
    }
}

pub fn energy_parts(psi: &Wavefunction, prob: &ProblemSpec) -> Result<EnergyParts> {
    check_len(prob.grid.len(), psi.len())?;
    let dx = prob.grid.dx();
    let coeffs = prob.spectral.coefficients(psi.values());
    let kinetic = PI
        * coeffs
            .iter()
            .zip(&prob.freq_sq)
            .map(|(c, l2)| l2 * c.norm_sqr())
            .sum::<f64>();
    let mut potential = 0.0;
    let mut quartic = 0.0;
    for (z, v) in psi.values().iter().zip(&prob.potential) {
        let p = z.norm_sqr();
        potential += v * p;
        quartic += p * p;
    }
    Ok(EnergyParts {
        kinetic,
        potential: dx * potential,
        interaction: 0.5 * prob.kappa * dx * quartic,
    })
}

/// Discrete Gross-Pitaevskii energy, evaluated as written (no normalization applied).
pub fn energy(psi: &Wavefunction, prob: &ProblemSpec) -> Result<f64> {
    energy_parts(psi, prob).map(|p| p.total())
}

/// Wirtinger gradient `g = 2 ∂E/∂ψ*`, so that `dE = Re Σ conj(g_j) δψ_j`.
pub fn energy_gradient(psi: &Wavefunction, prob: &ProblemSpec) -> Result<Vec<Complex64>> {
    check_len(prob.grid.len(), psi.len())?;
    let dx = prob.grid.dx();
    // π Σ ℓ²|ψ̂|² = Δx ⟨ψ, Kψ⟩ with K the ℓ²/2 multiplier.
    let mut grad = prob.apply_kinetic(psi.values());
    for ((g, z), v) in grad.iter_mut().zip(psi.values()).zip(&prob.potential) {
        let local = v + prob.kappa * z.norm_sqr();
        *g = 2.0 * dx * (*g + z * local);
    }
    Ok(grad)
}

/// Phase-aligned Euclidean distance `min_γ ‖ψ − e^{iγ} ψ_ref‖₂` on raw grid values.
pub fn l2_error(psi: &Wavefunction, reference: &Wavefunction) -> Result<f64> {
    check_len(reference.len(), psi.len())?;
    let overlap: Complex64 = reference
        .values()
        .iter()
        .zip(psi.values())
        .map(|(r, p)| r.conj() * p)
        .sum();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    Ok(psi
        .values()
        .iter()
        .zip(reference.values())
        .map(|(p, r)| (p - phase * r).norm_sqr())
        .sum::<f64>()
        .sqrt())
}
