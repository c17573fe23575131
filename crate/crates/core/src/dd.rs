//! Overlapping three-subdomain decomposition with a norm-preserving embedding.
//!
//! Each subdomain is a circular run of `2^{n-1}` consecutive grid indices.
//! A local state on subdomain `k` is spliced into the global wavefunction by
//! [`embed`]: values outside the run and on its two end points are kept, the
//! interior is replaced by `α φ` where `α` restores the interior mass, so the
//! global normalization is unchanged.
//!
//! Subdomain indices `k` are 0-based in this API; trace rows label them 1..=3.

use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::{ansatz_state, cost_gradient_from_state, AnsatzSpec};
use crate::error::{check_len, Error, Result};
use crate::grid::{energy, energy_gradient, ProblemSpec, Wavefunction};
use crate::optimizer::{minimize_with_observer, OptimizerConfig, Termination};
use crate::trace::TrainingTrace;
use crate::vqa::{errors_or_nan, norm, Reference};

pub const NUM_SUBDOMAINS: usize = 3;

/// One circular index run `start, start+1, …, start+len-1 (mod N)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Subdomain {
    pub start: usize,
    pub len: usize,
    grid_len: usize,
}

impl Subdomain {
    /// Global grid index of local position `p`.
    pub fn global(&self, p: usize) -> usize {
        (self.start + p) % self.grid_len
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).map(|p| self.global(p))
    }

    /// Local positions of the interior (run minus its first and last element).
    pub fn interior(&self) -> std::ops::Range<usize> {
        1..self.len - 1
    }

    /// Global indices of the first and last element of the run.
    pub fn boundary(&self) -> [usize; 2] {
        [self.global(0), self.global(self.len - 1)]
    }

    pub fn contains(&self, j: usize) -> bool {
        (j + self.grid_len - self.start) % self.grid_len < self.len
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubdomainLayout {
    pub qubits: usize,
    pub grid_len: usize,
    pub subdomains: [Subdomain; NUM_SUBDOMAINS],
    /// `[|I₁∩I₂|, |I₂∩I₃|, |I₃∩I₁|]`.
    pub overlaps: [usize; NUM_SUBDOMAINS],
}

/// Overlap sizes `n₁ = n₂ = (2^{n−1} + (−1)^n)/3`, `n₃ = n₁ + (−1)^{n−1}`.
pub fn overlap_sizes(n: usize) -> [usize; 3] {
    let half = 1i64 << (n - 1);
    let sign = if n.is_multiple_of(2) { 1 } else { -1 };
    let n1 = (half + sign) / 3;
    [n1 as usize, n1 as usize, (n1 - sign) as usize]
}

pub fn build_layout(n: usize) -> Result<SubdomainLayout> {
    if !(3..=crate::grid::MAX_QUBITS).contains(&n) {
        return Err(Error::Config(format!(
            "domain decomposition needs 3 <= n <= {} (got {n})",
            crate::grid::MAX_QUBITS
        )));
    }
    let grid_len = 1usize << n;
    let len = grid_len / 2;
    let overlaps = overlap_sizes(n);
    let starts = [0, len - overlaps[0], grid_len - overlaps[0] - overlaps[1]];
    let subdomains = starts.map(|start| Subdomain { start, len, grid_len });
    Ok(SubdomainLayout {
        qubits: n,
        grid_len,
        subdomains,
        overlaps,
    })
}

impl SubdomainLayout {
    pub fn subdomain(&self, k: usize) -> Result<&Subdomain> {
        self.subdomains
            .get(k)
            .ok_or_else(|| Error::Index(format!("subdomain {k} (expected 0..{NUM_SUBDOMAINS})")))
    }

    pub fn local_len(&self) -> usize {
        self.grid_len / 2
    }
}

fn interior_mass(values: impl Iterator<Item = Complex64>) -> f64 {
    values.map(|z| z.norm_sqr()).sum()
}

/// Splices `phi` into `psi_old` on subdomain `k` (see the module docs).
pub fn embed(psi_old: &Wavefunction, phi: &[Complex64], layout: &SubdomainLayout, k: usize) -> Result<Wavefunction> {
    embed_with_scale(psi_old, phi, layout, k).map(|(psi, _, _)| psi)
}

/// Returns the embedded state, `α`, and the interior mass of `phi`.
fn embed_with_scale(
    psi_old: &Wavefunction,
    phi: &[Complex64],
    layout: &SubdomainLayout,
    k: usize,
) -> Result<(Wavefunction, f64, f64)> {
    check_len(layout.grid_len, psi_old.len())?;
    let sub = layout.subdomain(k)?;
    check_len(sub.len, phi.len())?;
    let old = psi_old.values();
    let old_mass = interior_mass(sub.interior().map(|p| old[sub.global(p)]));
    let phi_mass = interior_mass(sub.interior().map(|p| phi[p]));
    if !(phi_mass > 0.0) {
        return Err(Error::Degenerate(format!(
            "local state has no interior mass on subdomain {k}"
        )));
    }
    if !(old_mass > 0.0) {
        return Err(Error::Degenerate(format!(
            "current state has no interior mass on subdomain {k}"
        )));
    }
    let alpha = (old_mass / phi_mass).sqrt();
    let mut new = old.to_vec();
    for p in sub.interior() {
        new[sub.global(p)] = phi[p] * alpha;
    }
    Ok((Wavefunction(new), alpha, phi_mass))
}

/// `E(embed(ψ, φ))` together with `2∂E/∂φ*` (zero on the run's end points).
pub fn embedded_energy_and_gradient(
    psi: &Wavefunction,
    phi: &[Complex64],
    layout: &SubdomainLayout,
    k: usize,
    prob: &ProblemSpec,
) -> Result<(f64, Vec<Complex64>, Wavefunction)> {
    let (new, alpha, phi_mass) = embed_with_scale(psi, phi, layout, k)?;
    let e = energy(&new, prob)?;
    let g = energy_gradient(&new, prob)?;
    let sub = layout.subdomain(k)?;
    let r: f64 = sub.interior().map(|p| (g[sub.global(p)].conj() * phi[p]).re).sum();
    let shrink = alpha * r / phi_mass;
    let mut local = vec![Complex64::new(0.0, 0.0); sub.len];
    for p in sub.interior() {
        local[p] = g[sub.global(p)] * alpha - phi[p] * shrink;
    }
    Ok((e, local, new))
}

/// Local cost: energy of the global state after embedding the subdomain ansatz.
pub fn local_cost(
    theta: &[f64],
    psi: &Wavefunction,
    layout: &SubdomainLayout,
    k: usize,
    prob: &ProblemSpec,
    local_spec: &AnsatzSpec,
) -> Result<f64> {
    let phi = ansatz_state(local_spec, theta)?;
    energy(&embed(psi, phi.amplitudes(), layout, k)?, prob)
}

pub fn local_cost_and_gradient(
    theta: &[f64],
    psi: &Wavefunction,
    layout: &SubdomainLayout,
    k: usize,
    prob: &ProblemSpec,
    local_spec: &AnsatzSpec,
) -> Result<(f64, Vec<f64>)> {
    let phi = ansatz_state(local_spec, theta)?;
    let (e, state_grad, _) = embedded_energy_and_gradient(psi, phi.amplitudes(), layout, k, prob)?;
    let grad = cost_gradient_from_state(local_spec, theta, phi, &state_grad)?;
    Ok((e, grad))
}

/// Per-subdomain iteration budget. Serialized as an integer or `"converge"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LocalBudget {
    Iterations(usize),
    Converge,
}

impl Serialize for LocalBudget {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            LocalBudget::Iterations(n) => s.serialize_u64(*n as u64),
            LocalBudget::Converge => s.serialize_str("converge"),
        }
    }
}

impl<'de> Deserialize<'de> for LocalBudget {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(usize),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(n) => Ok(LocalBudget::Iterations(n)),
            Raw::Word(w) if w == "converge" => Ok(LocalBudget::Converge),
            Raw::Word(w) => Err(serde::de::Error::custom(format!(
                "local budget must be an integer or \"converge\", got {w:?}"
            ))),
        }
    }
}

/// Safety cap for the "converge" budget.
pub const CONVERGE_MAX_ITERS: usize = 5000;

impl LocalBudget {
    pub fn optimizer_config(&self) -> OptimizerConfig {
        match *self {
            LocalBudget::Iterations(n) => OptimizerConfig::with_max_iters(n),
            LocalBudget::Converge => OptimizerConfig::with_max_iters(CONVERGE_MAX_ITERS),
        }
    }

    fn is_zero(&self) -> bool {
        matches!(self, LocalBudget::Iterations(0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Schedule {
    pub sweeps: usize,
    pub budget: LocalBudget,
}

#[derive(Clone, Debug)]
pub struct DdProblem {
    pub prob: ProblemSpec,
    pub layout: SubdomainLayout,
    pub local_spec: AnsatzSpec,
    pub reference: Option<Reference>,
}

impl DdProblem {
    pub fn new(prob: ProblemSpec, local_depth: usize, reference: Option<Reference>) -> Result<Self> {
        let n = prob.grid().qubits();
        let layout = build_layout(n)?;
        let local_spec = AnsatzSpec::new(n - 1, local_depth)?;
        Ok(Self {
            prob,
            layout,
            local_spec,
            reference,
        })
    }
}

/// Outcome of a sweep run.
#[derive(Clone, Debug)]
pub struct DdOutcome {
    pub psi: Wavefunction,
    pub trace: TrainingTrace,
    /// Last local parameters per subdomain (VQA only).
    pub thetas: Vec<Vec<f64>>,
    pub total_iterations: usize,
    pub terminations: Vec<Termination>,
}

/// What a subdomain update optimizes over.
trait LocalModel {
    fn initial(&self, psi: &Wavefunction, sub: &Subdomain, previous: Option<&[f64]>) -> Vec<f64>;
    fn local_state(&self, params: &[f64]) -> Result<Vec<Complex64>>;
    fn cost_and_gradient(&self, params: &[f64], psi: &Wavefunction, k: usize) -> Result<(f64, Vec<f64>)>;
}

struct CircuitModel<'a> {
    dd: &'a DdProblem,
    warm_start: bool,
}

impl LocalModel for CircuitModel<'_> {
    fn initial(&self, _: &Wavefunction, _: &Subdomain, previous: Option<&[f64]>) -> Vec<f64> {
        match previous {
            Some(t) if self.warm_start => t.to_vec(),
            _ => vec![1.0; self.dd.local_spec.num_params()],
        }
    }

    fn local_state(&self, params: &[f64]) -> Result<Vec<Complex64>> {
        Ok(ansatz_state(&self.dd.local_spec, params)?.into_amplitudes())
    }

    fn cost_and_gradient(&self, params: &[f64], psi: &Wavefunction, k: usize) -> Result<(f64, Vec<f64>)> {
        let dd = self.dd;
        local_cost_and_gradient(params, psi, &dd.layout, k, &dd.prob, &dd.local_spec)
    }
}

/// Raw run values `v` (interleaved re/im), Euclidean-normalized before embedding.
struct PhysicalModel<'a> {
    dd: &'a DdProblem,
}

fn unpack(params: &[f64]) -> Vec<Complex64> {
    params.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect()
}

impl LocalModel for PhysicalModel<'_> {
    fn initial(&self, psi: &Wavefunction, sub: &Subdomain, _: Option<&[f64]>) -> Vec<f64> {
        sub.indices()
            .flat_map(|j| {
                let z = psi.values()[j];
                [z.re, z.im]
            })
            .collect()
    }

    fn local_state(&self, params: &[f64]) -> Result<Vec<Complex64>> {
        let v = unpack(params);
        let nv = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(nv > 0.0) {
            return Err(Error::Degenerate("zero local vector".into()));
        }
        Ok(v.into_iter().map(|z| z / nv).collect())
    }

    fn cost_and_gradient(&self, params: &[f64], psi: &Wavefunction, k: usize) -> Result<(f64, Vec<f64>)> {
        let dd = self.dd;
        let v = unpack(params);
        let nv = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let phi = self.local_state(params)?;
        let (e, h, _) = embedded_energy_and_gradient(psi, &phi, &dd.layout, k, &dd.prob)?;
        // φ = v/‖v‖  ⇒  w = h/‖v‖ − Re⟨h, v⟩ v/‖v‖³.
        let hv: f64 = h.iter().zip(&v).map(|(a, b)| (a.conj() * b).re).sum();
        let c = hv / (nv * nv * nv);
        let grad = h
            .iter()
            .zip(&v)
            .flat_map(|(hp, vp)| {
                let w = hp / nv - vp * c;
                [w.re, w.im]
            })
            .collect();
        Ok((e, grad))
    }
}

/// Observer of every intermediate global state produced by a sweep run.
pub type StateObserver<'a> = dyn FnMut(&Wavefunction) + 'a;

#[allow(clippy::needless_range_loop)]
fn run_sweeps(
    dd: &DdProblem,
    model: &dyn LocalModel,
    schedule: Schedule,
    observer: &mut StateObserver<'_>,
) -> Result<DdOutcome> {
    let start = Instant::now();
    let reference = dd.reference.as_ref();
    let mut psi = Wavefunction::constant(dd.prob.grid());
    let mut trace = TrainingTrace::default();
    let e0 = energy(&psi, &dd.prob)?;
    let (ee, le) = errors_or_nan(reference, &psi, e0)?;
    trace.push(-1, -1, e0, ee, le, f64::NAN, 0.0);
    observer(&psi);

    let mut thetas: Vec<Option<Vec<f64>>> = vec![None; NUM_SUBDOMAINS];
    let mut total_iterations = 0;
    let mut terminations = Vec::new();
    let config = schedule.budget.optimizer_config();

    for sweep in 0..schedule.sweeps {
        for k in 0..NUM_SUBDOMAINS {
            if schedule.budget.is_zero() {
                continue;
            }
            let sub = dd.layout.subdomain(k)?;
            let x0 = model.initial(&psi, sub, thetas[k].as_deref());
            let current = psi.clone();
            let mut observer_err = None;
            let result = minimize_with_observer(
                |p| model.cost_and_gradient(p, &current, k),
                &x0,
                &config,
                |rec, params| {
                    let embedded = model
                        .local_state(params)
                        .and_then(|phi| embed(&current, &phi, &dd.layout, k));
                    match embedded.and_then(|s| errors_or_nan(reference, &s, rec.objective).map(|e| (s, e))) {
                        Ok((state, (ee, le))) => {
                            observer(&state);
                            trace.push(
                                sweep as i64,
                                k as i64 + 1,
                                rec.objective,
                                ee,
                                le,
                                rec.grad_norm,
                                start.elapsed().as_secs_f64(),
                            );
                        }
                        Err(e) => observer_err = Some(e),
                    }
                },
            )?;
            if let Some(e) = observer_err {
                return Err(e);
            }
            total_iterations += result.iterations;
            terminations.push(result.termination);
            let phi = model.local_state(&result.theta)?;
            psi = embed(&current, &phi, &dd.layout, k)?;
            observer(&psi);
            log::debug!(
                "sweep {sweep} subdomain {}: {} iterations, E = {:.12}, {:?}",
                k + 1,
                result.iterations,
                result.objective,
                result.termination
            );
            thetas[k] = Some(result.theta);
        }
        let e = energy(&psi, &dd.prob)?;
        trace.sweep_end_energies.push(e);
        log::info!("sweep {sweep}: E = {e:.12}");
    }

    Ok(DdOutcome {
        psi,
        trace,
        thetas: thetas.into_iter().map(Option::unwrap_or_default).collect(),
        total_iterations,
        terminations,
    })
}

/// Sequential subdomain sweeps with a circuit ansatz on each subdomain.
pub fn run_dd(dd: &DdProblem, schedule: Schedule, warm_start: bool) -> Result<DdOutcome> {
    run_dd_observed(dd, schedule, warm_start, &mut |_| {})
}

pub fn run_dd_observed(
    dd: &DdProblem,
    schedule: Schedule,
    warm_start: bool,
    observer: &mut StateObserver<'_>,
) -> Result<DdOutcome> {
    run_sweeps(dd, &CircuitModel { dd, warm_start }, schedule, observer)
}

/// Same sweep protocol, optimizing the raw grid values of each run.
pub fn run_classical_dd(dd: &DdProblem, schedule: Schedule) -> Result<DdOutcome> {
    run_classical_dd_observed(dd, schedule, &mut |_| {})
}

pub fn run_classical_dd_observed(
    dd: &DdProblem,
    schedule: Schedule,
    observer: &mut StateObserver<'_>,
) -> Result<DdOutcome> {
    run_sweeps(dd, &PhysicalModel { dd }, schedule, observer)
}

/// Gradient norm helper for callers that post-process traces.
pub fn gradient_norm(g: &[f64]) -> f64 {
    norm(g)
}
