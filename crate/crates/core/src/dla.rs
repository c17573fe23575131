//! Pauli-string algebra of the ansatz generators and an empirical cost-variance probe.
//!
//! Strings are stored symplectically as two bit masks (`X` part, `Z` part);
//! global phases are dropped since only the spanned basis element matters
//! when counting the dimension of a Lie closure.

use std::collections::HashSet;
use std::f64::consts::TAU;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::circuit::ring;
use crate::error::{Error, Result};
use crate::grid::ProblemSpec;
use crate::par::{map_indexed, Execution};
use crate::vqa::{global_cost, GlobalVqaProblem};

pub const MAX_PAULI_QUBITS: usize = 32;

/// `⊗_j X^{x_j} Z^{z_j}` up to phase. Bit `j` refers to qubit `j`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    pub qubits: usize,
    pub x: u64,
    pub z: u64,
}

impl PauliString {
    pub fn new(qubits: usize, x: u64, z: u64) -> Result<Self> {
        if qubits == 0 || qubits > MAX_PAULI_QUBITS {
            return Err(Error::Config(format!("Pauli string on {qubits} qubits")));
        }
        let mask = (1u64 << qubits) - 1;
        if x & !mask != 0 || z & !mask != 0 {
            return Err(Error::Index("Pauli bits beyond qubit count".into()));
        }
        Ok(Self { qubits, x, z })
    }

    pub fn single(qubits: usize, qubit: usize, op: char) -> Result<Self> {
        if qubit >= qubits {
            return Err(Error::Index(format!("qubit {qubit} on {qubits} qubits")));
        }
        let b = 1u64 << qubit;
        let (x, z) = match op {
            'X' => (b, 0),
            'Y' => (b, b),
            'Z' => (0, b),
            'I' => (0, 0),
            _ => return Err(Error::Config(format!("unknown Pauli {op:?}"))),
        };
        Self::new(qubits, x, z)
    }

    /// Parses e.g. `"XIZ"`, leftmost character is qubit 0.
    pub fn parse(s: &str) -> Result<Self> {
        let n = s.chars().count();
        let mut p = Self::new(n.max(1), 0, 0)?;
        for (q, c) in s.chars().enumerate() {
            let single = Self::single(n, q, c)?;
            p.x |= single.x;
            p.z |= single.z;
        }
        Ok(p)
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Symplectic form `Σ_j x_j z'_j + z_j x'_j (mod 2)`; zero iff the strings commute.
    pub fn symplectic(&self, other: &Self) -> u32 {
        ((self.x & other.z) ^ (self.z & other.x)).count_ones() & 1
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.qubits {
            let c = match ((self.x >> q) & 1, (self.z >> q) & 1) {
                (0, 0) => 'I',
                (1, 0) => 'X',
                (1, 1) => 'Y',
                _ => 'Z',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// `[p, q]` up to phase: `None` when they commute, otherwise the product string.
pub fn pauli_commutator(p: &PauliString, q: &PauliString) -> Result<Option<PauliString>> {
    if p.qubits != q.qubits {
        return Err(Error::Dimension {
            expected: p.qubits,
            got: q.qubits,
        });
    }
    Ok((p.symplectic(q) == 1).then_some(PauliString {
        qubits: p.qubits,
        x: p.x ^ q.x,
        z: p.z ^ q.z,
    }))
}

/// `CX p CX†` for a CNOT with the given control and target.
pub fn cnot_conjugate(p: &PauliString, control: usize, target: usize) -> Result<PauliString> {
    if control == target || control >= p.qubits || target >= p.qubits {
        return Err(Error::Index(format!("CNOT {control}->{target} on {} qubits", p.qubits)));
    }
    let xc = (p.x >> control) & 1;
    let zt = (p.z >> target) & 1;
    Ok(PauliString {
        qubits: p.qubits,
        x: p.x ^ (xc << target),
        z: p.z ^ (zt << control),
    })
}

/// Conjugation through the full CNOT ring, gates taken in circuit order.
pub fn ring_conjugate(p: &PauliString) -> Result<PauliString> {
    ring(p.qubits).try_fold(*p, |acc, (c, t)| cnot_conjugate(&acc, c, t))
}

/// `{X_j, Z_j} ∪ {U X_j U†, U Z_j U†}` for the ring entangler `U`, deduplicated.
pub fn ansatz_generators(n: usize) -> Result<Vec<PauliString>> {
    if n < 2 {
        return Err(Error::Config(format!("generator set needs n >= 2 (got {n})")));
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let locals: Vec<PauliString> = (0..n)
        .flat_map(|q| ['X', 'Z'].map(|op| PauliString::single(n, q, op)))
        .collect::<Result<_>>()?;
    let conjugated: Vec<PauliString> = locals.iter().map(ring_conjugate).collect::<Result<_>>()?;
    for p in locals.into_iter().chain(conjugated) {
        if !p.is_identity() && seen.insert(p) {
            out.push(p);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DlaReport {
    pub n: usize,
    pub generator_count: usize,
    pub closure_dimension: usize,
    pub closed_after_rounds: usize,
}

/// Closure under commutators, computed round by round: each round commutes
/// the strings discovered in the previous round with everything found so far.
pub fn lie_closure(generators: &[PauliString]) -> Result<DlaReport> {
    let first = generators
        .first()
        .ok_or_else(|| Error::Config("empty generator set".into()))?;
    let n = first.qubits;
    let mut seen: HashSet<PauliString> = HashSet::new();
    let mut basis: Vec<PauliString> = Vec::new();
    for g in generators {
        if g.qubits != n {
            return Err(Error::Dimension {
                expected: n,
                got: g.qubits,
            });
        }
        if !g.is_identity() && seen.insert(*g) {
            basis.push(*g);
        }
    }
    let generator_count = basis.len();
    let mut frontier = 0..basis.len();
    let mut rounds = 0;
    while !frontier.is_empty() {
        rounds += 1;
        let mut fresh = Vec::new();
        for i in frontier.clone() {
            for j in 0..basis.len() {
                if let Some(c) = pauli_commutator(&basis[i], &basis[j])? {
                    if seen.insert(c) {
                        fresh.push(c);
                    }
                }
            }
        }
        let start = basis.len();
        basis.extend(fresh);
        frontier = start..basis.len();
    }
    Ok(DlaReport {
        n,
        generator_count,
        closure_dimension: basis.len(),
        closed_after_rounds: rounds,
    })
}

/// Closure dimension of the full ansatz generators at `n` qubits.
pub fn ansatz_dla(n: usize) -> Result<DlaReport> {
    let gens = ansatz_generators(n)?;
    let mut report = lie_closure(&gens)?;
    report.generator_count = gens.len();
    Ok(report)
}

/// `dim g_n / dim g_{n-1}`: full problem versus one subdomain problem.
pub fn subdomain_dla_ratio(n: usize) -> Result<f64> {
    if !(3..=6).contains(&n) {
        return Err(Error::Config(format!("subdomain ratio needs 3 <= n <= 6 (got {n})")));
    }
    let full = ansatz_dla(n)?.closure_dimension as f64;
    let sub = ansatz_dla(n - 1)?.closure_dimension as f64;
    Ok(full / sub)
}

/// Sample mean and unbiased sample variance.
pub fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, var)
}

/// Parameters for sample `index`, drawn uniformly from `[0, 2π)^m` on a
/// ChaCha stream selected by the sample index.
pub fn sample_parameters(seed: u64, index: u64, m: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    (0..m).map(|_| rng.random_range(0.0..TAU)).collect()
}

/// Empirical variance of `objective` over uniformly random parameters.
pub fn sample_variance_of<F>(
    objective: F,
    m: usize,
    num_samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> Result<f64> + Sync + Send,
{
    if num_samples < 2 {
        return Err(Error::Config("variance needs at least two samples".into()));
    }
    let values = map_indexed(num_samples, exec, |i| objective(&sample_parameters(seed, i as u64, m)))
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    Ok(mean_and_variance(&values))
}

/// Mean and variance of the full-domain cost at depth `depth` under uniform random `θ`.
pub fn sample_cost_variance(
    prob: &ProblemSpec,
    depth: usize,
    num_samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<(f64, f64)> {
    let problem = GlobalVqaProblem::new(prob.clone(), depth, None)?;
    sample_variance_of(
        |t| global_cost(&problem, t),
        problem.num_params(),
        num_samples,
        seed,
        exec,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    type Mat = Vec<Vec<Complex64>>;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn kron(a: &Mat, b: &Mat) -> Mat {
        let (ra, rb) = (a.len(), b.len());
        let mut out = vec![vec![c(0.0, 0.0); ra * rb]; ra * rb];
        for i in 0..ra {
            for j in 0..ra {
                for k in 0..rb {
                    for l in 0..rb {
                        out[i * rb + k][j * rb + l] = a[i][j] * b[k][l];
                    }
                }
            }
        }
        out
    }

    fn matmul(a: &Mat, b: &Mat) -> Mat {
        let n = a.len();
        (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect())
            .collect()
    }

    fn single(op: char) -> Mat {
        match op {
            'I' => vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]],
            'X' => vec![vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]],
            'Y' => vec![vec![c(0.0, 0.0), c(0.0, -1.0)], vec![c(0.0, 1.0), c(0.0, 0.0)]],
            _ => vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(-1.0, 0.0)]],
        }
    }

    // Dense matrix with qubit 0 as the least significant index bit.
    fn dense(p: &PauliString) -> Mat {
        let s = p.to_string();
        let mut m = vec![vec![c(1.0, 0.0)]];
        for ch in s.chars() {
            m = kron(&single(ch), &m);
        }
        m
    }

    #[allow(clippy::needless_range_loop)]
    fn cnot_dense(n: usize, control: usize, target: usize) -> Mat {
        let d = 1 << n;
        let mut m = vec![vec![c(0.0, 0.0); d]; d];
        for i in 0..d {
            let j = if i >> control & 1 == 1 { i ^ (1 << target) } else { i };
            m[j][i] = c(1.0, 0.0);
        }
        m
    }

    /// True when `a = e^{iφ} b` for some phase.
    fn equal_up_to_phase(a: &Mat, b: &Mat) -> bool {
        let mut phase = None;
        for (ra, rb) in a.iter().zip(b) {
            for (x, y) in ra.iter().zip(rb) {
                if y.norm() > 1e-12 {
                    let r = x / y;
                    match phase {
                        None => phase = Some(r),
                        Some(ph) if (ph - r).norm() > 1e-12 => return false,
                        _ => {}
                    }
                } else if x.norm() > 1e-12 {
                    return false;
                }
            }
        }
        phase.is_some_and(|p: Complex64| (p.norm() - 1.0).abs() < 1e-12)
    }

    fn all_strings(n: usize) -> Vec<PauliString> {
        let mut v = Vec::new();
        for x in 0..(1u64 << n) {
            for z in 0..(1u64 << n) {
                v.push(PauliString::new(n, x, z).unwrap());
            }
        }
        v
    }

    #[test]
    fn single_qubit_commutators() {
        let x = PauliString::parse("X").unwrap();
        let y = PauliString::parse("Y").unwrap();
        assert_eq!(pauli_commutator(&x, &x).unwrap(), None);
        assert_eq!(
            pauli_commutator(&x, &y).unwrap(),
            Some(PauliString::parse("Z").unwrap())
        );
        let xi = PauliString::parse("XI").unwrap();
        let iz = PauliString::parse("IZ").unwrap();
        assert_eq!(pauli_commutator(&xi, &iz).unwrap(), None);
        assert!(pauli_commutator(&x, &xi).is_err());
    }

    #[test]
    fn symplectic_form_agrees_with_dense_commutators() {
        let strings = all_strings(2);
        assert_eq!(strings.len(), 16);
        let mut pairs = 0;
        for p in strings.iter().filter(|p| !p.is_identity()) {
            for q in strings.iter().filter(|q| !q.is_identity()) {
                pairs += 1;
                let (a, b) = (dense(p), dense(q));
                let (ab, ba) = (matmul(&a, &b), matmul(&b, &a));
                let commute = ab
                    .iter()
                    .flatten()
                    .zip(ba.iter().flatten())
                    .all(|(x, y)| (x - y).norm() < 1e-12);
                let sym = pauli_commutator(p, q).unwrap();
                assert_eq!(commute, sym.is_none(), "{p} {q}");
                if let Some(r) = sym {
                    assert!(equal_up_to_phase(&ab, &dense(&r)));
                }
            }
        }
        assert_eq!(pairs, 225);
    }

    #[test]
    fn cnot_rules() {
        let xa = PauliString::parse("XI").unwrap();
        assert_eq!(cnot_conjugate(&xa, 0, 1).unwrap(), PauliString::parse("XX").unwrap());
        let zb = PauliString::parse("IZ").unwrap();
        assert_eq!(cnot_conjugate(&zb, 0, 1).unwrap(), PauliString::parse("ZZ").unwrap());
        let za = PauliString::parse("ZI").unwrap();
        assert_eq!(cnot_conjugate(&za, 0, 1).unwrap(), za);
        assert!(cnot_conjugate(&za, 1, 1).is_err());
        assert!(cnot_conjugate(&za, 0, 2).is_err());
    }

    #[test]
    fn cnot_conjugation_agrees_with_dense() {
        let cx = cnot_dense(2, 0, 1);
        for p in all_strings(2).iter().filter(|p| !p.is_identity()) {
            let conj = matmul(&matmul(&cx, &dense(p)), &cx);
            let sym = cnot_conjugate(p, 0, 1).unwrap();
            assert!(equal_up_to_phase(&conj, &dense(&sym)), "{p}");
            assert_eq!(cnot_conjugate(&sym, 0, 1).unwrap(), *p);
        }
    }

    #[test]
    fn ring_conjugation_agrees_with_dense() {
        // U = CX(1→0) · CX(0→1) for n = 2.
        let u = matmul(&cnot_dense(2, 1, 0), &cnot_dense(2, 0, 1));
        let udag: Mat = (0..4).map(|i| (0..4).map(|j| u[j][i].conj()).collect()).collect();
        let x0 = PauliString::parse("XI").unwrap();
        let expected = matmul(&matmul(&u, &dense(&x0)), &udag);
        let got = ring_conjugate(&x0).unwrap();
        assert!(equal_up_to_phase(&expected, &dense(&got)));
        assert_eq!(got, PauliString::parse("IX").unwrap());
    }

    #[test]
    fn generator_sets() {
        let g = ansatz_generators(2).unwrap();
        assert!(g.len() <= 8);
        for q in 0..2 {
            for op in ['X', 'Z'] {
                assert!(g.contains(&PauliString::single(2, q, op).unwrap()));
            }
        }
        for n in 2..6 {
            assert!(ansatz_generators(n)
                .unwrap()
                .iter()
                .all(|p| !p.is_identity() && p.qubits == n));
        }
        assert!(ansatz_generators(1).is_err());
    }

    #[test]
    fn closure_dimensions() {
        for (n, dim) in [(2, 15), (3, 63), (4, 255), (5, 1023)] {
            assert_eq!(ansatz_dla(n).unwrap().closure_dimension, dim);
        }
        let abelian = lie_closure(&[PauliString::parse("XII").unwrap()]).unwrap();
        assert_eq!(abelian.closure_dimension, 1);
        assert!(lie_closure(&[]).is_err());
    }

    #[test]
    fn ratios_decrease_towards_four() {
        let r3 = subdomain_dla_ratio(3).unwrap();
        let r4 = subdomain_dla_ratio(4).unwrap();
        assert!((r3 - 63.0 / 15.0).abs() < 1e-12);
        assert!((r4 - 255.0 / 63.0).abs() < 1e-12);
        assert!(r3 > r4 && r4 > 4.0);
        assert!(subdomain_dla_ratio(2).is_err());
    }

    #[test]
    fn variance_of_constant_is_zero() {
        let (m, v) = sample_variance_of(|_| Ok(2.5), 10, 8, 1, Execution::Parallel).unwrap();
        assert_eq!((m, v), (2.5, 0.0));
        assert_eq!(mean_and_variance(&[1.0, 1.0]).1, 0.0);
        assert!(sample_variance_of(|_| Ok(0.0), 3, 1, 0, Execution::Sequential).is_err());
    }

    #[test]
    fn sampler_is_deterministic_and_schedule_independent() {
        let prob = ProblemSpec::default_for(3, 1.0).unwrap();
        let a = sample_cost_variance(&prob, 2, 16, 42, Execution::Parallel).unwrap();
        let b = sample_cost_variance(&prob, 2, 16, 42, Execution::Parallel).unwrap();
        let c = sample_cost_variance(&prob, 2, 16, 42, Execution::Sequential).unwrap();
        assert_eq!(a.0.to_bits(), b.0.to_bits());
        assert_eq!(a.1.to_bits(), c.1.to_bits());
        let p = sample_parameters(42, 3, 50);
        assert!(p.iter().all(|&t| (0.0..TAU).contains(&t)));
        assert_ne!(p, sample_parameters(42, 4, 50));
    }
}
