//! Dense BFGS with a strong-Wolfe line search.
//!
//! The inverse Hessian approximation is stored as a full `m × m` matrix and
//! starts at the identity. It is rescaled by `sᵀy / yᵀy` just before the
//! first update. One outer iteration (an accepted step) is one training step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    pub grad_tol: f64,
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    /// Stop when `|f_k − f_{k−1}| ≤ tol · max(1, |f_{k−1}|)`; zero disables the test.
    pub objective_change_tol: f64,
    /// Objective evaluations allowed inside one line search.
    pub max_line_search_evals: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iters: 100,
            grad_tol: 1e-20,
            c1: 1e-4,
            c2: 0.9,
            objective_change_tol: 0.0,
            max_line_search_evals: 40,
        }
    }
}

impl OptimizerConfig {
    pub fn with_max_iters(max_iters: usize) -> Self {
        Self {
            max_iters,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(Error::Config(format!(
                "line-search constants must satisfy 0 < c1 < c2 < 1 (got {}, {})",
                self.c1, self.c2
            )));
        }
        if self.grad_tol < 0.0 || self.objective_change_tol < 0.0 {
            return Err(Error::Config("tolerances must be non-negative".into()));
        }
        if self.max_line_search_evals == 0 {
            return Err(Error::Config("max_line_search_evals must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradientTol,
    MaxIters,
    ObjectiveChange,
    LineSearchFailure,
}

/// One accepted outer iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub step: f64,
}

#[derive(Clone, Debug)]
pub struct OptimizeResult {
    pub theta: Vec<f64>,
    pub objective: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub history: Vec<IterationRecord>,
    pub termination: Termination,
}

pub fn minimize<F>(objective: F, theta0: &[f64], config: &OptimizerConfig) -> Result<OptimizeResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    minimize_with_observer(objective, theta0, config, |_, _| {})
}

/// Runs BFGS, calling `observer` with every accepted iterate.
pub fn minimize_with_observer<F, O>(
    mut objective: F,
    theta0: &[f64],
    config: &OptimizerConfig,
    mut observer: O,
) -> Result<OptimizeResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    O: FnMut(&IterationRecord, &[f64]),
{
    config.validate()?;
    let m = theta0.len();
    let mut x = theta0.to_vec();
    let (mut f, mut g) = objective(&x)?;
    let mut evaluations = 1;
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("objective or gradient at the starting point".into()));
    }
    if g.len() != m {
        return Err(Error::Dimension {
            expected: m,
            got: g.len(),
        });
    }

    let mut hinv = InverseHessian::identity(m);
    let mut history = Vec::new();
    let termination = loop {
        let gnorm = norm(&g);
        if gnorm <= config.grad_tol {
            break Termination::GradientTol;
        }
        if history.len() >= config.max_iters {
            break Termination::MaxIters;
        }

        let mut dir = hinv.direction(&g);
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            hinv.reset();
            dir = g.iter().map(|v| -v).collect();
            slope = -gnorm * gnorm;
        }
        let alpha0 = if history.is_empty() {
            (1.0 / gnorm).min(1.0)
        } else {
            1.0
        };

        let search = LineSearch {
            x: &x,
            dir: &dir,
            f0: f,
            slope0: slope,
            config,
        };
        let outcome = search.run(&mut objective, alpha0, &mut evaluations)?;
        let Some(point) = outcome.filter(|p| p.f < f) else {
            if hinv.is_identity() {
                break Termination::LineSearchFailure;
            }
            log::debug!("line search failed; resetting inverse Hessian");
            hinv.reset();
            continue;
        };
        if point.g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gradient at accepted iterate".into()));
        }

        let s: Vec<f64> = point.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = point.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        hinv.update(&s, &y);

        let f_prev = f;
        x = point.x;
        f = point.f;
        g = point.g;
        let record = IterationRecord {
            iteration: history.len() + 1,
            objective: f,
            grad_norm: norm(&g),
            step: point.alpha,
        };
        history.push(record);
        observer(&record, &x);

        if config.objective_change_tol > 0.0
            && (f_prev - f).abs() <= config.objective_change_tol * f_prev.abs().max(1.0)
        {
            break Termination::ObjectiveChange;
        }
    };

    Ok(OptimizeResult {
        iterations: history.len(),
        theta: x,
        objective: f,
        gradient: g,
        evaluations,
        history,
        termination,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Row-major dense inverse Hessian approximation.
struct InverseHessian {
    dim: usize,
    data: Vec<f64>,
    identity: bool,
    scaled: bool,
}

impl InverseHessian {
    fn identity(dim: usize) -> Self {
        let mut h = Self {
            dim,
            data: vec![0.0; dim * dim],
            identity: true,
            scaled: false,
        };
        h.reset();
        h
    }

    fn reset(&mut self) {
        self.data.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.dim {
            self.data[i * self.dim + i] = 1.0;
        }
        self.identity = true;
        self.scaled = false;
    }

    fn is_identity(&self) -> bool {
        self.identity
    }

    fn mul(&self, v: &[f64]) -> Vec<f64> {
        self.data
            .chunks_exact(self.dim.max(1))
            .map(|row| dot(row, v))
            .take(self.dim)
            .collect()
    }

    fn direction(&self, g: &[f64]) -> Vec<f64> {
        self.mul(g).into_iter().map(|v| -v).collect()
    }

    /// `H ← (I − ρsyᵀ) H (I − ρysᵀ) + ρssᵀ`, skipped when `sᵀy` is not safely positive.
    fn update(&mut self, s: &[f64], y: &[f64]) {
        let sy = dot(s, y);
        if !(sy > 1e-12 * norm(s) * norm(y)) || !sy.is_finite() {
            return;
        }
        if !self.scaled {
            let scale = sy / dot(y, y);
            self.data.iter_mut().for_each(|v| *v *= scale);
            self.scaled = true;
        }
        let rho = 1.0 / sy;
        let hy = self.mul(y);
        let yhy = dot(y, &hy);
        let coef = rho * rho * yhy + rho;
        let n = self.dim;
        for i in 0..n {
            let row = &mut self.data[i * n..(i + 1) * n];
            let (si, hyi) = (s[i], hy[i]);
            for j in 0..n {
                row[j] += -rho * (si * hy[j] + hyi * s[j]) + coef * si * s[j];
            }
        }
        self.identity = false;
    }
}

struct TrialPoint {
    alpha: f64,
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
    slope: f64,
}

struct LineSearch<'a> {
    x: &'a [f64],
    dir: &'a [f64],
    f0: f64,
    slope0: f64,
    config: &'a OptimizerConfig,
}

impl LineSearch<'_> {
    fn eval<F>(&self, objective: &mut F, alpha: f64, count: &mut usize) -> Result<TrialPoint>
    where
        F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    {
        let x: Vec<f64> = self.x.iter().zip(self.dir).map(|(a, d)| a + alpha * d).collect();
        let (f, g) = objective(&x)?;
        *count += 1;
        let slope = dot(&g, self.dir);
        Ok(TrialPoint { alpha, x, f, g, slope })
    }

    fn armijo(&self, p: &TrialPoint) -> bool {
        p.f <= self.f0 + self.config.c1 * p.alpha * self.slope0
    }

    fn curvature(&self, p: &TrialPoint) -> bool {
        p.slope.abs() <= -self.config.c2 * self.slope0
    }

    /// Returns a strong-Wolfe point, or failing that the best sufficient-decrease
    /// point seen, or `None`.
    fn run<F>(&self, objective: &mut F, alpha0: f64, count: &mut usize) -> Result<Option<TrialPoint>>
    where
        F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    {
        let budget = self.config.max_line_search_evals;
        let mut used = 0;
        let mut prev = TrialPoint {
            alpha: 0.0,
            x: self.x.to_vec(),
            f: self.f0,
            g: Vec::new(),
            slope: self.slope0,
        };
        let mut alpha = alpha0;
        let mut first = true;
        while used < budget {
            let cur = self.eval(objective, alpha, count)?;
            used += 1;
            if !cur.f.is_finite() || !cur.slope.is_finite() {
                alpha = 0.5 * (prev.alpha + alpha);
                continue;
            }
            if !self.armijo(&cur) || (!first && cur.f >= prev.f) {
                return self.zoom(objective, prev, cur, budget - used, count);
            }
            if self.curvature(&cur) {
                return Ok(Some(cur));
            }
            if cur.slope >= 0.0 {
                return self.zoom(objective, cur, prev, budget - used, count);
            }
            first = false;
            alpha = 2.0 * cur.alpha;
            prev = cur;
        }
        Ok((prev.alpha > 0.0).then_some(prev))
    }

    fn zoom<F>(
        &self,
        objective: &mut F,
        mut lo: TrialPoint,
        mut hi: TrialPoint,
        budget: usize,
        count: &mut usize,
    ) -> Result<Option<TrialPoint>>
    where
        F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    {
        for _ in 0..budget {
            let width = hi.alpha - lo.alpha;
            if width.abs() <= f64::EPSILON * lo.alpha.abs().max(1e-300) {
                break;
            }
            let alpha = interpolate(&lo, &hi);
            let cur = self.eval(objective, alpha, count)?;
            if !cur.f.is_finite() || !self.armijo(&cur) || cur.f >= lo.f {
                hi = cur;
                continue;
            }
            if self.curvature(&cur) {
                return Ok(Some(cur));
            }
            if cur.slope * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = cur;
        }
        Ok((lo.alpha > 0.0).then_some(lo))
    }
}

/// Safeguarded cubic minimizer on the bracket, falling back to bisection.
fn interpolate(lo: &TrialPoint, hi: &TrialPoint) -> f64 {
    let (a, b) = (lo.alpha, hi.alpha);
    let mid = 0.5 * (a + b);
    if !hi.f.is_finite() || !hi.slope.is_finite() {
        return mid;
    }
    let d1 = lo.slope + hi.slope - 3.0 * (lo.f - hi.f) / (a - b);
    let disc = d1 * d1 - lo.slope * hi.slope;
    if !(disc >= 0.0) {
        return mid;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let denom = hi.slope - lo.slope + 2.0 * d2;
    if denom == 0.0 {
        return mid;
    }
    let t = b - (b - a) * (hi.slope + d2 - d1) / denom;
    let (left, right) = if a < b { (a, b) } else { (b, a) };
    let margin = 0.1 * (right - left);
    if t.is_finite() && t >= left + margin && t <= right - margin {
        t
    } else {
        mid
    }
}
