use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dd::{LocalBudget, NUM_SUBDOMAINS};
use crate::error::{Error, Result};
use crate::grid::{make_grid, sample_default_potential, ProblemSpec, MAX_QUBITS, MIN_QUBITS};

/// Largest grid for which the dense Newton reference is attempted.
pub const MAX_REFERENCE_QUBITS: usize = 12;
/// Largest `n` for the Lie-closure mode.
pub const MAX_DLA_QUBITS: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Full,
    Dd,
    ClassicalDd,
    Newton,
    Dla,
    Variance,
    Compare,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Full => "full",
            Mode::Dd => "dd",
            Mode::ClassicalDd => "classical_dd",
            Mode::Newton => "newton",
            Mode::Dla => "dla",
            Mode::Variance => "variance",
            Mode::Compare => "compare",
        }
    }

    fn needs_reference(self) -> bool {
        matches!(
            self,
            Mode::Full | Mode::Dd | Mode::ClassicalDd | Mode::Compare | Mode::Newton
        )
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Potential {
    #[default]
    OneMinusCos,
}

/// One experiment, read from a flat JSON object. Unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub n: usize,
    /// Full-domain depth; defaults to [`default_depth`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// Subdomain depth, `d/2` (default) or `d`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_local: Option<usize>,
    #[serde(default = "defaults::kappa")]
    pub kappa: f64,
    /// Defaults to the budget-matched sweep count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweeps: Option<usize>,
    #[serde(default = "defaults::local_budget")]
    pub local_budget: LocalBudget,
    #[serde(default = "defaults::max_full_iters")]
    pub max_full_iters: usize,
    #[serde(default = "defaults::cost_ratio")]
    pub cost_ratio: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub potential: Potential,
    #[serde(default = "defaults::yes")]
    pub warm_start: bool,
    /// Monte-Carlo samples per qubit count (variance mode).
    #[serde(default = "defaults::samples")]
    pub samples: usize,
    /// Smallest qubit count of the variance scan; the scan ends at `n`.
    #[serde(default = "defaults::scan_min_n")]
    pub scan_min_n: usize,
    /// Write measured times into the trace CSV. Off by default so that
    /// repeated runs give identical files.
    #[serde(default)]
    pub record_wall_time: bool,
    /// Legend prefix for plots.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

mod defaults {
    use super::LocalBudget;

    pub fn kappa() -> f64 {
        1.0
    }
    pub fn local_budget() -> LocalBudget {
        LocalBudget::Iterations(50)
    }
    pub fn max_full_iters() -> usize {
        300
    }
    pub fn cost_ratio() -> f64 {
        8.0
    }
    pub fn yes() -> bool {
        true
    }
    pub fn samples() -> usize {
        200
    }
    pub fn scan_min_n() -> usize {
        4
    }
}

/// Depth used when `d` is not given: 100 at `n = 7`, doubling per extra qubit
/// and halving per missing one (at least 1).
pub fn default_depth(n: usize) -> usize {
    if n >= 7 {
        100usize << (n - 7)
    } else {
        (100usize >> (7 - n)).max(1)
    }
}

/// Sweeps giving the same nominal cost as `full_iters` full-domain
/// iterations, when one full iteration costs `cost_ratio` local ones.
pub fn budget_match(full_iters: usize, local_budget: usize, subdomains: usize, cost_ratio: f64) -> Result<usize> {
    if full_iters == 0 || local_budget == 0 || subdomains == 0 || !(cost_ratio > 0.0) || !cost_ratio.is_finite() {
        return Err(Error::Config(format!(
            "budget_match needs positive inputs (got {full_iters}, {local_budget}, {subdomains}, {cost_ratio})"
        )));
    }
    Ok((full_iters as f64 * cost_ratio / (subdomains * local_budget) as f64).round() as usize)
}

impl ExperimentConfig {
    pub fn new(mode: Mode, n: usize) -> Self {
        Self {
            mode,
            n,
            d: None,
            d_local: None,
            kappa: defaults::kappa(),
            sweeps: None,
            local_budget: defaults::local_budget(),
            max_full_iters: defaults::max_full_iters(),
            cost_ratio: defaults::cost_ratio(),
            seed: 0,
            output_dir: None,
            potential: Potential::OneMinusCos,
            warm_start: true,
            samples: defaults::samples(),
            scan_min_n: defaults::scan_min_n(),
            record_wall_time: false,
            label: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn depth(&self) -> usize {
        self.d.unwrap_or_else(|| default_depth(self.n))
    }

    pub fn local_depth(&self) -> usize {
        self.d_local.unwrap_or(self.depth() / 2)
    }

    pub fn resolved_sweeps(&self) -> usize {
        match (self.sweeps, self.local_budget) {
            (Some(s), _) => s,
            (None, LocalBudget::Iterations(b)) => {
                budget_match(self.max_full_iters, b, NUM_SUBDOMAINS, self.cost_ratio).unwrap_or(16)
            }
            (None, LocalBudget::Converge) => 16,
        }
    }

    /// Copy with every defaulted field spelled out.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        c.d = Some(self.depth());
        c.d_local = Some(self.local_depth());
        c.sweeps = Some(self.resolved_sweeps());
        c
    }

    pub fn problem(&self, n: usize) -> Result<ProblemSpec> {
        let grid = make_grid(n)?;
        let potential = match self.potential {
            Potential::OneMinusCos => sample_default_potential(&grid),
        };
        ProblemSpec::new(grid, potential, self.kappa)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let n = self.n;
        let (lo, hi) = match self.mode {
            Mode::Dla => (MIN_QUBITS, MAX_DLA_QUBITS),
            Mode::Dd | Mode::ClassicalDd | Mode::Compare => (3, MAX_REFERENCE_QUBITS),
            m if m.needs_reference() => (MIN_QUBITS, MAX_REFERENCE_QUBITS),
            _ => (MIN_QUBITS, MAX_QUBITS),
        };
        if !(lo..=hi).contains(&n) {
            return bad(format!("mode {} needs {lo} <= n <= {hi} (got {n})", self.mode.as_str()));
        }
        if !self.kappa.is_finite() || self.kappa < 0.0 {
            return bad(format!("kappa must be finite and non-negative (got {})", self.kappa));
        }
        if self.depth() == 0 {
            return bad("d must be positive".into());
        }
        let (d, dl) = (self.depth(), self.local_depth());
        if dl == 0 || (dl != d / 2 && dl != d) {
            return bad(format!(
                "d_local must be d/2 = {} or d = {d} and positive (got {dl})",
                d / 2
            ));
        }
        if self.sweeps == Some(0) {
            return bad("sweeps must be positive".into());
        }
        if self.local_budget == LocalBudget::Iterations(0) {
            return bad("local_budget must be positive".into());
        }
        if self.max_full_iters == 0 {
            return bad("max_full_iters must be positive".into());
        }
        if !self.cost_ratio.is_finite() || self.cost_ratio <= 0.0 {
            return bad(format!("cost_ratio must be positive (got {})", self.cost_ratio));
        }
        if self.mode == Mode::Variance {
            if self.samples < 2 {
                return bad("samples must be at least 2".into());
            }
            if self.scan_min_n < MIN_QUBITS || self.scan_min_n > n {
                return bad(format!(
                    "scan_min_n must lie in {MIN_QUBITS}..={n} (got {})",
                    self.scan_min_n
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_match_examples() {
        assert_eq!(budget_match(300, 50, 3, 8.0).unwrap(), 16);
        assert_eq!(budget_match(300, 50, 3, 1.0).unwrap(), 2);
        assert_eq!(budget_match(150, 50, 3, 8.0).unwrap(), 8);
        assert!(budget_match(0, 50, 3, 8.0).is_err());
        assert!(budget_match(300, 50, 3, f64::NAN).is_err());
    }

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::from_json(r#"{"mode": "compare", "n": 7}"#).unwrap();
        assert_eq!(c.depth(), 100);
        assert_eq!(c.local_depth(), 50);
        assert_eq!(c.resolved_sweeps(), 16);
        assert_eq!(c.kappa, 1.0);
        assert_eq!(c.local_budget, LocalBudget::Iterations(50));
        assert!(c.warm_start && !c.record_wall_time);
        assert_eq!([default_depth(8), default_depth(9), default_depth(5)], [200, 400, 25]);
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        for text in [
            r#"{"mode": "full", "n": 5, "colour": 1}"#,
            r#"{"mode": "fast", "n": 5}"#,
            r#"{"mode": "dd", "n": 2}"#,
            r#"{"mode": "dd", "n": 7, "d": 100, "d_local": 30}"#,
            r#"{"mode": "full", "n": 5, "kappa": -1}"#,
            r#"{"mode": "dd", "n": 5, "local_budget": 0}"#,
            r#"{"mode": "dla", "n": 9}"#,
            r#"{"mode": "variance", "n": 5, "scan_min_n": 6}"#,
            r#"{"n": 5}"#,
        ] {
            assert!(
                matches!(ExperimentConfig::from_json(text), Err(Error::Config(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn round_trip_preserves_fields() {
        let text = r#"{"mode": "dd", "n": 6, "d": 40, "d_local": 40, "kappa": 0.5, "sweeps": 3,
            "local_budget": "converge", "seed": 9, "output_dir": "x", "warm_start": false}"#;
        let c = ExperimentConfig::from_json(text).unwrap();
        let back = ExperimentConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(c, back);
        let r = c.resolved();
        assert_eq!(
            ExperimentConfig::from_json(&serde_json::to_string(&r).unwrap()).unwrap(),
            r
        );
    }
}
