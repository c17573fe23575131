use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::config::{ExperimentConfig, Mode};
use super::plot::{emit_plot, PlotKind};
use crate::dd::{run_classical_dd, run_dd, DdOutcome, DdProblem, LocalBudget, Schedule};
use crate::dla::{ansatz_dla, ansatz_generators, sample_cost_variance, subdomain_dla_ratio, DlaReport};
use crate::error::{Error, Result};
use crate::grid::energy;
use crate::newton::{newton_ground_state, NewtonResult, NewtonSummary};
use crate::optimizer::{OptimizerConfig, Termination};
use crate::par::{self, Execution};
use crate::trace::{emit_trace, TrainingTrace};
use crate::vqa::{train_full_domain, GlobalVqaProblem, Reference};

pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITERS: usize = 100;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Process exit code for a failed run.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => EXIT_CONFIG,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => EXIT_IO,
        _ => EXIT_SOLVER,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

/// Final state of one trained formulation.
#[derive(Clone, Debug, Serialize)]
pub struct RunRecord {
    pub label: String,
    pub final_energy: f64,
    pub final_energy_error: f64,
    pub final_l2_error: f64,
    pub total_iterations: usize,
    pub terminations: Vec<Termination>,
    pub wall_time_s: f64,
    pub trace_file: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub config: ExperimentConfig,
    pub e_newton: Option<f64>,
    pub runs: Vec<RunRecord>,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
}

#[derive(Serialize)]
struct NewtonFile {
    n: usize,
    kappa: f64,
    #[serde(flatten)]
    result: NewtonSummary,
}

#[derive(Serialize)]
struct DlaFile {
    #[serde(flatten)]
    report: DlaReport,
    generators: Vec<String>,
    subdomain_ratio: Option<f64>,
}

#[derive(Serialize)]
struct VariancePoint {
    n: usize,
    num_params: usize,
    mean: f64,
    variance: f64,
}

#[derive(Serialize)]
struct VarianceFile {
    depth: usize,
    samples: usize,
    seed: u64,
    points: Vec<VariancePoint>,
    strictly_decreasing: bool,
}

#[derive(Serialize)]
struct CompareFile<'a> {
    n: usize,
    d: usize,
    d_local: usize,
    sweeps: usize,
    local_budget: LocalBudget,
    max_full_iters: usize,
    cost_ratio: f64,
    e_newton: f64,
    full: &'a RunRecord,
    dd: &'a RunRecord,
}

struct Run {
    record: RunRecord,
    trace: TrainingTrace,
}

struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn path(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.dir.join(name)
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        std::fs::write(self.path(name), text)?;
        Ok(())
    }
}

fn label(cfg: &ExperimentConfig, what: &str) -> String {
    match &cfg.label {
        Some(l) => format!("{l} {what}"),
        None => format!("{what} n={}", cfg.n),
    }
}

fn reference(cfg: &ExperimentConfig) -> Result<NewtonResult> {
    let r = newton_ground_state(&cfg.problem(cfg.n)?, NEWTON_TOL, NEWTON_MAX_ITERS)?;
    log::info!(
        "Newton reference: E = {:.15}, residual {:.3e}",
        r.energy,
        r.residual_norm
    );
    Ok(r)
}

fn run_full(cfg: &ExperimentConfig, reference: &Reference) -> Result<Run> {
    let start = Instant::now();
    let problem = GlobalVqaProblem::new(cfg.problem(cfg.n)?, cfg.depth(), Some(reference.clone()))?;
    let (result, trace) = train_full_domain(&problem, None, &OptimizerConfig::with_max_iters(cfg.max_full_iters))?;
    let psi = problem.wavefunction(&result.theta)?;
    let (ee, le) = reference.errors(&psi, result.objective)?;
    Ok(Run {
        record: RunRecord {
            label: label(cfg, "full"),
            final_energy: result.objective,
            final_energy_error: ee,
            final_l2_error: le,
            total_iterations: result.iterations,
            terminations: vec![result.termination],
            wall_time_s: start.elapsed().as_secs_f64(),
            trace_file: "full.csv".into(),
        },
        trace,
    })
}

fn run_decomposed(cfg: &ExperimentConfig, reference: &Reference, classical: bool) -> Result<Run> {
    let start = Instant::now();
    let prob = cfg.problem(cfg.n)?;
    let dd = DdProblem::new(prob.clone(), cfg.local_depth(), Some(reference.clone()))?;
    let schedule = Schedule {
        sweeps: cfg.resolved_sweeps(),
        budget: cfg.local_budget,
    };
    let out: DdOutcome = if classical {
        run_classical_dd(&dd, schedule)?
    } else {
        run_dd(&dd, schedule, cfg.warm_start)?
    };
    let e = energy(&out.psi, &prob)?;
    let (ee, le) = reference.errors(&out.psi, e)?;
    let name = if classical { "classical_dd" } else { "dd" };
    Ok(Run {
        record: RunRecord {
            label: label(cfg, name),
            final_energy: e,
            final_energy_error: ee,
            final_l2_error: le,
            total_iterations: out.total_iterations,
            terminations: out.terminations,
            wall_time_s: start.elapsed().as_secs_f64(),
            trace_file: format!("{name}.csv"),
        },
        trace: out.trace,
    })
}

fn write_runs(cfg: &ExperimentConfig, runs: &mut [Run], out: &mut Outputs) -> Result<()> {
    for run in runs.iter_mut() {
        if !cfg.record_wall_time {
            run.trace.rows.iter_mut().for_each(|r| r.wall_time_s = 0.0);
        }
        let path = out.path(&run.record.trace_file);
        emit_trace(&run.trace, &path)?;
    }
    let series: Vec<(String, &TrainingTrace)> = runs.iter().map(|r| (r.record.label.clone(), &r.trace)).collect();
    for kind in PlotKind::ALL {
        let path = out.path(&format!("{}.svg", kind.as_str()));
        emit_plot(&series, kind, &path)?;
    }
    Ok(())
}

fn execute(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<(Option<f64>, Vec<RunRecord>)> {
    match cfg.mode {
        Mode::Newton => {
            let r = reference(cfg)?;
            out.json(
                "newton.json",
                &NewtonFile {
                    n: cfg.n,
                    kappa: cfg.kappa,
                    result: r.summary(),
                },
            )?;
            Ok((Some(r.energy), Vec::new()))
        }
        Mode::Dla => {
            let report = ansatz_dla(cfg.n)?;
            let generators = ansatz_generators(cfg.n)?.iter().map(ToString::to_string).collect();
            let subdomain_ratio = if cfg.n >= 3 {
                Some(subdomain_dla_ratio(cfg.n)?)
            } else {
                None
            };
            out.json(
                "dla.json",
                &DlaFile {
                    report,
                    generators,
                    subdomain_ratio,
                },
            )?;
            Ok((None, Vec::new()))
        }
        Mode::Variance => {
            let depth = cfg.depth();
            let mut points = Vec::new();
            for n in cfg.scan_min_n..=cfg.n {
                let prob = cfg.problem(n)?;
                let (mean, variance) = sample_cost_variance(&prob, depth, cfg.samples, cfg.seed, Execution::Parallel)?;
                log::info!("variance scan n={n}: mean {mean:.6e}, variance {variance:.6e}");
                points.push(VariancePoint {
                    n,
                    num_params: 2 * n * (depth + 1),
                    mean,
                    variance,
                });
            }
            let strictly_decreasing = points.windows(2).all(|w| w[1].variance < w[0].variance);
            out.json(
                "variance.json",
                &VarianceFile {
                    depth,
                    samples: cfg.samples,
                    seed: cfg.seed,
                    points,
                    strictly_decreasing,
                },
            )?;
            Ok((None, Vec::new()))
        }
        Mode::Full | Mode::Dd | Mode::ClassicalDd => {
            let r = reference(cfg)?;
            let reference = r.reference();
            let run = match cfg.mode {
                Mode::Full => run_full(cfg, &reference)?,
                Mode::Dd => run_decomposed(cfg, &reference, false)?,
                _ => run_decomposed(cfg, &reference, true)?,
            };
            let mut runs = vec![run];
            write_runs(cfg, &mut runs, out)?;
            Ok((Some(r.energy), runs.into_iter().map(|r| r.record).collect()))
        }
        Mode::Compare => {
            let r = reference(cfg)?;
            let reference = r.reference();
            let (full, dd) = par::join(
                Execution::Parallel,
                || run_full(cfg, &reference),
                || run_decomposed(cfg, &reference, false),
            );
            let mut runs = vec![full?, dd?];
            write_runs(cfg, &mut runs, out)?;
            out.json(
                "compare.json",
                &CompareFile {
                    n: cfg.n,
                    d: cfg.depth(),
                    d_local: cfg.local_depth(),
                    sweeps: cfg.resolved_sweeps(),
                    local_budget: cfg.local_budget,
                    max_full_iters: cfg.max_full_iters,
                    cost_ratio: cfg.cost_ratio,
                    e_newton: r.energy,
                    full: &runs[0].record,
                    dd: &runs[1].record,
                },
            )?;
            Ok((Some(r.energy), runs.into_iter().map(|r| r.record).collect()))
        }
    }
}

/// Runs one experiment into `out_dir`. A `summary.json` is written whether
/// or not the solver succeeds; the error is returned after it is written.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let start = Instant::now();
    let mut out = Outputs {
        dir: out_dir.to_path_buf(),
        written: Vec::new(),
    };
    log::info!(
        "running mode {} with n = {} into {}",
        cfg.mode.as_str(),
        cfg.n,
        out_dir.display()
    );
    let result = execute(cfg, &mut out);
    let mut summary = RunSummary {
        status: RunStatus::Ok,
        error: None,
        config: cfg.resolved(),
        e_newton: None,
        runs: Vec::new(),
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs: Vec::new(),
    };
    let failure = match result {
        Ok((e_newton, runs)) => {
            summary.e_newton = e_newton;
            summary.runs = runs;
            None
        }
        Err(e) => {
            log::info!("mode {} failed: {e}", cfg.mode.as_str());
            summary.status = RunStatus::Failed;
            summary.error = Some(e.to_string());
            Some(e)
        }
    };
    summary.outputs = std::mem::take(&mut out.written);
    summary.outputs.push("summary.json".into());
    out.json("summary.json", &summary)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(summary),
    }
}
