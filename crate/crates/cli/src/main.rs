use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gpdd::dd::LocalBudget;
use gpdd::experiment::{exit_code, run_experiment, ExperimentConfig, Mode, RunSummary, EXIT_CONFIG};
use gpdd::par::{self, Execution};
use gpdd::Result;

/// Variational and domain-decomposed Gross-Pitaevskii ground states.
///
/// Diagnostics go to standard error at the level named by SOLVER_LOG
/// (error, info or debug); results are written to the output directory and
/// summarized on standard output.
#[derive(Parser, Debug)]
#[command(name = "solver", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one or more JSON configurations.
    Run(RunArgs),
    /// Full-domain variational training.
    Full(InlineArgs),
    /// Circuit training on three overlapping subdomains.
    Dd(InlineArgs),
    /// Subdomain sweeps over raw grid values.
    ClassicalDd(InlineArgs),
    /// Newton reference ground state.
    Newton(InlineArgs),
    /// Lie closure of the ansatz generators.
    Dla(InlineArgs),
    /// Cost variance over random parameters, scanned in n.
    Variance(InlineArgs),
    /// Full-domain and decomposed training under a matched budget.
    Compare(InlineArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Configuration files.
    #[arg(required = true)]
    configs: Vec<PathBuf>,
    /// Output directory; with several configs each gets a subdirectory named after its file.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Number of configurations run at once.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Overrides the seed of every configuration.
    #[arg(long)]
    seed: Option<u64>,
}

/// Flags mirroring the configuration fields.
#[derive(Args, Debug)]
struct InlineArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    d_local: Option<usize>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    sweeps: Option<usize>,
    /// An iteration count or "converge".
    #[arg(long, value_parser = parse_budget)]
    local_budget: Option<LocalBudget>,
    #[arg(long)]
    max_full_iters: Option<usize>,
    #[arg(long)]
    cost_ratio: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    warm_start: Option<bool>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    scan_min_n: Option<usize>,
    #[arg(long)]
    record_wall_time: bool,
    #[arg(long)]
    label: Option<String>,
}

fn parse_budget(s: &str) -> std::result::Result<LocalBudget, String> {
    if s == "converge" {
        return Ok(LocalBudget::Converge);
    }
    s.parse()
        .map(LocalBudget::Iterations)
        .map_err(|_| format!("expected an iteration count or \"converge\", got {s:?}"))
}

impl InlineArgs {
    fn into_config(self, mode: Mode) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(mode, self.n);
        c.d = self.d;
        c.d_local = self.d_local;
        c.sweeps = self.sweeps;
        c.output_dir = self.output_dir;
        c.label = self.label;
        c.record_wall_time = self.record_wall_time;
        if let Some(v) = self.kappa {
            c.kappa = v;
        }
        if let Some(v) = self.local_budget {
            c.local_budget = v;
        }
        if let Some(v) = self.max_full_iters {
            c.max_full_iters = v;
        }
        if let Some(v) = self.cost_ratio {
            c.cost_ratio = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.warm_start {
            c.warm_start = v;
        }
        if let Some(v) = self.samples {
            c.samples = v;
        }
        if let Some(v) = self.scan_min_n {
            c.scan_min_n = v;
        }
        c
    }
}

fn init_logging() {
    let level = std::env::var("SOLVER_LOG").unwrap_or_else(|_| "error".into());
    env_logger::Builder::new()
        .parse_filters(&level)
        .target(env_logger::Target::Stderr)
        .format_timestamp(None)
        .init();
}

fn report(summary: &RunSummary, dir: &Path) {
    println!(
        "{} n={} -> {}",
        summary.config.mode.as_str(),
        summary.config.n,
        dir.display()
    );
    if let Some(e) = summary.e_newton {
        println!("  E_newton = {e:.15}");
    }
    for r in &summary.runs {
        println!(
            "  {}: E = {:.15}, |E - E_newton| = {:.3e}, L2 = {:.3e}, iterations = {}",
            r.label, r.final_energy, r.final_energy_error, r.final_l2_error, r.total_iterations
        );
    }
}

fn run_one(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    let summary = run_experiment(cfg, dir)?;
    report(&summary, dir);
    Ok(())
}

fn default_dir(cfg: &ExperimentConfig, stem: &str) -> PathBuf {
    cfg.output_dir
        .clone()
        .unwrap_or_else(|| Path::new("results").join(stem))
}

fn run_configs(args: RunArgs) -> Vec<Result<()>> {
    let several = args.configs.len() > 1;
    let mut results = Vec::new();
    let mut jobs = Vec::new();
    for path in &args.configs {
        let mut cfg = match ExperimentConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                results.push(Err(e));
                continue;
            }
        };
        if let Some(seed) = args.seed {
            cfg.seed = seed;
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run").to_string();
        let dir = match &args.output_dir {
            Some(d) if several => d.join(&stem),
            Some(d) => d.clone(),
            None => default_dir(&cfg, &stem),
        };
        jobs.push((cfg, dir));
    }
    let exec = if args.jobs > 1 {
        Execution::Parallel
    } else {
        Execution::Sequential
    };
    results.extend(par::with_threads(args.jobs, || {
        par::map_indexed(jobs.len(), exec, |i| run_one(&jobs[i].0, &jobs[i].1))
    }));
    results
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging();
    let results = match cli.command {
        Command::Run(args) => {
            if args.jobs == 0 {
                eprintln!("error: --jobs must be at least 1");
                return ExitCode::from(EXIT_CONFIG as u8);
            }
            run_configs(args)
        }
        command => {
            let (mode, inline) = match command {
                Command::Full(a) => (Mode::Full, a),
                Command::Dd(a) => (Mode::Dd, a),
                Command::ClassicalDd(a) => (Mode::ClassicalDd, a),
                Command::Newton(a) => (Mode::Newton, a),
                Command::Dla(a) => (Mode::Dla, a),
                Command::Variance(a) => (Mode::Variance, a),
                Command::Compare(a) => (Mode::Compare, a),
                Command::Run(_) => unreachable!(),
            };
            let cfg = inline.into_config(mode);
            let dir = default_dir(&cfg, mode.as_str());
            vec![run_one(&cfg, &dir)]
        }
    };
    let mut code = 0;
    for r in &results {
        if let Err(e) = r {
            eprintln!("error: {e}");
            if code == 0 {
                code = exit_code(e);
            }
        }
    }
    ExitCode::from(code as u8)
}
