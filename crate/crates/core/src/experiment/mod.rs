//! Configuration, orchestration and output files of the experiment runner.

mod config;
mod plot;
mod runner;

pub use config::{
    budget_match, default_depth, ExperimentConfig, Mode, Potential, MAX_DLA_QUBITS, MAX_REFERENCE_QUBITS,
};
pub use plot::{emit_plot, render_plot, Axes, PlotKind};
pub use runner::{
    exit_code, run_experiment, RunRecord, RunStatus, RunSummary, EXIT_CONFIG, EXIT_IO, EXIT_SOLVER, NEWTON_MAX_ITERS,
    NEWTON_TOL,
};
