//! Experiment orchestration: configuration, sweeps over (λ, γ), drops and
//! setups, and CSV/JSON reporting.

pub mod config;
pub mod report;
pub mod run;

pub use config::{ExperimentConfig, Setup, SolverSettings};
pub use report::{sweep_drops, sweep_summary, write_outputs, CSV_HEADER};
pub use run::{prepare_drop, run_experiment, NetworkDrop, RunReport};
