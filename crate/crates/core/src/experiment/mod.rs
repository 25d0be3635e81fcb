//! Config-driven Monte Carlo harness for the simulation studies.

pub mod config;
pub mod csv;
pub mod presets;
pub mod runner;

pub use config::{Arm, ArrayKind, ExperimentConfig, ExperimentId, GridPoint, Method, Separation};
pub use csv::{emit_csv, render_csv};
pub use runner::{
    run_experiment, run_experiment_with_threads, Aggregate, Dataset, FailureStage, TrialRecord,
};
