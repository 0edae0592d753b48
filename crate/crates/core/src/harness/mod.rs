//! Experiment configuration, orchestration and persistence.

pub mod config;
pub mod experiment;
pub mod validate;

pub use config::{load_config, AlgorithmName, ExperimentConfig};
pub use experiment::{run_experiment, run_trial, spectra, sweep, ExperimentReport, Spectra, SweepRow, TrialResult};
pub use validate::{validate_suite, validate_suite_with, Check, Fault};
