//! Experiment runner for low-dimensional moment-matching observers.
//!
//! One TOML file describes one experiment: the plant, the signal generator,
//! the gains, the input schedule and the outputs. [`runner::run_experiment`]
//! validates the assumptions, builds the reduced model and observer,
//! certifies the error dynamics, integrates the schedule and writes
//! `trace.csv`, optionally `bound.csv`, and a report in JSON and text.

pub mod config;
pub mod error;
pub mod matrix_market;
pub mod runner;
pub mod sweep;

pub use config::{ExperimentConfig, Overrides};
pub use error::CliError;
