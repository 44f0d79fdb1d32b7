//! Experiment driver for the metastable intermittent map.
//!
//! [`experiments::Baseline`] computes the unperturbed densities and the limit
//! `h_p` once; [`experiments::run_sweep`] then solves each ε of the schedule
//! in parallel. The tables, Monte Carlo check and accessibility graph build
//! on those two.

pub mod asymptotics;
pub mod commands;
pub mod config;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod montecarlo;
pub mod output;

pub use config::ExperimentConfig;
pub use error::{LabError, LabResult};
