//! Experiment runner for Laplace learning on functional data.
//!
//! Four experiments share one config format and one output layout: white-noise
//! and Brownian-bridge labeling, the discrete-to-continuum convergence check,
//! and a table of closed-form continuum quantities against Monte Carlo.

pub mod config;
pub mod error;
pub mod experiments;
pub mod report;

pub use config::{Experiment, ExperimentConfig};
pub use error::CliError;
pub use experiments::run;
