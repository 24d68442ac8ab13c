//! Laplace learning for data drawn from Gaussian measures on Hilbert spaces.
//!
//! Points live in coefficient space relative to the covariance eigenbasis.
//! [`spectrum`] defines the fractional norms, [`gaussian`] the measures,
//! [`continuum`] the limiting energies, [`graph`] and [`learn`] the discrete
//! side, and [`signals`] turns grid-sampled functions into coefficients.

pub mod continuum;
pub mod error;
pub mod gaussian;
pub mod graph;
pub mod learn;
pub mod signals;
pub mod spectrum;

pub use error::{Error, Result};
