//! Monte Carlo estimation of Feynman–Kac kernels, their gradients and log-gradients for
//! `½Δ^h − V` on rotationally symmetric manifolds with a pole.

pub mod bounds;
pub mod config;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod quadrature;
pub mod reference;
pub mod run;
pub mod stats;
pub mod stochastic;
pub mod validation;
pub mod weights;

pub use error::{Error, Result};
