//! Spectral Galerkin simulation of a nonlocal reaction-diffusion equation with a
//! state-dependent delay, together with numerical checks of the dissipativity,
//! continuous-dependence and absorbing-set estimates that hold for it.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod history;
pub mod integrator;
pub mod model;
pub mod runner;
pub mod sampling;
pub mod spectral;

pub use error::{Error, Result};
