//! Numerical core for a coarse-grained fractional Schrodinger equation with
//! the lowest-order relativistic correction, built on modified
//! Riemann-Liouville fractional derivatives. Provides the fractional
//! calculus toolbox, the model Hamiltonian and dispersion expansion, time
//! evolution schemes, continuity diagnostics, and the Bohmian layer.

pub mod bohm;
pub mod config;
pub mod error;
pub mod evolver;
pub mod fraccalc;
pub mod gamma;
pub mod grid;
pub mod model;
pub mod observables;
pub mod output;
pub mod runner;

pub use error::{Error, Result};
