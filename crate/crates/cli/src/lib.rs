//! Benchmark CLI for the time-domain boundary element solver: problem
//! definitions on the unit cube, mesh file IO, error metrics, and the
//! run/convergence/statistics drivers.

pub mod config;
pub mod errors;
pub mod interior;
pub mod off;
pub mod problem;
pub mod run;
pub mod stats;
