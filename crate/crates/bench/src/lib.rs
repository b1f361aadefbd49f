//! Benchmark registry, reference flows, result files, parameter sweeps and
//! report generation.

pub mod cases;
pub mod config;
pub mod error;
pub mod meshgen;
pub mod output;
pub mod reference;
pub mod report;
pub mod runner;

pub use error::{BenchError, Result};
