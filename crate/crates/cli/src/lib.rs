//! Experiment harness for the psdmf library: repeated seeded runs, parameter
//! sweeps and dataset checks.

pub mod commands;
pub mod config;
pub mod report;
