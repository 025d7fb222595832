//! Experiment runner for random walk on dynamical percolation.
//!
//! An experiment is selected by name, configured from a TOML or JSON file and
//! command-line overrides, and writes `report.json`, `report.csv`,
//! `summary.txt`, `manifest.json` and the resolved `config.toml` to its output
//! directory.

pub mod config;
pub mod experiments;
pub mod report;
pub mod runner;
