//! File formats, result export and the command-line front end for the
//! fuzzy transmit-gate simulator.

pub use v2x_fuzzy_core as core;

pub mod cli;
pub mod config;
pub mod dataset;
pub mod export;
pub mod fis_file;
pub mod issues;
pub mod scenario_file;
