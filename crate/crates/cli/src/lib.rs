//! Command-line front end: configuration, experiment drivers and output files.

pub mod config;
pub mod experiments;
pub mod output;
pub mod runner;
