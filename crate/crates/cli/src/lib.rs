//! Experiment runner behind the `tail-lab` command.

pub mod config;
pub mod error;
pub mod plot;
pub mod report;
pub mod run;
pub mod series;
pub mod tables;

pub use error::CliError;
