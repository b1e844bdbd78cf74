//! Configuration, sweeps and CSV output for the `idsgame` command.

pub mod config;
pub mod format;
pub mod run;

pub use config::{Config, CONFIG_ENV};
pub use run::{run_mc, run_point, run_sweep, Output, Record, SweepSpec};
