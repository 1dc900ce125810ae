//! Command-line pipelines around the kinetics library: file schemas, flux
//! preprocessing, fit reports, and subcommand dispatch.

pub mod config;
pub mod io;
pub mod preprocess;
pub mod report;
pub mod run;

pub use run::run_cli;
