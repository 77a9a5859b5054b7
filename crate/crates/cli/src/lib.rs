//! Configuration, orchestration and report emission for the `hcdirac` command-line tool.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod setup;
pub mod snapshot;
pub mod study;

pub use config::{parse_config, parse_config_str, SimConfig};
pub use error::{CliError, Result};
pub use report::{emit_reports, Results};
pub use study::{run_convergence_study, ConvergenceReport};
