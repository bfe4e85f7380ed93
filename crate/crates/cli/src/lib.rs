//! Command implementations behind the `simulate` binary.
//!
//! * [`config`]: the `key = value` run configuration
//! * [`artifacts`]: CSV and JSON files of a run directory
//! * [`run`], [`sweep`], [`verify`], [`convergence`]: one module per subcommand

pub mod artifacts;
pub mod config;
pub mod convergence;
pub mod run;
pub mod sweep;
pub mod verify;

pub use config::{parse_config, parse_config_str, RunConfig};
