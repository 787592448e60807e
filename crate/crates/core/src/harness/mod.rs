//! Configuration, parameter sweeps, commands and run manifests.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod sweep;

pub use commands::{run_command, Command, RunContext};
pub use config::{config_schema, load_config, parse_config, RunConfig};
pub use manifest::{sha256_hex, Manifest};
pub use sweep::{build_liouvillian, locate_contour, run_sweep, SweepSpec};
