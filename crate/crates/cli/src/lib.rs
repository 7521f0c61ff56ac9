//! Command-line front end for `boundwalk`: TOML experiment files in, CSV tables and a
//! JSON manifest out.

pub mod config;
mod error;
pub mod presets;
pub mod run;

pub use config::{load_config, parse_config, Command, RunConfig};
pub use error::{CliError, ConfigError};
pub use presets::{preset, PRESETS};
pub use run::{execute, write_outputs, RunManifest, RunOutput, Table};
