//! Command-line pipelines over the `flowergm` library.
//!
//! Every run validates its inputs, writes CSV artifacts atomically with a
//! `# seed=..., config_digest=...` first line, and finishes with a
//! `manifest.json` describing the run.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;
pub mod inputs;

pub use commands::{run, Cli, Command};
pub use config::RunConfig;
pub use error::{CliError, CliResult, ErrorRecord};
