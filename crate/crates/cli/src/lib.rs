//! Experiment pipeline behind the `patcs` command.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{Ctx, Domain, Method};
pub use config::ExperimentConfig;
pub use error::CliError;
