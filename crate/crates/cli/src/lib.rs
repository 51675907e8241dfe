//! Command-line driver: configuration, dispatch and artifact output.

pub mod config;
pub mod error;
pub mod run;

pub use config::RunConfig;
pub use error::CliError;
