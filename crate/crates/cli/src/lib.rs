//! Command-line front end for order-agnostic NADE models: training,
//! evaluation, sampling, imputation, gradient checks and exports.

pub mod commands;
pub mod error;
pub mod model_file;
pub mod run_config;

pub use commands::{run, Cli, Command};
pub use error::{CliError, CliResult};
pub use model_file::ModelFile;
pub use run_config::RunConfig;
