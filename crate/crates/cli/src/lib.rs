//! Command-line layer: configuration, file formats and the three commands.

pub mod commands;
pub mod config;
pub mod ensemble_file;
pub mod output;

pub use commands::{cmd_dist, cmd_experiment, cmd_generate};
pub use config::{Emit, ExperimentConfig};
pub use ensemble_file::EnsembleFile;
