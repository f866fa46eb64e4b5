//! Library side of the `cylcover` command-line tool: configuration files,
//! intensity sweeps and the verification reports.

pub mod config;
pub mod report;
pub mod sweep;

pub use config::{ConfigError, ExperimentConfig, Model, VerifyConfig};
pub use sweep::{run_sweep, SweepOptions, SweepRecord};
