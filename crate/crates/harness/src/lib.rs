//! Experiment harness for variational Thompson sampling: TOML configs, the
//! (agent × seed) grid runner, CSV aggregation, the diagnostic battery and plotting.

pub mod aggregate;
pub mod battery;
pub mod config;
pub mod error;
pub mod plot;
pub mod runner;

pub use config::{load_config, AgentConfig, AgentKind, Check, ExperimentConfig};
pub use error::{HarnessError, Result};
pub use runner::{run_experiment, RunOptions, RunOutcome};
