//! Experiment harness for point-source recovery on the unit disc: TOML
//! configs, seeded measurement noise, forward and inversion runners, table
//! replication and the `verify` self-check suite.

pub mod config;
pub mod experiments;
pub mod noise;
pub mod output;
pub mod verify;

pub use config::{ConfigError, Engine, ExperimentConfig};
