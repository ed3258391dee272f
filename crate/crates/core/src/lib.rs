//! Deterministic discrete-event simulation of a multi-tenant serverless
//! platform with explicit attacker and victim workloads.
//!
//! A run wires an arrival source (benign traffic, optionally wrapped by an
//! attacker) to a placement policy and a cluster of workers, dispatches
//! events in a fixed total order and reports security and performance
//! metrics. Every random draw comes from a per-component stream of the run's
//! master seed, so a `(config, seed)` pair always reproduces the same run.

pub mod adversary;
pub mod config;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod model;
pub mod platform;
pub mod resources;
pub mod rng;
pub mod runner;
pub mod scheduler;
pub mod sim;
pub mod time;
pub mod trace;
pub mod workload;

pub use config::{parse_config, ExperimentConfig, RunParams};
pub use error::{ConfigError, SimError};
pub use metrics::RunMetrics;
pub use runner::{execute, execute_all, expand, RunRow, RunSpec, TraceMode};
pub use scheduler::SchedulerKind;
