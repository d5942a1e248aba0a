//! Experiment orchestration: configuration, seeded Monte-Carlo runs,
//! artifact emission, and the cross-module property suite.

pub mod config;
pub mod output;
pub mod run;
pub mod verify;

pub use config::{
    derive_seed, AlgorithmConfig, AlgorithmKind, AllocChoice, ConfigError, DelayConfig,
    EnvironmentConfig, ExperimentConfig, LossConfig, OutputConfig, RegChoice, SCHEMA_VERSION,
};
pub use output::{emit_outputs, OutputError, RunSummary};
pub use run::{aggregate, hash_point, run_monte_carlo, run_single, run_single_in, AggregateStats, RoundRow, RunError, RunRecord};
pub use verify::{property_names, verify, PropertyResult, VerifyReport};
