//! Banker-style online mirror descent under arbitrarily delayed feedback.
//!
//! The crate is organized around a savings ledger: each round opens with a
//! scale budget, covers it from earlier rounds whose feedback has arrived,
//! and invests fresh budget for whatever the past cannot cover. Policies
//! (multi-armed bandit and bandit linear optimization) sit on top of the
//! ledger, and a harness drives seeded Monte-Carlo experiments against a
//! delayed environment.

pub mod algorithms;
pub mod environment;
pub mod geometry;
pub mod harness;
pub mod ledger;

pub use algorithms::{MabPolicy, MabVariant, BoloPolicy, vanilla_omd_run};
pub use environment::{DelaySchedule, Environment, LossModel};
pub use geometry::{DualPoint, GeometryError, Regularizer, SimplexPoint};
pub use harness::{ExperimentConfig, RunSummary};
pub use ledger::{Allocation, AllocationRule, LedgerError, LedgerState, SavingStatus};
