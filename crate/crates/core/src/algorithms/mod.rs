//! Decide/ingest policy state machines built on the ledger and geometry.

pub mod bolo;
pub mod mab;
pub mod scales;
pub mod vanilla;

pub use bolo::{loss_estimate, BoloPolicy, BoloRoundRecord};
pub use mab::{MabPolicy, MabRoundRecord, MabVariant};
pub use scales::{bolo_scale, sflbinf_scale, sftinf_scale, tinf_scale};
pub use vanilla::{vanilla_omd_run, VanillaRecord};

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::ledger::LedgerError;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("no record for round {0}")]
    UnknownRound(u64),
    #[error("feedback for round {0} delivered twice")]
    DuplicateFeedback(u64),
}

/// Inverse-CDF sample over arm indices in ascending order from one uniform.
pub(crate) fn sample_arm(probs: &[f64], u: f64) -> usize {
    let mut cum = 0.0;
    for (i, p) in probs.iter().enumerate() {
        cum += p;
        if u < cum {
            return i;
        }
    }
    probs.len() - 1
}
