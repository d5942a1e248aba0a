//! Plain constant-scale OMD for MAB, used as the equivalence reference for
//! the ledger-based policies under zero delay.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{sample_arm, PolicyError};
use crate::environment::{ActionChoice, EnvError, Environment};
use crate::geometry::{self, Regularizer, SimplexPoint};

#[derive(Debug, Clone, PartialEq)]
pub struct VanillaRecord {
    pub xs: Vec<Vec<f64>>,
    pub arms: Vec<usize>,
    pub losses: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum VanillaError {
    #[error("vanilla OMD requires a zero-delay environment")]
    NonzeroDelay,
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

/// Straight-line OMD loop: play x_t, observe the played arm's loss at the
/// next round boundary, update through the importance-weighted estimator.
pub fn vanilla_omd_run(
    reg: Regularizer,
    sigma: f64,
    env: &mut Environment,
    seed: u64,
) -> Result<VanillaRecord, VanillaError> {
    let k = reg.dimension();
    let horizon = env.horizon();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = SimplexPoint::uniform(k);
    let mut rec = VanillaRecord {
        xs: Vec::with_capacity(horizon as usize),
        arms: Vec::with_capacity(horizon as usize),
        losses: Vec::with_capacity(horizon as usize),
    };
    let mut last: Option<(usize, Vec<f64>)> = None;
    for t in 1..=horizon {
        let events = env.release(t);
        for ev in events {
            if ev.round + 1 != t {
                return Err(VanillaError::NonzeroDelay);
            }
            let (arm, xs) = last.take().expect("feedback follows a play");
            let mut lhat = vec![0.0; k];
            lhat[arm] = ev.observed_loss / xs[arm];
            let xp = SimplexPoint::new(xs).map_err(PolicyError::from)?;
            let (z, _) =
                geometry::omd_step(reg, &xp, &lhat, sigma).map_err(PolicyError::from)?;
            x = z;
        }
        let u: f64 = rng.random();
        let arm = sample_arm(x.probs(), u);
        let loss = env.play(t, &ActionChoice::Arm(arm))?;
        rec.xs.push(x.probs().to_vec());
        rec.arms.push(arm);
        rec.losses.push(loss);
        last = Some((arm, x.probs().to_vec()));
    }
    Ok(rec)
}
