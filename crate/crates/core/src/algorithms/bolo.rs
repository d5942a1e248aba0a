//! Bandit linear optimization over a barrier geometry, exploring on the
//! unit Dikin ellipsoid of the local Hessian.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{scales, PolicyError};
use crate::environment::FeedbackEvent;
use crate::geometry::{self, DualPoint, Regularizer};
use crate::ledger::{compose_action, AllocationRule, LedgerState, RoundTrace, SavingStatus};

#[derive(Debug, Clone)]
pub struct BoloRoundRecord {
    pub x: Vec<f64>,
    pub action: Vec<f64>,
    pub sigma: f64,
    pub investment: f64,
    pub backlog: u64,
    pub direction: usize,
    pub rademacher: f64,
    pub eigenvalue: f64,
    pub eigenvector: Vec<f64>,
    pub observed: Option<f64>,
}

pub struct BoloPolicy {
    reg: Regularizer,
    n: usize,
    horizon: u64,
    x0: Vec<f64>,
    ledger: LedgerState,
    missing: u64,
    experienced_delay: u64,
    records: BTreeMap<u64, BoloRoundRecord>,
    traces: BTreeMap<u64, RoundTrace>,
    rng: ChaCha8Rng,
    max_backlog: u64,
}

impl BoloPolicy {
    /// `reg` must be a barrier; the default action is the barrier's
    /// analytic center, the preimage of zero under the mirror map.
    pub fn new(
        reg: Regularizer,
        horizon: u64,
        rule: AllocationRule,
        seed: u64,
    ) -> Result<Self, PolicyError> {
        let n = reg.dimension();
        if reg.is_simplex() {
            return Err(PolicyError::Geometry(geometry::GeometryError::Domain(
                "linear-bandit policy needs a barrier regularizer".into(),
            )));
        }
        let x0 = geometry::mirror_unconstrained(reg, &DualPoint(vec![0.0; n]))?;
        let ledger = LedgerState::new(reg, rule, &x0)?;
        Ok(BoloPolicy {
            reg,
            n,
            horizon,
            x0,
            ledger,
            missing: 0,
            experienced_delay: 0,
            records: BTreeMap::new(),
            traces: BTreeMap::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            max_backlog: 0,
        })
    }

    pub fn decide(&mut self, t: u64) -> Result<(Vec<f64>, Vec<f64>), PolicyError> {
        let backlog = self.missing;
        self.max_backlog = self.max_backlog.max(backlog);
        self.experienced_delay += backlog;
        let sigma = scales::bolo_scale(t, backlog, self.experienced_delay, self.n, self.horizon);
        let alloc = self.ledger.open_round(t, sigma)?;
        let x = compose_action(self.reg, &alloc)?;
        let (eigenvalues, eigenvectors) = geometry::barrier_hessian_eigensystem(self.reg, &x)?;
        let direction = self.rng.random_range(0..self.n);
        let rademacher = if self.rng.random::<bool>() { 1.0 } else { -1.0 };
        let lambda = eigenvalues[direction];
        let evec = eigenvectors[direction].clone();
        let step = rademacher / lambda.sqrt();
        let action: Vec<f64> = x.iter().zip(evec.iter()).map(|(xi, ei)| xi + step * ei).collect();
        self.records.insert(
            t,
            BoloRoundRecord {
                x: x.clone(),
                action: action.clone(),
                sigma,
                investment: alloc.b,
                backlog,
                direction,
                rademacher,
                eigenvalue: lambda,
                eigenvector: evec,
                observed: None,
            },
        );
        self.traces.insert(
            t,
            RoundTrace {
                sigma,
                v_final: 0.0,
                status: SavingStatus::Missing,
                x: x.clone(),
                z: x.clone(),
                ztilde: x.clone(),
                lhat: vec![0.0; self.n],
            },
        );
        self.missing += 1;
        Ok((x, action))
    }

    pub fn ingest(&mut self, events: &[FeedbackEvent]) -> Result<(), PolicyError> {
        for ev in events {
            let s = ev.round;
            let rec = self
                .records
                .get_mut(&s)
                .ok_or(PolicyError::UnknownRound(s))?;
            if rec.observed.is_some() {
                return Err(PolicyError::DuplicateFeedback(s));
            }
            rec.observed = Some(ev.observed_loss);
            let lhat =
                loss_estimate(ev.observed_loss, self.n, rec.rademacher, rec.eigenvalue, &rec.eigenvector);
            let g = geometry::psi_grad(self.reg, &rec.x)?;
            let theta: Vec<f64> = g
                .coords()
                .iter()
                .zip(lhat.iter())
                .map(|(gi, li)| gi - li / rec.sigma)
                .collect();
            let z = geometry::mirror_unconstrained(self.reg, &DualPoint(theta))?;
            self.ledger.settle_feedback(s, &z)?;
            let tr = self.traces.get_mut(&s).expect("trace exists");
            tr.status = SavingStatus::Arrived;
            tr.z = z.clone();
            tr.ztilde = z;
            tr.lhat = lhat;
            self.missing -= 1;
        }
        Ok(())
    }

    pub fn record(&self, t: u64) -> Option<&BoloRoundRecord> {
        self.records.get(&t)
    }

    pub fn records(&self) -> impl Iterator<Item = (&u64, &BoloRoundRecord)> {
        self.records.iter()
    }

    pub fn ledger(&self) -> &LedgerState {
        &self.ledger
    }

    pub fn max_backlog(&self) -> u64 {
        self.max_backlog
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn regularizer(&self) -> Regularizer {
        self.reg
    }

    pub fn audit_traces(&self) -> Vec<RoundTrace> {
        self.traces
            .iter()
            .map(|(t, tr)| {
                let mut tr = tr.clone();
                tr.v_final = self.ledger.entry(*t).map(|e| e.v_remaining).unwrap_or(0.0);
                tr
            })
            .collect()
    }
}

/// One-point loss estimator: lhat * n * eps * sqrt(lambda) * e. Averaging it
/// over the 2n equally likely (direction, sign) outcomes recovers the loss
/// vector exactly.
pub fn loss_estimate(
    observed: f64,
    n: usize,
    rademacher: f64,
    eigenvalue: f64,
    eigenvector: &[f64],
) -> Vec<f64> {
    let c = observed * n as f64 * rademacher * eigenvalue.sqrt();
    eigenvector.iter().map(|e| c * e).collect()
}
