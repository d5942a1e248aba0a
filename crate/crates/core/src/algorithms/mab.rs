//! Multi-armed-bandit policies over the savings ledger: constant-scale,
//! delay-aware Tsallis, and the two scale-free variants.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{sample_arm, scales, PolicyError};
use crate::environment::FeedbackEvent;
use crate::geometry::{self, Regularizer, SimplexPoint};
use crate::ledger::{compose_action, AllocationRule, LedgerState, RoundTrace, SavingStatus};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MabVariant {
    /// Fixed scale every round; with zero delay this reproduces plain OMD.
    ConstScale(f64),
    /// Delay-aware Tsallis schedule; the prefactor multiplies the delay term.
    Tinf { prefactor: f64 },
    /// Scale-free Tsallis with the doubling/skipping rule (losses in [0, L]).
    Sftinf,
    /// Scale-free log-barrier with the two-sided skipping rule ([-L, L]).
    Sflbinf,
}

impl MabVariant {
    pub fn default_regularizer(&self, k: usize) -> Regularizer {
        match self {
            MabVariant::Sflbinf => Regularizer::LogBarrierSimplex(k),
            _ => Regularizer::TsallisHalf(k),
        }
    }

    fn is_scale_free(&self) -> bool {
        matches!(self, MabVariant::Sftinf | MabVariant::Sflbinf)
    }
}

#[derive(Debug, Clone)]
pub struct MabRoundRecord {
    pub x: Vec<f64>,
    pub sigma: f64,
    pub arm: usize,
    pub investment: f64,
    pub backlog: u64,
    /// Range estimate frozen at decision time; skip rules compare against it.
    pub range_at_decision: f64,
    /// This round's current term in the weighted squared-loss budget.
    pub d_contribution: f64,
    pub observed: Option<f64>,
    pub skipped: bool,
}

pub struct MabPolicy {
    variant: MabVariant,
    reg: Regularizer,
    k: usize,
    horizon: u64,
    x0: Vec<f64>,
    ledger: LedgerState,
    range_estimate: f64,
    missing: u64,
    experienced_delay: u64,
    weighted_d: f64,
    records: BTreeMap<u64, MabRoundRecord>,
    traces: BTreeMap<u64, RoundTrace>,
    rng: ChaCha8Rng,
    skip_count: u64,
    max_backlog: u64,
}

impl MabPolicy {
    pub fn new(
        variant: MabVariant,
        k: usize,
        horizon: u64,
        rule: AllocationRule,
        reg_override: Option<Regularizer>,
        seed: u64,
    ) -> Result<Self, PolicyError> {
        let reg = reg_override.unwrap_or_else(|| variant.default_regularizer(k));
        let x0 = vec![1.0 / k as f64; k];
        let ledger = LedgerState::new(reg, rule, &x0)?;
        Ok(MabPolicy {
            variant,
            reg,
            k,
            horizon,
            x0,
            ledger,
            range_estimate: 1.0,
            missing: 0,
            // the log-barrier variant starts its experienced-delay counter at 1
            experienced_delay: if variant == MabVariant::Sflbinf { 1 } else { 0 },
            weighted_d: 0.0,
            records: BTreeMap::new(),
            traces: BTreeMap::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            skip_count: 0,
            max_backlog: 0,
        })
    }

    pub fn decide(&mut self, t: u64) -> Result<(Vec<f64>, usize), PolicyError> {
        let backlog = self.missing;
        self.max_backlog = self.max_backlog.max(backlog);
        self.experienced_delay += backlog;
        let mut d_contribution = 0.0;
        if self.variant.is_scale_free() {
            d_contribution =
                (backlog as f64 + 1.0) * self.range_estimate * self.range_estimate;
            self.weighted_d += d_contribution;
        }
        let sigma = match self.variant {
            MabVariant::ConstScale(s) => s,
            MabVariant::Tinf { prefactor } => {
                scales::tinf_scale(t, backlog, self.experienced_delay, prefactor)
            }
            MabVariant::Sftinf => {
                scales::sftinf_scale(backlog, self.weighted_d, self.range_estimate)
            }
            MabVariant::Sflbinf => scales::sflbinf_scale(
                backlog,
                self.weighted_d,
                self.experienced_delay,
                self.range_estimate,
                self.k,
                self.horizon,
            ),
        };
        let alloc = self.ledger.open_round(t, sigma)?;
        debug_assert!(alloc.exactness_residual() <= 1e-9);
        let x = compose_action(self.reg, &alloc)?;
        let u: f64 = self.rng.random();
        let arm = sample_arm(&x, u);
        self.records.insert(
            t,
            MabRoundRecord {
                x: x.clone(),
                sigma,
                arm,
                investment: alloc.b,
                backlog,
                range_at_decision: self.range_estimate,
                d_contribution,
                observed: None,
                skipped: false,
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
                lhat: vec![0.0; self.k],
            },
        );
        self.missing += 1;
        Ok((x, arm))
    }

    pub fn ingest(&mut self, events: &[FeedbackEvent]) -> Result<(), PolicyError> {
        for ev in events {
            let s = ev.round;
            let l = ev.observed_loss;
            let rec = self
                .records
                .get_mut(&s)
                .ok_or(PolicyError::UnknownRound(s))?;
            if rec.observed.is_some() {
                return Err(PolicyError::DuplicateFeedback(s));
            }
            rec.observed = Some(l);
            // range doubling happens before the skip check and sticks even
            // when the round is skipped
            match self.variant {
                MabVariant::Sftinf => {
                    self.range_estimate = self.range_estimate.max(2.0 * l)
                }
                MabVariant::Sflbinf => {
                    self.range_estimate = self.range_estimate.max(2.0 * l.abs())
                }
                _ => {}
            }
            let skip = match self.variant {
                MabVariant::Sftinf => l > rec.range_at_decision,
                MabVariant::Sflbinf => {
                    l.abs() > rec.range_at_decision || l < -0.5 * rec.sigma
                }
                _ => false,
            };
            if self.variant == MabVariant::Sflbinf {
                // re-weight this round's budget term: observed rounds carry
                // their realized squared loss, skipped rounds carry nothing
                self.weighted_d -= rec.d_contribution;
                rec.d_contribution = if skip {
                    0.0
                } else {
                    (rec.backlog as f64 + 1.0) * l * l
                };
                self.weighted_d += rec.d_contribution;
            }
            if skip {
                rec.skipped = true;
                self.skip_count += 1;
                self.ledger.mark_skipped(s)?;
                self.traces.get_mut(&s).expect("trace exists").status =
                    SavingStatus::Skipped;
            } else {
                let mut lhat = vec![0.0; self.k];
                lhat[rec.arm] = l / rec.x[rec.arm];
                let xp = SimplexPoint::new(rec.x.clone())?;
                let (z, ztilde) = geometry::omd_step(self.reg, &xp, &lhat, rec.sigma)?;
                self.ledger.settle_feedback(s, z.probs())?;
                let tr = self.traces.get_mut(&s).expect("trace exists");
                tr.status = SavingStatus::Arrived;
                tr.z = z.probs().to_vec();
                tr.ztilde = ztilde;
                tr.lhat = lhat;
            }
            self.missing -= 1;
        }
        Ok(())
    }

    pub fn record(&self, t: u64) -> Option<&MabRoundRecord> {
        self.records.get(&t)
    }

    pub fn records(&self) -> impl Iterator<Item = (&u64, &MabRoundRecord)> {
        self.records.iter()
    }

    pub fn ledger(&self) -> &LedgerState {
        &self.ledger
    }

    pub fn invested(&self) -> f64 {
        self.ledger.invested()
    }

    pub fn skip_count(&self) -> u64 {
        self.skip_count
    }

    pub fn max_backlog(&self) -> u64 {
        self.max_backlog
    }

    pub fn range_estimate(&self) -> f64 {
        self.range_estimate
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn regularizer(&self) -> Regularizer {
        self.reg
    }

    /// Finalized per-round traces with the remaining balances filled in,
    /// suitable for the sample-path regret audit.
    pub fn audit_traces(&self) -> Vec<RoundTrace> {
        self.traces
            .iter()
            .map(|(t, tr)| {
                let mut tr = tr.clone();
                tr.v_final = self
                    .ledger
                    .entry(*t)
                    .map(|e| e.v_remaining)
                    .unwrap_or(0.0);
                tr
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn event(round: u64, loss: f64) -> FeedbackEvent {
        FeedbackEvent {
            round,
            observed_loss: loss,
        }
    }

    #[test]
    fn first_decision_plays_uniform() {
        for variant in [
            MabVariant::ConstScale(3.0),
            MabVariant::Tinf { prefactor: 1.0 },
            MabVariant::Sftinf,
            MabVariant::Sflbinf,
        ] {
            let mut p =
                MabPolicy::new(variant, 4, 100, AllocationRule::Greedy, None, 1).unwrap();
            let (x, arm) = p.decide(1).unwrap();
            for v in &x {
                assert!((v - 0.25).abs() < 1e-10);
            }
            assert!(arm < 4);
        }
    }

    #[test]
    fn tinf_estimator_matches_definition() {
        let mut p = MabPolicy::new(
            MabVariant::ConstScale(2.0),
            2,
            10,
            AllocationRule::Greedy,
            None,
            1,
        )
        .unwrap();
        let (x, _) = p.decide(1).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-12);
        p.ingest(&[event(1, 1.0)]).unwrap();
        let tr = &p.audit_traces()[0];
        let arm = p.record(1).unwrap().arm;
        assert!((tr.lhat[arm] - 2.0).abs() < 1e-12);
        assert_eq!(tr.lhat.iter().filter(|&&v| v != 0.0).count(), 1);
    }

    #[test]
    fn sftinf_skips_and_doubles() {
        let mut p =
            MabPolicy::new(MabVariant::Sftinf, 3, 100, AllocationRule::Greedy, None, 5)
                .unwrap();
        p.decide(1).unwrap();
        p.ingest(&[event(1, 3.7)]).unwrap();
        assert_eq!(p.skip_count(), 1);
        assert!((p.range_estimate() - 7.4).abs() < 1e-12);
        assert!(p.record(1).unwrap().skipped);
    }

    #[test]
    fn sflbinf_negative_loss_skip() {
        let mut p =
            MabPolicy::new(MabVariant::Sflbinf, 3, 100, AllocationRule::Greedy, None, 5)
                .unwrap();
        // pile up backlog so the guard fails and sigma drops below 2*range,
        // making the second skip criterion reachable
        for t in 1..=60 {
            p.decide(t).unwrap();
        }
        let rec = p.record(60).unwrap();
        let sigma = rec.sigma;
        assert!(sigma < 2.0 * rec.range_at_decision);
        let l = -0.6 * sigma;
        assert!(l.abs() <= rec.range_at_decision);
        p.ingest(&[event(60, l)]).unwrap();
        assert!(p.record(60).unwrap().skipped);
    }

    #[test]
    fn backlog_counts_missing_rounds() {
        let mut p =
            MabPolicy::new(MabVariant::Tinf { prefactor: 1.0 }, 2, 100, AllocationRule::Greedy, None, 9)
                .unwrap();
        p.decide(1).unwrap();
        p.decide(2).unwrap();
        p.decide(3).unwrap();
        assert_eq!(p.record(3).unwrap().backlog, 2);
        p.ingest(&[event(1, 0.5), event(2, 0.25)]).unwrap();
        p.decide(4).unwrap();
        assert_eq!(p.record(4).unwrap().backlog, 1);
    }
}
