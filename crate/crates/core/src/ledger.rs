//! Savings ledger underlying banker-style mirror descent.
//!
//! Every round opens a savings account worth its scale sigma. The round's
//! budget is covered first by spending from accounts whose feedback has
//! already arrived, and any shortfall is invested as fresh budget b. The
//! total investment B equals the sum of remaining account balances at all
//! times, including balances frozen by skipped rounds.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, DualPoint, GeometryError, Regularizer};

#[derive(Debug, Error, PartialEq)]
pub enum LedgerError {
    #[error("round {0} is not in the ledger")]
    UnknownRound(u64),
    #[error("round {0} does not exceed the last opened round")]
    OutOfOrder(u64),
    #[error("round {0} is not missing (status already resolved)")]
    NotMissing(u64),
    #[error("sigma must be positive, got {0}")]
    NonPositiveSigma(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SavingStatus {
    /// Feedback not yet observed; the balance cannot be spent.
    Missing,
    /// Feedback observed; the balance is spendable.
    Arrived,
    /// Round discarded by a skipping rule; the balance is frozen forever.
    Skipped,
}

/// How shortfalls are covered from spendable balances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AllocationRule {
    /// Drain the oldest spendable accounts first.
    Greedy,
    /// Spend from every spendable account in proportion to its balance.
    Proportional,
}

#[derive(Debug, Clone)]
pub struct SavingEntry {
    pub sigma: f64,
    pub v_remaining: f64,
    pub status: SavingStatus,
    /// grad psi(z_s), cached at settlement; None while missing or skipped.
    pub z_dual: Option<Vec<f64>>,
}

/// Outcome of opening one round.
#[derive(Debug, Clone)]
pub struct Allocation {
    pub round: u64,
    pub sigma: f64,
    /// Fresh budget invested this round.
    pub b: f64,
    /// (source round, amount) pairs; empty under the proportional rule when
    /// nothing was spendable.
    pub spends: Vec<(u64, f64)>,
    /// Dual argument (1/sigma)(sum_s spends_s * grad psi(z_s) + b * grad psi(x0)).
    pub dual_arg: DualPoint,
}

impl Allocation {
    /// |b + sum spends - sigma|; the budget equation must balance exactly.
    pub fn exactness_residual(&self) -> f64 {
        let spent: f64 = self.spends.iter().map(|(_, a)| a).sum();
        (self.b + spent - self.sigma).abs()
    }
}

pub struct LedgerState {
    reg: Regularizer,
    rule: AllocationRule,
    x0_dual: Vec<f64>,
    entries: BTreeMap<u64, SavingEntry>,
    spendable: BTreeSet<u64>,
    /// Total fresh budget invested so far (compensated sum).
    b_total: f64,
    b_comp: f64,
    /// Sum of v_remaining over Arrived accounts (compensated sum).
    spendable_total: f64,
    spendable_comp: f64,
    /// Sum of balances frozen by skips; reported separately from spendable.
    frozen_skipped: f64,
    /// Aggregate sum_s v_s * grad psi(z_s) over Arrived accounts, kept exact
    /// under the proportional rule where every spend is a uniform rescale.
    prop_dual: Vec<f64>,
}

fn kahan_add(sum: &mut f64, comp: &mut f64, value: f64) {
    let y = value - *comp;
    let t = *sum + y;
    *comp = (t - *sum) - y;
    *sum = t;
}

impl LedgerState {
    pub fn new(reg: Regularizer, rule: AllocationRule, x0: &[f64]) -> Result<Self, LedgerError> {
        let x0_dual = geometry::psi_grad(reg, x0)?.0;
        let k = reg.dimension();
        Ok(LedgerState {
            reg,
            rule,
            x0_dual,
            entries: BTreeMap::new(),
            spendable: BTreeSet::new(),
            b_total: 0.0,
            b_comp: 0.0,
            spendable_total: 0.0,
            spendable_comp: 0.0,
            frozen_skipped: 0.0,
            prop_dual: vec![0.0; k],
        })
    }

    pub fn rule(&self) -> AllocationRule {
        self.rule
    }

    /// Total fresh budget invested so far (B_t).
    pub fn invested(&self) -> f64 {
        self.b_total
    }

    pub fn frozen_skipped(&self) -> f64 {
        self.frozen_skipped
    }

    pub fn spendable_total(&self) -> f64 {
        self.spendable_total
    }

    pub fn entry(&self, round: u64) -> Option<&SavingEntry> {
        self.entries.get(&round)
    }

    /// Sum of all remaining balances. Always equal to invested() up to
    /// floating-point error; exposed for auditing.
    pub fn sum_balances(&self) -> f64 {
        let mut s = 0.0;
        let mut c = 0.0;
        for e in self.entries.values() {
            kahan_add(&mut s, &mut c, e.v_remaining);
        }
        s
    }

    /// Open round `round` with scale `sigma`: cover the budget from spendable
    /// balances, invest the shortfall, and create the round's own account.
    pub fn open_round(&mut self, round: u64, sigma: f64) -> Result<Allocation, LedgerError> {
        if !(sigma > 0.0) {
            return Err(LedgerError::NonPositiveSigma(sigma));
        }
        if let Some((&last, _)) = self.entries.iter().next_back() {
            if round <= last {
                return Err(LedgerError::OutOfOrder(round));
            }
        }
        let k = self.reg.dimension();
        let mut spends: Vec<(u64, f64)> = Vec::new();
        let mut dual_sum = vec![0.0; k];
        let b;
        match self.rule {
            AllocationRule::Greedy => {
                let mut need = sigma;
                let mut need_comp = 0.0;
                let mut exhausted: Vec<u64> = Vec::new();
                for &s in self.spendable.iter() {
                    if need <= 0.0 {
                        break;
                    }
                    let e = self.entries.get_mut(&s).expect("spendable round has entry");
                    let take = if e.v_remaining >= need { need } else { e.v_remaining };
                    e.v_remaining -= take;
                    if e.v_remaining <= 0.0 {
                        e.v_remaining = 0.0;
                        exhausted.push(s);
                    }
                    kahan_add(&mut need, &mut need_comp, -take);
                    kahan_add(&mut self.spendable_total, &mut self.spendable_comp, -take);
                    let zd = e.z_dual.as_ref().expect("arrived round has dual");
                    for (d, g) in dual_sum.iter_mut().zip(zd.iter()) {
                        *d += take * g;
                    }
                    spends.push((s, take));
                    for (d, g) in self.prop_dual.iter_mut().zip(zd.iter()) {
                        *d -= take * g;
                    }
                }
                for s in exhausted {
                    self.spendable.remove(&s);
                }
                b = need.max(0.0);
            }
            AllocationRule::Proportional => {
                let v = self.spendable_total;
                if v <= 0.0 {
                    b = sigma;
                } else {
                    let spent = if sigma < v { sigma } else { v };
                    let c = spent / v;
                    b = sigma - spent;
                    for (d, g) in dual_sum.iter_mut().zip(self.prop_dual.iter()) {
                        *d = c * g;
                    }
                    let keep = 1.0 - c;
                    let mut drained = false;
                    for &s in self.spendable.iter() {
                        let e = self.entries.get_mut(&s).expect("spendable round has entry");
                        spends.push((s, c * e.v_remaining));
                        e.v_remaining *= keep;
                        if e.v_remaining <= 0.0 {
                            drained = true;
                        }
                    }
                    for d in self.prop_dual.iter_mut() {
                        *d *= keep;
                    }
                    self.spendable_total *= keep;
                    self.spendable_comp *= keep;
                    if drained || keep == 0.0 {
                        self.spendable.clear();
                        self.spendable_total = 0.0;
                        self.spendable_comp = 0.0;
                        for d in self.prop_dual.iter_mut() {
                            *d = 0.0;
                        }
                    }
                }
            }
        }
        kahan_add(&mut self.b_total, &mut self.b_comp, b);
        self.entries.insert(
            round,
            SavingEntry {
                sigma,
                v_remaining: sigma,
                status: SavingStatus::Missing,
                z_dual: None,
            },
        );
        let dual_arg: Vec<f64> = dual_sum
            .iter()
            .zip(self.x0_dual.iter())
            .map(|(d, x0)| (d + b * x0) / sigma)
            .collect();
        Ok(Allocation {
            round,
            sigma,
            b,
            spends,
            dual_arg: DualPoint(dual_arg),
        })
    }

    /// Record feedback arrival for round `round` with post-update point `z`.
    /// The account's full balance becomes spendable.
    pub fn settle_feedback(&mut self, round: u64, z: &[f64]) -> Result<(), LedgerError> {
        let zd = geometry::psi_grad(self.reg, z)?.0;
        let e = self
            .entries
            .get_mut(&round)
            .ok_or(LedgerError::UnknownRound(round))?;
        if e.status != SavingStatus::Missing {
            return Err(LedgerError::NotMissing(round));
        }
        e.status = SavingStatus::Arrived;
        e.z_dual = Some(zd.clone());
        kahan_add(&mut self.spendable_total, &mut self.spendable_comp, e.v_remaining);
        for (d, g) in self.prop_dual.iter_mut().zip(zd.iter()) {
            *d += e.v_remaining * g;
        }
        self.spendable.insert(round);
        Ok(())
    }

    /// Freeze round `round`: its balance can never be spent. Only missing
    /// rounds may be skipped (a skip decision happens at feedback arrival).
    pub fn mark_skipped(&mut self, round: u64) -> Result<(), LedgerError> {
        let e = self
            .entries
            .get_mut(&round)
            .ok_or(LedgerError::UnknownRound(round))?;
        if e.status != SavingStatus::Missing {
            return Err(LedgerError::NotMissing(round));
        }
        e.status = SavingStatus::Skipped;
        self.frozen_skipped += e.v_remaining;
        Ok(())
    }
}

/// Turn an allocation's dual argument into the played point: constrained
/// mirror map on the simplex, unconstrained map for barrier geometries.
pub fn compose_action(reg: Regularizer, alloc: &Allocation) -> Result<Vec<f64>, LedgerError> {
    if reg.is_simplex() {
        Ok(geometry::mirror_simplex(reg, &alloc.dual_arg)?.probs().to_vec())
    } else {
        Ok(geometry::mirror_unconstrained(reg, &alloc.dual_arg)?)
    }
}

/// Per-round record needed by the regret audit.
#[derive(Debug, Clone)]
pub struct RoundTrace {
    pub sigma: f64,
    /// Final remaining balance of the round's account.
    pub v_final: f64,
    pub status: SavingStatus,
    pub x: Vec<f64>,
    /// Constrained post-update point; equals x for missing or skipped rounds.
    pub z: Vec<f64>,
    /// Unconstrained post-update point; equals x for missing or skipped rounds.
    pub ztilde: Vec<f64>,
    /// Loss estimator fed into the update; all-zero for missing or skipped rounds.
    pub lhat: Vec<f64>,
}

/// Sample-path regret certificate. Returns the slack
///   B_T D(y, x0) + sum_t sigma_t D(x_t, ztilde_t) - sum_t v_t D(y, z_t)
///   - sum_t <lhat_t, x_t - y>,
/// which must be nonnegative (up to floating-point error) on every run.
pub fn regret_audit(
    reg: Regularizer,
    x0: &[f64],
    y: &[f64],
    b_total: f64,
    traces: &[RoundTrace],
) -> Result<f64, GeometryError> {
    let mut lhs = 0.0;
    let mut rhs = b_total * geometry::bregman(reg, y, x0)?;
    for tr in traces {
        lhs += tr
            .lhat
            .iter()
            .zip(tr.x.iter().zip(y.iter()))
            .map(|(l, (xi, yi))| l * (xi - yi))
            .sum::<f64>();
        rhs += tr.sigma * geometry::bregman(reg, &tr.x, &tr.ztilde)?;
        rhs -= tr.v_final * geometry::bregman(reg, y, &tr.z)?;
    }
    Ok(rhs - lhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Regularizer;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform(k: usize) -> Vec<f64> {
        vec![1.0 / k as f64; k]
    }

    #[test]
    fn first_round_is_pure_investment() {
        let reg = Regularizer::TsallisHalf(3);
        let x0 = uniform(3);
        let mut led = LedgerState::new(reg, AllocationRule::Greedy, &x0).unwrap();
        let a = led.open_round(1, 2.5).unwrap();
        assert_eq!(a.b, 2.5);
        assert!(a.spends.is_empty());
        // dual argument is grad psi(x0) exactly
        let g = geometry::psi_grad(reg, &x0).unwrap();
        for (d, e) in a.dual_arg.coords().iter().zip(g.coords()) {
            assert!((d - e).abs() < 1e-12);
        }
        assert_eq!(led.invested(), 2.5);
    }

    #[test]
    fn greedy_spends_oldest_first() {
        let reg = Regularizer::TsallisHalf(2);
        let x0 = uniform(2);
        let mut led = LedgerState::new(reg, AllocationRule::Greedy, &x0).unwrap();
        led.open_round(1, 1.0).unwrap();
        led.open_round(2, 1.0).unwrap();
        led.settle_feedback(1, &[0.6, 0.4]).unwrap();
        led.settle_feedback(2, &[0.3, 0.7]).unwrap();
        let a = led.open_round(3, 1.5).unwrap();
        assert_eq!(a.spends, vec![(1, 1.0), (2, 0.5)]);
        assert_eq!(a.b, 0.0);
        assert!(a.exactness_residual() <= 1e-12);
        // round 1 exhausted, round 2 half left
        assert_eq!(led.entry(1).unwrap().v_remaining, 0.0);
        assert!((led.entry(2).unwrap().v_remaining - 0.5).abs() < 1e-12);
    }

    #[test]
    fn proportional_spends_pro_rata() {
        let reg = Regularizer::TsallisHalf(2);
        let x0 = uniform(2);
        let mut led = LedgerState::new(reg, AllocationRule::Proportional, &x0).unwrap();
        led.open_round(1, 3.0).unwrap();
        led.open_round(2, 1.0).unwrap();
        led.settle_feedback(1, &[0.6, 0.4]).unwrap();
        led.settle_feedback(2, &[0.3, 0.7]).unwrap();
        let a = led.open_round(3, 2.0).unwrap();
        // v = 4, spend 2 -> half of each balance
        assert_eq!(a.b, 0.0);
        assert!((a.spends[0].1 - 1.5).abs() < 1e-12);
        assert!((a.spends[1].1 - 0.5).abs() < 1e-12);
        assert!((led.entry(1).unwrap().v_remaining - 1.5).abs() < 1e-12);
        assert!((led.entry(2).unwrap().v_remaining - 0.5).abs() < 1e-12);
        assert!(a.exactness_residual() <= 1e-12);
    }

    #[test]
    fn invested_equals_sum_of_balances_under_random_traffic() {
        let reg = Regularizer::TsallisHalf(3);
        let x0 = uniform(3);
        for rule in [AllocationRule::Greedy, AllocationRule::Proportional] {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            let mut led = LedgerState::new(reg, rule, &x0).unwrap();
            let mut pending: Vec<u64> = Vec::new();
            for t in 1..=500u64 {
                let sigma = rng.random_range(0.1..5.0);
                let a = led.open_round(t, sigma).unwrap();
                assert!(a.exactness_residual() <= 1e-10);
                pending.push(t);
                // randomly settle, skip, or hold pending rounds
                while !pending.is_empty() && rng.random_bool(0.6) {
                    let i = rng.random_range(0..pending.len());
                    let s = pending.swap_remove(i);
                    if rng.random_bool(0.1) {
                        led.mark_skipped(s).unwrap();
                    } else {
                        let p: f64 = rng.random_range(0.05..0.95);
                        led.settle_feedback(s, &[p / 2.0, p / 2.0, 1.0 - p]).unwrap();
                    }
                }
                let diff = (led.invested() - led.sum_balances()).abs();
                assert!(diff <= 1e-9 * led.invested().max(1.0), "round {t}: {diff}");
            }
        }
    }

    #[test]
    fn greedy_exactness_over_a_million_rounds() {
        let reg = Regularizer::TsallisHalf(2);
        let x0 = uniform(2);
        let mut led = LedgerState::new(reg, AllocationRule::Greedy, &x0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut worst: f64 = 0.0;
        for t in 1..=1_000_000u64 {
            let sigma = rng.random_range(0.5..2.0);
            let a = led.open_round(t, sigma).unwrap();
            worst = worst.max(a.exactness_residual());
            if t > 1 {
                led.settle_feedback(t - 1, &[0.5, 0.5]).unwrap();
            }
        }
        assert!(worst <= 1e-12, "worst residual {worst}");
    }

    #[test]
    fn skipped_balances_are_frozen() {
        let reg = Regularizer::TsallisHalf(2);
        let x0 = uniform(2);
        let mut led = LedgerState::new(reg, AllocationRule::Greedy, &x0).unwrap();
        led.open_round(1, 2.0).unwrap();
        led.mark_skipped(1).unwrap();
        assert_eq!(led.frozen_skipped(), 2.0);
        // nothing spendable: the next round invests its full budget
        let a = led.open_round(2, 1.0).unwrap();
        assert_eq!(a.b, 1.0);
        assert!(led.settle_feedback(1, &[0.5, 0.5]).is_err());
        assert_eq!(led.entry(1).unwrap().v_remaining, 2.0);
    }

    #[test]
    fn zero_delay_constant_scale_chains_to_previous_z() {
        // with feedback arriving every next round and constant sigma, the
        // whole budget is covered by the previous round: x_t = z_{t-1}
        let reg = Regularizer::TsallisHalf(2);
        let x0 = uniform(2);
        let mut led = LedgerState::new(reg, AllocationRule::Greedy, &x0).unwrap();
        let sigma = 3.0;
        let mut prev_z: Option<Vec<f64>> = None;
        for t in 1..=20u64 {
            let a = led.open_round(t, sigma).unwrap();
            let x = geometry::mirror_simplex(reg, &a.dual_arg).unwrap();
            if let Some(z) = &prev_z {
                for (xi, zi) in x.probs().iter().zip(z.iter()) {
                    assert!((xi - zi).abs() <= 1e-9);
                }
            }
            let (z, _zt) = geometry::omd_step(reg, &x, &[0.7, 0.1], sigma).unwrap();
            led.settle_feedback(t, z.probs()).unwrap();
            prev_z = Some(z.probs().to_vec());
        }
    }

    #[test]
    fn compose_action_limit_cases() {
        let reg = Regularizer::TsallisHalf(3);
        let x0 = uniform(3);
        let mut led = LedgerState::new(reg, AllocationRule::Greedy, &x0).unwrap();
        // all investment -> x = x0
        let a = led.open_round(1, 2.0).unwrap();
        let x = compose_action(reg, &a).unwrap();
        for (xi, x0i) in x.iter().zip(x0.iter()) {
            assert!((xi - x0i).abs() < 1e-10);
        }
        // single spend of the full budget -> x = z_s
        let z = vec![0.6, 0.3, 0.1];
        led.settle_feedback(1, &z).unwrap();
        let a = led.open_round(2, 2.0).unwrap();
        assert_eq!(a.b, 0.0);
        let x = compose_action(reg, &a).unwrap();
        for (xi, zi) in x.iter().zip(z.iter()) {
            assert!((xi - zi).abs() < 1e-9);
        }
    }

    #[test]
    fn composition_inequality_holds_for_random_allocations() {
        // sigma D(y, x_t) <= sum_s spend_s D(y, z_s) + b D(y, x0)
        let reg = Regularizer::TsallisHalf(5);
        let x0 = uniform(5);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut led = LedgerState::new(reg, AllocationRule::Greedy, &x0).unwrap();
        let mut zs: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
        for s in 1..=3u64 {
            led.open_round(s, rng.random_range(0.5..2.0)).unwrap();
            let mut z: Vec<f64> = (0..5).map(|_| rng.random_range(0.05..1.0)).collect();
            let sum: f64 = z.iter().sum();
            z.iter_mut().for_each(|v| *v /= sum);
            led.settle_feedback(s, &z).unwrap();
            zs.insert(s, z);
        }
        let sigma = 5.0;
        let a = led.open_round(4, sigma).unwrap();
        let x = compose_action(reg, &a).unwrap();
        for _ in 0..100 {
            let mut y: Vec<f64> = (0..5).map(|_| rng.random_range(0.01..1.0)).collect();
            let sum: f64 = y.iter().sum();
            y.iter_mut().for_each(|v| *v /= sum);
            let lhs = sigma * geometry::bregman(reg, &y, &x).unwrap();
            let mut rhs = a.b * geometry::bregman(reg, &y, &x0).unwrap();
            for (s, amt) in &a.spends {
                rhs += amt * geometry::bregman(reg, &y, &zs[s]).unwrap();
            }
            assert!(lhs <= rhs + 1e-8, "lhs {lhs} rhs {rhs}");
        }
    }

    #[test]
    fn audit_slack_is_nonnegative_on_a_small_run() {
        let reg = Regularizer::TsallisHalf(2);
        let x0 = uniform(2);
        let mut led = LedgerState::new(reg, AllocationRule::Greedy, &x0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut traces: Vec<RoundTrace> = Vec::new();
        for t in 1..=50u64 {
            let sigma = rng.random_range(1.0..4.0);
            let a = led.open_round(t, sigma).unwrap();
            let x = geometry::mirror_simplex(reg, &a.dual_arg).unwrap();
            let lhat = vec![rng.random_range(0.0..2.0), rng.random_range(0.0..2.0)];
            let (z, zt) = geometry::omd_step(reg, &x, &lhat, sigma).unwrap();
            led.settle_feedback(t, z.probs()).unwrap();
            traces.push(RoundTrace {
                sigma,
                v_final: 0.0, // filled below
                status: SavingStatus::Arrived,
                x: x.probs().to_vec(),
                z: z.probs().to_vec(),
                ztilde: zt,
                lhat,
            });
        }
        for (i, tr) in traces.iter_mut().enumerate() {
            tr.v_final = led.entry(i as u64 + 1).unwrap().v_remaining;
        }
        for y in [[1.0 - 1e-9, 1e-9], [1e-9, 1.0 - 1e-9], [0.5, 0.5]] {
            let slack = regret_audit(reg, &x0, &y, led.invested(), &traces).unwrap();
            assert!(slack >= -1e-6, "slack {slack}");
        }
    }
}
