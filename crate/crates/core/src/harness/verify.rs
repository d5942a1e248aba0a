//! Property suite behind the `verify` CLI subcommand: every cross-module
//! invariant evaluated with fixed seeds, reporting worst observed slack.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ExperimentConfig;
use super::run::run_single;
use crate::algorithms::{loss_estimate, BoloPolicy, MabPolicy, MabVariant};
use crate::environment::{ActionChoice, DelaySchedule, Environment, LossModel};
use crate::geometry::{self, DualPoint, Regularizer};
use crate::ledger::{AllocationRule, LedgerState, SavingStatus};

#[derive(Debug, Clone)]
pub struct PropertyResult {
    pub name: &'static str,
    pub pass: bool,
    /// Worst observed slack or error, property-specific; more positive is
    /// safer for inequality checks, smaller is better for error checks.
    pub worst: f64,
    pub detail: String,
}

pub struct VerifyReport {
    pub results: Vec<PropertyResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.pass)
    }
}

type Property = fn() -> PropertyResult;

const PROPERTIES: &[(&str, Property)] = &[
    ("mirror-round-trip", prop_mirror_round_trip),
    ("bregman-duality", prop_bregman_duality),
    ("composition-bound", prop_composition_bound),
    ("regret-audit", prop_regret_audit),
    ("ledger-identity", prop_ledger_identity),
    ("allocation-exactness", prop_allocation_exactness),
    ("greedy-optimality", prop_greedy_optimality),
    ("greedy-decomposition", prop_greedy_decomposition),
    ("mab-estimator-unbiased", prop_mab_estimator),
    ("bolo-estimator-unbiased", prop_bolo_estimator),
    ("tsallis-immediate-cost", prop_tsallis_immediate_cost),
    ("sflbinf-safety", prop_sflbinf_safety),
    ("sftinf-skip-budget", prop_sftinf_skip_budget),
    ("bolo-clamp", prop_bolo_clamp),
    ("bolo-containment", prop_bolo_containment),
    ("delay-summation", prop_delay_summation),
    ("release-conservation", prop_release_conservation),
    ("run-determinism", prop_run_determinism),
];

pub fn property_names() -> Vec<&'static str> {
    PROPERTIES.iter().map(|(n, _)| *n).collect()
}

pub fn verify(filter: Option<&str>) -> VerifyReport {
    let results = PROPERTIES
        .iter()
        .filter(|(name, _)| filter.map(|f| name.contains(f)).unwrap_or(true))
        .map(|(_, f)| f())
        .collect();
    VerifyReport { results }
}

fn random_simplex(rng: &mut ChaCha8Rng, k: usize, floor: f64) -> Vec<f64> {
    let mut x: Vec<f64> = (0..k).map(|_| rng.random_range(floor..1.0)).collect();
    let s: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= s);
    x
}

fn prop_mirror_round_trip() -> PropertyResult {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        for reg in [
            Regularizer::TsallisHalf(4),
            Regularizer::LogBarrierSimplex(4),
            Regularizer::NegEntropy(4),
        ] {
            let x = random_simplex(&mut rng, 4, 1e-4);
            let g = geometry::psi_grad(reg, &x).unwrap();
            let back = geometry::mirror_simplex(reg, &g).unwrap();
            for (a, b) in x.iter().zip(back.probs()) {
                worst = worst.max((a - b).abs());
            }
        }
        for reg in [Regularizer::HypercubeBarrier(3), Regularizer::BallBarrier(3)] {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-0.57..0.57)).collect();
            let g = geometry::psi_grad(reg, &x).unwrap();
            let back = geometry::mirror_unconstrained(reg, &g).unwrap();
            for (a, b) in x.iter().zip(back.iter()) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    PropertyResult {
        name: "mirror-round-trip",
        pass: worst <= 1e-9,
        worst,
        detail: format!("max |x - mirror(grad(x))| = {worst:.3e}"),
    }
}

fn prop_bregman_duality() -> PropertyResult {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut worst: f64 = 0.0;
    for reg in [Regularizer::TsallisHalf(3), Regularizer::LogBarrierSimplex(3)] {
        for _ in 0..200 {
            let x = random_simplex(&mut rng, 3, 0.02);
            let y = random_simplex(&mut rng, 3, 0.02);
            let d = geometry::bregman(reg, &y, &x).unwrap();
            let conj = |theta: &DualPoint| -> f64 {
                let p = geometry::mirror_unconstrained(reg, theta).unwrap();
                let inner: f64 = theta.coords().iter().zip(p.iter()).map(|(a, b)| a * b).sum();
                inner - geometry::psi_value(reg, &p).unwrap()
            };
            let gx = geometry::psi_grad(reg, &x).unwrap();
            let gy = geometry::psi_grad(reg, &y).unwrap();
            let d_star = conj(&gx) - conj(&gy)
                - y.iter()
                    .zip(gx.coords().iter().zip(gy.coords().iter()))
                    .map(|(yi, (a, b))| yi * (a - b))
                    .sum::<f64>();
            worst = worst.max((d - d_star).abs());
        }
    }
    PropertyResult {
        name: "bregman-duality",
        pass: worst <= 1e-8,
        worst,
        detail: format!("max |D - D*| = {worst:.3e}"),
    }
}

fn prop_composition_bound() -> PropertyResult {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut worst = f64::INFINITY;
    for reg in [Regularizer::TsallisHalf(4), Regularizer::LogBarrierSimplex(4)] {
        for _ in 0..1000 {
            let x0 = vec![0.25; 4];
            let mut led = LedgerState::new(reg, AllocationRule::Greedy, &x0).unwrap();
            let mut zs = Vec::new();
            let sources = rng.random_range(1..5u64);
            for s in 1..=sources {
                led.open_round(s, rng.random_range(0.2..2.0)).unwrap();
                let z = random_simplex(&mut rng, 4, 0.01);
                led.settle_feedback(s, &z).unwrap();
                zs.push(z);
            }
            let sigma = rng.random_range(0.5..4.0);
            let a = led.open_round(sources + 1, sigma).unwrap();
            let x = crate::ledger::compose_action(reg, &a).unwrap();
            for _ in 0..100 {
                let y = random_simplex(&mut rng, 4, 0.01);
                let lhs = sigma * geometry::bregman(reg, &y, &x).unwrap();
                let mut rhs = a.b * geometry::bregman(reg, &y, &x0).unwrap();
                for (s, amt) in &a.spends {
                    rhs += amt * geometry::bregman(reg, &y, &zs[(*s - 1) as usize]).unwrap();
                }
                worst = worst.min(rhs - lhs);
            }
        }
    }
    PropertyResult {
        name: "composition-bound",
        pass: worst >= -1e-8,
        worst,
        detail: format!("min composition slack = {worst:.3e}"),
    }
}

fn delayed_policy_run(
    variant: MabVariant,
    k: usize,
    t: u64,
    max_delay: u64,
    seed: u64,
    model: &LossModel,
) -> (MabPolicy, Environment) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let delays: Vec<u64> = (0..t).map(|_| rng.random_range(0..=max_delay)).collect();
    let mut env = Environment::new(
        model,
        &DelaySchedule::PerRound { delays },
        t,
        seed ^ 0xABCD,
    )
    .unwrap();
    let mut policy = MabPolicy::new(variant, k, t, AllocationRule::Greedy, None, seed).unwrap();
    for round in 1..=t {
        let events = env.release(round);
        policy.ingest(&events).unwrap();
        let (_, arm) = policy.decide(round).unwrap();
        env.play(round, &ActionChoice::Arm(arm)).unwrap();
    }
    (policy, env)
}

fn prop_regret_audit() -> PropertyResult {
    let mut worst = f64::INFINITY;
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    for trial in 0..50u64 {
        let k = rng.random_range(2..=8usize);
        let t = rng.random_range(50..=500u64);
        let means: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0)).collect();
        let model = LossModel::Bernoulli { means };
        let (policy, _env) = delayed_policy_run(
            MabVariant::Tinf { prefactor: 1.0 },
            k,
            t,
            50,
            1000 + trial,
            &model,
        );
        let traces = policy.audit_traces();
        let b = policy.invested();
        for _ in 0..100 {
            let y = random_simplex(&mut rng, k, 1e-6);
            let slack =
                crate::ledger::regret_audit(policy.regularizer(), policy.x0(), &y, b, &traces)
                    .unwrap();
            worst = worst.min(slack);
        }
    }
    PropertyResult {
        name: "regret-audit",
        pass: worst >= -1e-6,
        worst,
        detail: format!("min audit slack = {worst:.3e}"),
    }
}

fn prop_ledger_identity() -> PropertyResult {
    let mut worst: f64 = 0.0;
    for (variant, mult) in [
        (MabVariant::Tinf { prefactor: 1.0 }, 1.0),
        (MabVariant::Sflbinf, 5.0),
    ] {
        let base: Vec<Vec<f64>> = {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            (0..400)
                .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect()
        };
        let model = if mult == 1.0 {
            LossModel::Bernoulli {
                means: vec![0.2, 0.5, 0.8],
            }
        } else {
            LossModel::ScaleFree {
                base,
                multiplier: mult,
            }
        };
        let (policy, _env) = delayed_policy_run(variant, 3, 400, 20, 55, &model);
        let led = policy.ledger();
        let diff = (led.invested() - led.sum_balances()).abs()
            / led.invested().max(1.0);
        worst = worst.max(diff);
    }
    PropertyResult {
        name: "ledger-identity",
        pass: worst <= 1e-9,
        worst,
        detail: format!("max rel |B - sum(v)| = {worst:.3e}"),
    }
}

fn prop_allocation_exactness() -> PropertyResult {
    let reg = Regularizer::TsallisHalf(2);
    let x0 = vec![0.5, 0.5];
    let mut worst: f64 = 0.0;
    for rule in [AllocationRule::Greedy, AllocationRule::Proportional] {
        let mut led = LedgerState::new(reg, rule, &x0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for t in 1..=100_000u64 {
            let a = led.open_round(t, rng.random_range(0.1..3.0)).unwrap();
            worst = worst.max(a.exactness_residual());
            if t > 2 && rng.random_bool(0.9) {
                let s = t - 2;
                if led.entry(s).map(|e| e.status == SavingStatus::Missing) == Some(true) {
                    led.settle_feedback(s, &[0.4, 0.6]).unwrap();
                }
            }
        }
    }
    PropertyResult {
        name: "allocation-exactness",
        pass: worst <= 1e-12,
        worst,
        detail: format!("max |b + spends - sigma| = {worst:.3e}"),
    }
}

fn prop_greedy_optimality() -> PropertyResult {
    let reg = Regularizer::TsallisHalf(2);
    let x0 = vec![0.5, 0.5];
    let mut led = LedgerState::new(reg, AllocationRule::Greedy, &x0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    let mut pass = true;
    let mut worst: f64 = 0.0;
    for t in 1..=5000u64 {
        let a = led.open_round(t, rng.random_range(0.1..3.0)).unwrap();
        if a.b > 0.0 {
            // investing while savings remain would violate minimality
            worst = worst.max(led.spendable_total());
            if led.spendable_total() > 1e-12 {
                pass = false;
            }
        }
        if t > 1 && rng.random_bool(0.5) {
            if led.entry(t - 1).map(|e| e.status == SavingStatus::Missing) == Some(true) {
                led.settle_feedback(t - 1, &[0.4, 0.6]).unwrap();
            }
        }
    }
    PropertyResult {
        name: "greedy-optimality",
        pass,
        worst,
        detail: format!("max spendable while investing = {worst:.3e}"),
    }
}

fn prop_greedy_decomposition() -> PropertyResult {
    let mut worst: f64 = 0.0;
    for seed in 0..10u64 {
        let model = LossModel::Bernoulli {
            means: vec![0.3, 0.6, 0.9],
        };
        let (policy, env) = delayed_policy_run(
            MabVariant::Tinf { prefactor: 1.0 },
            3,
            300,
            30,
            2000 + seed,
            &model,
        );
        let delays = env.realized_delays();
        let t0 = policy
            .records()
            .filter(|(_, r)| r.investment > 0.0)
            .map(|(t, _)| *t)
            .max()
            .unwrap();
        let mut expected = 0.0;
        for (t, r) in policy.records() {
            if *t == t0 || (*t < t0 && *t + delays[(*t - 1) as usize] >= t0) {
                expected += r.sigma;
            }
        }
        let rel = (policy.invested() - expected).abs() / expected.max(1.0);
        worst = worst.max(rel);
    }
    PropertyResult {
        name: "greedy-decomposition",
        pass: worst <= 1e-9,
        worst,
        detail: format!("max rel |B - decomposition| = {worst:.3e}"),
    }
}

fn prop_mab_estimator() -> PropertyResult {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let k = rng.random_range(2..=8usize);
        let x = random_simplex(&mut rng, k, 1e-3);
        let l: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0)).collect();
        // closed-form expectation of the importance estimator coordinate a:
        // x_a * (l_a / x_a) + (1 - x_a) * 0
        for a in 0..k {
            let expect = x[a] * (l[a] / x[a]);
            worst = worst.max((expect - l[a]).abs());
        }
    }
    PropertyResult {
        name: "mab-estimator-unbiased",
        pass: worst <= 1e-12,
        worst,
        detail: format!("max |E[est] - l| = {worst:.3e}"),
    }
}

fn prop_bolo_estimator() -> PropertyResult {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=5usize);
        let reg = Regularizer::HypercubeBarrier(n);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-0.8..0.8)).collect();
        let (ev, evec) = geometry::barrier_hessian_eigensystem(reg, &x).unwrap();
        let mut l: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm1: f64 = l.iter().map(|v| v.abs()).sum();
        if norm1 > 1.0 {
            l.iter_mut().for_each(|v| *v /= norm1);
        }
        let mut mean = vec![0.0; n];
        for i in 0..n {
            for eps in [1.0, -1.0] {
                let a: Vec<f64> = x
                    .iter()
                    .zip(evec[i].iter())
                    .map(|(xi, e)| xi + eps * e / ev[i].sqrt())
                    .collect();
                let obs: f64 = l.iter().zip(a.iter()).map(|(li, ai)| li * ai).sum();
                let est = loss_estimate(obs, n, eps, ev[i], &evec[i]);
                for (m, v) in mean.iter_mut().zip(est.iter()) {
                    *m += v / (2.0 * n as f64);
                }
            }
        }
        for (m, li) in mean.iter().zip(l.iter()) {
            worst = worst.max((m - li).abs());
        }
    }
    PropertyResult {
        name: "bolo-estimator-unbiased",
        pass: worst <= 1e-12,
        worst,
        detail: format!("max |E[est] - l| = {worst:.3e}"),
    }
}

fn scale_free_base(t: u64, k: usize, seed: u64, nonneg: bool) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..t)
        .map(|_| {
            (0..k)
                .map(|_| {
                    if nonneg {
                        rng.random_range(0.0..1.0)
                    } else {
                        rng.random_range(-1.0..1.0)
                    }
                })
                .collect()
        })
        .collect()
}

fn prop_tsallis_immediate_cost() -> PropertyResult {
    let t = 1000u64;
    let model = LossModel::ScaleFree {
        base: scale_free_base(t, 4, 9, true),
        multiplier: 3.0,
    };
    let (policy, _env) = delayed_policy_run(MabVariant::Sftinf, 4, t, 10, 31, &model);
    let mut worst = f64::INFINITY;
    let traces = policy.audit_traces();
    for (i, (round, rec)) in policy.records().enumerate() {
        let tr = &traces[i];
        debug_assert_eq!(i as u64 + 1, *round);
        if tr.status != SavingStatus::Arrived {
            continue;
        }
        let l = rec.observed.unwrap();
        let xa = rec.x[rec.arm];
        let lhs = rec.sigma
            * geometry::bregman(policy.regularizer(), &tr.x, &tr.ztilde).unwrap();
        let rhs = l * l * xa.powf(-0.5) / rec.sigma;
        worst = worst.min(rhs - lhs);
    }
    PropertyResult {
        name: "tsallis-immediate-cost",
        pass: worst >= -1e-9,
        worst,
        detail: format!("min immediate-cost slack = {worst:.3e}"),
    }
}

fn prop_sflbinf_safety() -> PropertyResult {
    let t = 1000u64;
    let model = LossModel::ScaleFree {
        base: scale_free_base(t, 4, 13, false),
        multiplier: 7.0,
    };
    let (policy, _env) = delayed_policy_run(MabVariant::Sflbinf, 4, t, 10, 37, &model);
    let mut pass = true;
    let mut worst = f64::INFINITY;
    let traces = policy.audit_traces();
    for (i, (_round, rec)) in policy.records().enumerate() {
        let tr = &traces[i];
        if tr.status != SavingStatus::Arrived {
            continue;
        }
        let l = rec.observed.unwrap();
        if l < -0.5 * rec.sigma {
            pass = false;
        }
        let ratio_slack = 2.0 * rec.x[rec.arm] - tr.ztilde[rec.arm];
        worst = worst.min(ratio_slack);
        if ratio_slack < -1e-12 {
            pass = false;
        }
    }
    PropertyResult {
        name: "sflbinf-safety",
        pass,
        worst,
        detail: format!("min (2 x_A - ztilde_A) = {worst:.3e}"),
    }
}

fn prop_sftinf_skip_budget() -> PropertyResult {
    let t = 2000u64;
    let hidden_l = 100.0;
    let model = LossModel::ScaleFree {
        base: scale_free_base(t, 4, 17, true),
        multiplier: hidden_l,
    };
    let mut env = Environment::new(
        &model,
        &DelaySchedule::UniformConst { d: 20 },
        t,
        123,
    )
    .unwrap();
    let mut policy = MabPolicy::new(MabVariant::Sftinf, 4, t, AllocationRule::Greedy, None, 41)
        .unwrap();
    for round in 1..=t {
        let events = env.release(round);
        policy.ingest(&events).unwrap();
        let (_, arm) = policy.decide(round).unwrap();
        env.play(round, &ActionChoice::Arm(arm)).unwrap();
    }
    let budget = ((4.0 * hidden_l).log2().ceil() + 1.0) * (policy.max_backlog() as f64 + 1.0);
    let skips = policy.skip_count() as f64;
    PropertyResult {
        name: "sftinf-skip-budget",
        pass: skips <= budget,
        worst: budget - skips,
        detail: format!("skips {skips} <= budget {budget}"),
    }
}

fn bolo_run(t: u64, delay: u64, seed: u64) -> (BoloPolicy, Environment) {
    let n = 4usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vectors: Vec<Vec<f64>> = (0..t)
        .map(|_| {
            let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let s: f64 = v.iter().map(|x| x.abs()).sum();
            v.iter_mut().for_each(|x| *x /= s.max(1.0));
            v
        })
        .collect();
    let mut env = Environment::new(
        &LossModel::LinearSequence { vectors },
        &DelaySchedule::UniformConst { d: delay },
        t,
        seed,
    )
    .unwrap();
    let mut policy = BoloPolicy::new(
        Regularizer::HypercubeBarrier(n),
        t,
        AllocationRule::Greedy,
        seed,
    )
    .unwrap();
    for round in 1..=t {
        let events = env.release(round);
        policy.ingest(&events).unwrap();
        let (_, a) = policy.decide(round).unwrap();
        env.play(round, &ActionChoice::Point(a)).unwrap();
    }
    (policy, env)
}

fn prop_bolo_clamp() -> PropertyResult {
    let (policy, _) = bolo_run(500, 7, 61);
    let mut worst = f64::INFINITY;
    for (_, r) in policy.records() {
        worst = worst.min(r.sigma - 32.0);
    }
    PropertyResult {
        name: "bolo-clamp",
        pass: worst >= 0.0,
        worst,
        detail: format!("min (sigma - 8n) = {worst:.3e}"),
    }
}

fn prop_bolo_containment() -> PropertyResult {
    let mut worst = f64::INFINITY;
    for seed in 0..5u64 {
        let (policy, _) = bolo_run(2000, 5, 70 + seed);
        for (_, r) in policy.records() {
            for v in &r.action {
                worst = worst.min(1.0 - v.abs());
            }
        }
    }
    PropertyResult {
        name: "bolo-containment",
        pass: worst > 0.0,
        worst,
        detail: format!("min boundary margin = {worst:.3e}"),
    }
}

fn prop_delay_summation() -> PropertyResult {
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    let mut worst = f64::INFINITY;
    for _ in 0..500 {
        let len = rng.random_range(1..100);
        let xs: Vec<f64> = (0..len).map(|_| rng.random_range(0.0..10.0)).collect();
        let mut run = 0.0;
        let mut lhs = 0.0;
        for &x in &xs {
            run += x;
            lhs += x / (1.0 + run).sqrt();
        }
        worst = worst.min(2.0 * (1.0 + run).sqrt() - lhs);
    }
    PropertyResult {
        name: "delay-summation",
        pass: worst >= -1e-12,
        worst,
        detail: format!("min summation slack = {worst:.3e}"),
    }
}

fn prop_release_conservation() -> PropertyResult {
    let mut rng = ChaCha8Rng::seed_from_u64(109);
    let mut pass = true;
    for _ in 0..20 {
        let t = rng.random_range(10..200u64);
        let delays: Vec<u64> = (0..t).map(|_| rng.random_range(0..50)).collect();
        let model = LossModel::Bernoulli { means: vec![0.5, 0.5] };
        let mut env =
            Environment::new(&model, &DelaySchedule::PerRound { delays }, t, rng.random())
                .unwrap();
        let mut count = 0u64;
        for round in 1..=t {
            count += env.release(round).len() as u64;
            env.play(round, &ActionChoice::Arm(0)).unwrap();
        }
        count += env.drain().len() as u64;
        if count != t {
            pass = false;
        }
    }
    PropertyResult {
        name: "release-conservation",
        pass,
        worst: 0.0,
        detail: "every played round released exactly once".to_string(),
    }
}

fn prop_run_determinism() -> PropertyResult {
    let toml = r#"
runs = 1
master_seed = 5

[algorithm]
kind = "sflbinf"
dimension = 4
horizon = 200

[environment.loss]
kind = "bernoulli"
means = [0.1, 0.4, 0.6, 0.9]

[environment.delay]
kind = "geometric"
p = 0.2
"#;
    let cfg = ExperimentConfig::from_toml_str(toml).unwrap();
    let a = run_single(&cfg, 0).unwrap();
    let b = run_single(&cfg, 0).unwrap();
    let pass = a.rows == b.rows && a.regret == b.regret;
    PropertyResult {
        name: "run-determinism",
        pass,
        worst: 0.0,
        detail: "identical seed, identical record".to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_suite_passes() {
        let report = verify(None);
        for r in &report.results {
            assert!(r.pass, "{}: {} (worst {:.3e})", r.name, r.detail, r.worst);
        }
    }

    #[test]
    fn filter_selects_subset() {
        let report = verify(Some("bolo"));
        assert!(report.results.len() >= 2);
        assert!(report.results.iter().all(|r| r.name.contains("bolo")));
    }
}
