//! Seeded Monte-Carlo orchestration: one deterministic run per index,
//! merged in index order regardless of execution interleaving.

use std::sync::Mutex;

use serde::Serialize;
use thiserror::Error;

use super::config::{derive_seed, AlgorithmKind, ConfigError, ExperimentConfig};
use crate::algorithms::{vanilla_omd_run, BoloPolicy, MabPolicy, MabVariant, PolicyError};
use crate::algorithms::vanilla::VanillaError;
use crate::environment::{ActionChoice, Comparator, EnvError, Environment};
use crate::geometry::Regularizer;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("run {run}, round {round}: {source}")]
    Policy {
        run: u64,
        round: u64,
        source: PolicyError,
    },
    #[error("run {run}: {source}")]
    Env {
        run: u64,
        #[source]
        source: EnvError,
    },
    #[error("run {run}: {source}")]
    Vanilla {
        run: u64,
        #[source]
        source: VanillaError,
    },
}

/// FNV-1a over the little-endian bytes of the coordinates; compact per-round
/// fingerprint of the played distribution/point.
pub fn hash_point(x: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in x {
        for b in v.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRow {
    pub t: u64,
    pub x_hash: u64,
    /// Arm index for MAB; exploration direction for linear bandits, with the
    /// Rademacher sign folded in as +/-.
    pub action: String,
    pub observed: f64,
    pub sigma: f64,
    pub b: f64,
    pub b_total: f64,
    pub backlog: u64,
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run_index: u64,
    pub rows: Vec<RoundRow>,
    pub final_b: f64,
    pub frozen_skipped: f64,
    pub skip_count: u64,
    pub realized_delay: u64,
    /// Sum over rounds of (backlog+1) * observed^2, a scale-free diagnostic.
    pub weighted_loss_sq: f64,
    /// Cumulative regret against the hindsight comparator, one entry per round.
    pub regret: Vec<f64>,
    /// Full played actions, populated only when dump_actions is set.
    pub actions: Vec<Vec<f64>>,
}

impl RunRecord {
    pub fn final_regret(&self) -> f64 {
        self.regret.last().copied().unwrap_or(0.0)
    }
}

pub fn run_single(config: &ExperimentConfig, run_index: u64) -> Result<RunRecord, RunError> {
    run_single_in(config, run_index, std::path::Path::new("."))
}

/// As `run_single`, resolving CSV paths relative to `base_dir`.
pub fn run_single_in(
    config: &ExperimentConfig,
    run_index: u64,
    base_dir: &std::path::Path,
) -> Result<RunRecord, RunError> {
    let run_seed = derive_seed(config.master_seed, run_index);
    let policy_seed = derive_seed(run_seed, 0);
    let env_seed = derive_seed(run_seed, 1);
    let horizon = config.algorithm.horizon;
    let dim = config.algorithm.dimension;
    let model = config.environment.loss.resolve(base_dir)?;
    let schedule = config.environment.delay.resolve(base_dir)?;
    let mut env = Environment::new(&model, &schedule, horizon, env_seed)
        .map_err(|source| RunError::Env { run: run_index, source })?;
    let dump = config.output.dump_actions;

    let mut rows: Vec<RoundRow> = Vec::with_capacity(horizon as usize);
    let mut actions: Vec<Vec<f64>> = Vec::new();
    let mut incurred: Vec<f64> = Vec::with_capacity(horizon as usize);
    let record;

    match config.algorithm.kind {
        AlgorithmKind::Vanilla => {
            let reg = config
                .algorithm
                .regularizer
                .map(|r| r.build(dim))
                .unwrap_or(Regularizer::TsallisHalf(dim));
            let sigma = config.algorithm.sigma.expect("validated");
            let rec = vanilla_omd_run(reg, sigma, &mut env, policy_seed)
                .map_err(|source| RunError::Vanilla { run: run_index, source })?;
            for t in 1..=horizon {
                let i = (t - 1) as usize;
                rows.push(RoundRow {
                    t,
                    x_hash: hash_point(&rec.xs[i]),
                    action: rec.arms[i].to_string(),
                    observed: rec.losses[i],
                    sigma,
                    b: 0.0,
                    b_total: 0.0,
                    backlog: 0,
                    skipped: false,
                });
                incurred.push(rec.losses[i]);
                if dump {
                    actions.push(rec.xs[i].clone());
                }
            }
            let comparator = env.best_fixed_comparator().0;
            record = finish_record(
                run_index, rows, actions, incurred, &env, comparator, 0.0, 0.0, 0,
            );
        }
        AlgorithmKind::Bolo => {
            let reg = config
                .algorithm
                .regularizer
                .map(|r| r.build(dim))
                .unwrap_or(Regularizer::HypercubeBarrier(dim));
            let mut policy =
                BoloPolicy::new(reg, horizon, config.algorithm.allocation.into(), policy_seed)
                    .map_err(|source| RunError::Policy { run: run_index, round: 0, source })?;
            for t in 1..=horizon {
                let events = env.release(t);
                policy
                    .ingest(&events)
                    .map_err(|source| RunError::Policy { run: run_index, round: t, source })?;
                let (_x, a) = policy
                    .decide(t)
                    .map_err(|source| RunError::Policy { run: run_index, round: t, source })?;
                let loss = env
                    .play(t, &ActionChoice::Point(a.clone()))
                    .map_err(|source| RunError::Env { run: run_index, source })?;
                incurred.push(loss);
                if dump {
                    actions.push(a);
                }
            }
            env.drain();
            for (t, r) in policy.records() {
                rows.push(RoundRow {
                    t: *t,
                    x_hash: hash_point(&r.x),
                    action: format!(
                        "{}{}",
                        if r.rademacher > 0.0 { "+" } else { "-" },
                        r.direction
                    ),
                    observed: incurred[(*t - 1) as usize],
                    sigma: r.sigma,
                    b: r.investment,
                    b_total: 0.0,
                    backlog: r.backlog,
                    skipped: false,
                });
            }
            let mut b_running = 0.0;
            for row in rows.iter_mut() {
                b_running += row.b;
                row.b_total = b_running;
            }
            let comparator = if matches!(reg, Regularizer::BallBarrier(_)) {
                env.best_ball_comparator().0
            } else {
                env.best_fixed_comparator().0
            };
            record = finish_record(
                run_index,
                rows,
                actions,
                incurred,
                &env,
                comparator,
                policy.ledger().invested(),
                policy.ledger().frozen_skipped(),
                0,
            );
        }
        kind => {
            let variant = match kind {
                AlgorithmKind::ConstScale => {
                    MabVariant::ConstScale(config.algorithm.sigma.expect("validated"))
                }
                AlgorithmKind::Tinf => MabVariant::Tinf {
                    prefactor: config.algorithm.prefactor,
                },
                AlgorithmKind::Sftinf => MabVariant::Sftinf,
                AlgorithmKind::Sflbinf => MabVariant::Sflbinf,
                _ => unreachable!("handled above"),
            };
            let reg = config.algorithm.regularizer.map(|r| r.build(dim));
            let mut policy = MabPolicy::new(
                variant,
                dim,
                horizon,
                config.algorithm.allocation.into(),
                reg,
                policy_seed,
            )
            .map_err(|source| RunError::Policy { run: run_index, round: 0, source })?;
            for t in 1..=horizon {
                let events = env.release(t);
                policy
                    .ingest(&events)
                    .map_err(|source| RunError::Policy { run: run_index, round: t, source })?;
                let (x, arm) = policy
                    .decide(t)
                    .map_err(|source| RunError::Policy { run: run_index, round: t, source })?;
                let loss = env
                    .play(t, &ActionChoice::Arm(arm))
                    .map_err(|source| RunError::Env { run: run_index, source })?;
                incurred.push(loss);
                if dump {
                    actions.push(x);
                }
            }
            env.drain();
            for (t, r) in policy.records() {
                rows.push(RoundRow {
                    t: *t,
                    x_hash: hash_point(&r.x),
                    action: r.arm.to_string(),
                    observed: incurred[(*t - 1) as usize],
                    sigma: r.sigma,
                    b: r.investment,
                    b_total: 0.0,
                    backlog: r.backlog,
                    skipped: r.skipped,
                });
            }
            let mut b_running = 0.0;
            for row in rows.iter_mut() {
                b_running += row.b;
                row.b_total = b_running;
            }
            let comparator = env.best_fixed_comparator().0;
            record = finish_record(
                run_index,
                rows,
                actions,
                incurred,
                &env,
                comparator,
                policy.ledger().invested(),
                policy.ledger().frozen_skipped(),
                policy.skip_count(),
            );
        }
    }
    Ok(record)
}

#[allow(clippy::too_many_arguments)]
fn finish_record(
    run_index: u64,
    mut rows: Vec<RoundRow>,
    actions: Vec<Vec<f64>>,
    incurred: Vec<f64>,
    env: &Environment,
    comparator: Comparator,
    final_b: f64,
    frozen_skipped: f64,
    skip_count: u64,
) -> RunRecord {
    rows.sort_by_key(|r| r.t);
    let mut regret = Vec::with_capacity(rows.len());
    let mut cum = 0.0;
    for (i, loss) in incurred.iter().enumerate() {
        let t = (i + 1) as u64;
        cum += loss - comparator_loss(env, &comparator, t);
        regret.push(cum);
    }
    let mut weighted = 0.0;
    for row in &rows {
        weighted += (row.backlog as f64 + 1.0) * row.observed * row.observed;
    }
    RunRecord {
        run_index,
        rows,
        final_b,
        frozen_skipped,
        skip_count,
        realized_delay: env.total_delay(),
        weighted_loss_sq: weighted,
        regret,
        actions,
    }
}

fn comparator_loss(env: &Environment, c: &Comparator, t: u64) -> f64 {
    env.comparator_loss(c, t)
}

#[derive(Debug, Clone, Serialize)]
pub struct AggregateStats {
    pub runs: u64,
    pub mean_curve: Vec<f64>,
    pub final_mean: f64,
    pub final_stderr: f64,
    pub stderr_curve: Vec<f64>,
    pub mean_final_b: f64,
    pub min_final_b: f64,
    pub max_final_b: f64,
    pub total_skips: u64,
    pub mean_realized_delay: f64,
}

pub fn aggregate(records: &[RunRecord]) -> AggregateStats {
    let runs = records.len() as u64;
    let t = records.first().map(|r| r.regret.len()).unwrap_or(0);
    let mut mean_curve = vec![0.0; t];
    let mut stderr_curve = vec![0.0; t];
    for i in 0..t {
        let vals: Vec<f64> = records.iter().map(|r| r.regret[i]).collect();
        let m = vals.iter().sum::<f64>() / runs as f64;
        mean_curve[i] = m;
        if runs > 1 {
            let var =
                vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (runs as f64 - 1.0);
            stderr_curve[i] = (var / runs as f64).sqrt();
        }
    }
    let final_mean = mean_curve.last().copied().unwrap_or(0.0);
    let final_stderr = stderr_curve.last().copied().unwrap_or(0.0);
    let bs: Vec<f64> = records.iter().map(|r| r.final_b).collect();
    AggregateStats {
        runs,
        final_mean,
        final_stderr,
        mean_final_b: bs.iter().sum::<f64>() / runs.max(1) as f64,
        min_final_b: if bs.is_empty() {
            0.0
        } else {
            bs.iter().cloned().fold(f64::INFINITY, f64::min)
        },
        max_final_b: bs.iter().cloned().fold(0.0, f64::max),
        total_skips: records.iter().map(|r| r.skip_count).sum(),
        mean_realized_delay: records.iter().map(|r| r.realized_delay as f64).sum::<f64>()
            / runs.max(1) as f64,
        mean_curve,
        stderr_curve,
    }
}

/// Worker-thread cap: BANKER_THREADS, where 0 or unset means auto.
fn thread_cap() -> usize {
    let auto = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    match std::env::var("BANKER_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        Some(0) | None => auto,
        Some(n) => n.min(auto * 4),
    }
}

/// Run all Monte-Carlo repetitions, in parallel when allowed; results are
/// always ordered by run index so aggregation is deterministic.
pub fn run_monte_carlo(
    config: &ExperimentConfig,
    base_dir: &std::path::Path,
) -> Result<Vec<RunRecord>, RunError> {
    let runs = config.runs;
    let threads = thread_cap().min(runs as usize).max(1);
    if threads == 1 {
        return (0..runs).map(|i| run_single_in(config, i, base_dir)).collect();
    }
    let next = Mutex::new(0u64);
    let results: Mutex<Vec<Option<Result<RunRecord, RunError>>>> =
        Mutex::new((0..runs).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = {
                    let mut n = next.lock().unwrap();
                    if *n >= runs {
                        break;
                    }
                    let i = *n;
                    *n += 1;
                    i
                };
                let r = run_single_in(config, i, base_dir);
                results.lock().unwrap()[i as usize] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every index claimed"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ExperimentConfig;

    fn small_config(kind: &str) -> ExperimentConfig {
        let toml = format!(
            r#"
runs = 2
master_seed = 7

[algorithm]
kind = "{kind}"
dimension = 3
horizon = 50
sigma = 10.0

[environment.loss]
kind = "bernoulli"
means = [0.2, 0.5, 0.8]

[environment.delay]
kind = "uniform_const"
d = 4
"#
        );
        ExperimentConfig::from_toml_str(&toml).unwrap()
    }

    #[test]
    fn run_is_deterministic() {
        for kind in ["tinf", "sftinf", "sflbinf", "const_scale"] {
            let cfg = small_config(kind);
            let a = run_single(&cfg, 0).unwrap();
            let b = run_single(&cfg, 0).unwrap();
            assert_eq!(a.rows, b.rows, "{kind}");
            assert_eq!(a.regret, b.regret);
            let c = run_single(&cfg, 1).unwrap();
            assert_ne!(a.rows, c.rows);
        }
    }

    #[test]
    fn b_total_is_nondecreasing() {
        let cfg = small_config("tinf");
        let rec = run_single(&cfg, 0).unwrap();
        assert_eq!(rec.rows.len(), 50);
        let mut prev = 0.0;
        for row in &rec.rows {
            assert!(row.b_total >= prev - 1e-12);
            prev = row.b_total;
        }
        assert!((rec.final_b - prev).abs() <= 1e-9 * prev.max(1.0));
    }

    #[test]
    fn monte_carlo_matches_sequential() {
        let cfg = small_config("tinf");
        let recs = run_monte_carlo(&cfg, std::path::Path::new(".")).unwrap();
        assert_eq!(recs.len(), 2);
        for (i, r) in recs.iter().enumerate() {
            let solo = run_single(&cfg, i as u64).unwrap();
            assert_eq!(r.rows, solo.rows);
        }
    }

    #[test]
    fn zero_horizon_yields_empty_record() {
        let mut cfg = small_config("tinf");
        cfg.algorithm.horizon = 0;
        let rec = run_single(&cfg, 0).unwrap();
        assert!(rec.rows.is_empty());
        assert!(rec.regret.is_empty());
    }
}
