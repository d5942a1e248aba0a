//! Oblivious adversarial environments with delayed feedback delivery.
//!
//! Losses and delays are materialized up front from their specs; the policy
//! only ever sees released `FeedbackEvent`s. Feedback played at round t with
//! delay d becomes available at the start of round t + d + 1, so zero delay
//! reproduces plain next-round availability.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("round {got} played out of order, expected {expected}")]
    Order { got: u64, expected: u64 },
    #[error("action kind does not match the loss model")]
    ActionKind,
    #[error("{0}")]
    Shape(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad field {field} in {path}: {msg}")]
    Parse {
        path: String,
        field: String,
        msg: String,
    },
}

/// Feedback for one played round, exposing only what the protocol reveals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackEvent {
    pub round: u64,
    pub observed_loss: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DelaySchedule {
    Zero,
    UniformConst { d: u64 },
    PerRound { delays: Vec<u64> },
    /// Realized delay is indexed by the played arm: d_t = delta[t][A_t].
    ArmDependent { delta: Vec<Vec<u64>> },
    /// I.i.d. geometric (failures before success), truncated at 10 * T.
    Geometric { p: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossModel {
    /// Fixed T x K matrix with entries in [0, 1].
    Matrix { values: Vec<Vec<f64>> },
    /// Per-arm Bernoulli draws, materialized at environment construction.
    Bernoulli { means: Vec<f64> },
    /// Base matrix in [-1, 1] scaled by a hidden multiplier the policy never
    /// sees; only released losses leak information about it.
    ScaleFree { base: Vec<Vec<f64>>, multiplier: f64 },
    /// Loss vectors for linear bandits; the per-round action cost is an
    /// inner product.
    LinearSequence { vectors: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ActionChoice {
    Arm(usize),
    Point(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Comparator {
    Arm(usize),
    Point(Vec<f64>),
}

enum DelayRealization {
    PerRound(Vec<u64>),
    ArmDependent(Vec<Vec<u64>>),
}

pub struct Environment {
    horizon: u64,
    /// Realized loss rows, oracle-side only.
    losses: Vec<Vec<f64>>,
    linear: bool,
    delays: DelayRealization,
    pending: BTreeMap<(u64, u64), f64>,
    next_play: u64,
    realized_delays: Vec<u64>,
}

fn geometric_sample(rng: &mut ChaCha8Rng, p: f64, cap: u64) -> u64 {
    let u: f64 = rng.random();
    let d = (u.ln() / (1.0 - p).ln()).floor();
    if !d.is_finite() || d < 0.0 {
        0
    } else {
        (d as u64).min(cap)
    }
}

impl Environment {
    /// Materialize an environment. `seed` drives the random loss and delay
    /// realizations; deterministic specs ignore it.
    pub fn new(
        model: &LossModel,
        schedule: &DelaySchedule,
        horizon: u64,
        seed: u64,
    ) -> Result<Self, EnvError> {
        let t = horizon as usize;
        let (losses, linear): (Vec<Vec<f64>>, bool) = match model {
            LossModel::Matrix { values } => {
                if values.len() < t {
                    return Err(EnvError::Shape(format!(
                        "loss matrix has {} rows, horizon is {horizon}",
                        values.len()
                    )));
                }
                if values
                    .iter()
                    .take(t)
                    .any(|row| row.iter().any(|&v| !(0.0..=1.0).contains(&v)))
                {
                    return Err(EnvError::Shape("matrix loss outside [0,1]".into()));
                }
                (values[..t].to_vec(), false)
            }
            LossModel::Bernoulli { means } => {
                if means.iter().any(|&m| !(0.0..=1.0).contains(&m)) {
                    return Err(EnvError::Shape("Bernoulli mean outside [0,1]".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let rows = (0..t)
                    .map(|_| {
                        means
                            .iter()
                            .map(|&m| if rng.random::<f64>() < m { 1.0 } else { 0.0 })
                            .collect()
                    })
                    .collect();
                (rows, false)
            }
            LossModel::ScaleFree { base, multiplier } => {
                if base.len() < t {
                    return Err(EnvError::Shape(format!(
                        "base matrix has {} rows, horizon is {horizon}",
                        base.len()
                    )));
                }
                if base
                    .iter()
                    .take(t)
                    .any(|row| row.iter().any(|&v| !(-1.0..=1.0).contains(&v)))
                {
                    return Err(EnvError::Shape("scale-free base outside [-1,1]".into()));
                }
                (
                    base[..t]
                        .iter()
                        .map(|row| row.iter().map(|v| v * multiplier).collect())
                        .collect(),
                    false,
                )
            }
            LossModel::LinearSequence { vectors } => {
                if vectors.len() < t {
                    return Err(EnvError::Shape(format!(
                        "loss sequence has {} rows, horizon is {horizon}",
                        vectors.len()
                    )));
                }
                // hypercube loss-set constraint: |<l,x>| <= 1 over the box
                if vectors
                    .iter()
                    .take(t)
                    .any(|row| row.iter().map(|v| v.abs()).sum::<f64>() > 1.0 + 1e-12)
                {
                    return Err(EnvError::Shape("linear loss 1-norm exceeds 1".into()));
                }
                (vectors[..t].to_vec(), true)
            }
        };
        let delays = match schedule {
            DelaySchedule::Zero => DelayRealization::PerRound(vec![0; t]),
            DelaySchedule::UniformConst { d } => DelayRealization::PerRound(vec![*d; t]),
            DelaySchedule::PerRound { delays } => {
                if delays.len() < t {
                    return Err(EnvError::Shape(format!(
                        "delay vector has {} rows, horizon is {horizon}",
                        delays.len()
                    )));
                }
                DelayRealization::PerRound(delays[..t].to_vec())
            }
            DelaySchedule::ArmDependent { delta } => {
                if delta.len() < t {
                    return Err(EnvError::Shape(format!(
                        "delay matrix has {} rows, horizon is {horizon}",
                        delta.len()
                    )));
                }
                DelayRealization::ArmDependent(delta[..t].to_vec())
            }
            DelaySchedule::Geometric { p } => {
                if !(*p > 0.0 && *p <= 1.0) {
                    return Err(EnvError::Shape("geometric p must be in (0,1]".into()));
                }
                // separate stream from the loss realization
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9E37_79B9_7F4A_7C15);
                let cap = 10 * horizon;
                DelayRealization::PerRound(
                    (0..t).map(|_| geometric_sample(&mut rng, *p, cap)).collect(),
                )
            }
        };
        Ok(Environment {
            horizon,
            losses,
            linear,
            delays,
            pending: BTreeMap::new(),
            next_play: 1,
            realized_delays: Vec::with_capacity(t),
        })
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn is_linear(&self) -> bool {
        self.linear
    }

    /// Release every event scheduled at or before round `t`, ascending by
    /// played round.
    pub fn release(&mut self, t: u64) -> Vec<FeedbackEvent> {
        let mut out: Vec<FeedbackEvent> = Vec::new();
        let keys: Vec<(u64, u64)> = self
            .pending
            .range(..=(t, u64::MAX))
            .map(|(k, _)| *k)
            .collect();
        for k in keys {
            let loss = self.pending.remove(&k).expect("key just listed");
            out.push(FeedbackEvent {
                round: k.1,
                observed_loss: loss,
            });
        }
        out.sort_by_key(|e| e.round);
        out
    }

    /// Play round `t`. Returns the observed loss (oracle-side convenience;
    /// the policy must wait for release).
    pub fn play(&mut self, t: u64, action: &ActionChoice) -> Result<f64, EnvError> {
        if t != self.next_play {
            return Err(EnvError::Order {
                got: t,
                expected: self.next_play,
            });
        }
        let row = &self.losses[(t - 1) as usize];
        let loss = match (action, self.linear) {
            (ActionChoice::Arm(a), false) => {
                if *a >= row.len() {
                    return Err(EnvError::Shape(format!("arm {a} out of range")));
                }
                row[*a]
            }
            (ActionChoice::Point(p), true) => {
                row.iter().zip(p.iter()).map(|(l, x)| l * x).sum()
            }
            _ => return Err(EnvError::ActionKind),
        };
        let d = match &self.delays {
            DelayRealization::PerRound(v) => v[(t - 1) as usize],
            DelayRealization::ArmDependent(m) => match action {
                ActionChoice::Arm(a) => m[(t - 1) as usize][*a],
                _ => return Err(EnvError::ActionKind),
            },
        };
        self.realized_delays.push(d);
        self.pending.insert((t + d + 1, t), loss);
        self.next_play += 1;
        Ok(loss)
    }

    /// Everything still in flight after the horizon; diagnostics only.
    pub fn drain(&mut self) -> Vec<FeedbackEvent> {
        self.release(u64::MAX)
    }

    pub fn realized_delays(&self) -> &[u64] {
        &self.realized_delays
    }

    pub fn total_delay(&self) -> u64 {
        self.realized_delays.iter().sum()
    }

    /// Realized loss rows; oracle-side only, never handed to policies.
    pub fn realized_losses(&self) -> &[Vec<f64>] {
        &self.losses
    }

    /// Best fixed comparator in hindsight and its total loss. Ties between
    /// arms break toward the smallest index.
    pub fn best_fixed_comparator(&self) -> (Comparator, f64) {
        if !self.linear {
            let k = self.losses.first().map(|r| r.len()).unwrap_or(0);
            let mut best = (0usize, f64::INFINITY);
            for a in 0..k {
                let total: f64 = self.losses.iter().map(|r| r[a]).sum();
                if total < best.1 {
                    best = (a, total);
                }
            }
            if k == 0 {
                return (Comparator::Arm(0), 0.0);
            }
            (Comparator::Arm(best.0), best.1)
        } else {
            let n = self.losses.first().map(|r| r.len()).unwrap_or(0);
            let mut sums = vec![0.0; n];
            for row in &self.losses {
                for (s, v) in sums.iter_mut().zip(row.iter()) {
                    *s += v;
                }
            }
            // hypercube vertex: oppose the sign of each summed coordinate
            let y: Vec<f64> = sums
                .iter()
                .map(|&s| if s > 0.0 { -1.0 } else { 1.0 })
                .collect();
            let box_total: f64 = sums.iter().zip(y.iter()).map(|(s, yi)| s * yi).sum();
            (Comparator::Point(y), box_total)
        }
    }

    /// Ball-constrained linear comparator: y = -sum(l)/|sum(l)|.
    pub fn best_ball_comparator(&self) -> (Comparator, f64) {
        let n = self.losses.first().map(|r| r.len()).unwrap_or(0);
        let mut sums = vec![0.0; n];
        for row in &self.losses {
            for (s, v) in sums.iter_mut().zip(row.iter()) {
                *s += v;
            }
        }
        let norm: f64 = sums.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return (Comparator::Point(vec![0.0; n]), 0.0);
        }
        let y: Vec<f64> = sums.iter().map(|s| -s / norm).collect();
        (Comparator::Point(y), -norm)
    }

    /// Loss the comparator would have suffered at round t (1-based).
    pub fn comparator_loss(&self, comparator: &Comparator, t: u64) -> f64 {
        let row = &self.losses[(t - 1) as usize];
        match comparator {
            Comparator::Arm(a) => row[*a],
            Comparator::Point(y) => row.iter().zip(y.iter()).map(|(l, yi)| l * yi).sum(),
        }
    }
}

/// Loss matrix loader; header `t,arm_1,...,arm_K`, rows in round order.
pub fn load_loss_matrix_csv(path: &Path) -> Result<Vec<Vec<f64>>, EnvError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let mut row = Vec::with_capacity(rec.len().saturating_sub(1));
        for field in rec.iter().skip(1) {
            row.push(field.trim().parse::<f64>().map_err(|e| EnvError::Parse {
                path: path.display().to_string(),
                field: field.to_string(),
                msg: e.to_string(),
            })?);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Delay vector loader; header `t,d`.
pub fn load_delay_vector_csv(path: &Path) -> Result<Vec<u64>, EnvError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let field = rec.get(1).unwrap_or("");
        out.push(field.trim().parse::<u64>().map_err(|e| EnvError::Parse {
            path: path.display().to_string(),
            field: field.to_string(),
            msg: e.to_string(),
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn matrix_env(values: Vec<Vec<f64>>, schedule: DelaySchedule) -> Environment {
        let horizon = values.len() as u64;
        Environment::new(&LossModel::Matrix { values }, &schedule, horizon, 0).unwrap()
    }

    #[test]
    fn zero_delay_releases_next_round() {
        let mut env = matrix_env(vec![vec![0.5, 0.1]; 3], DelaySchedule::Zero);
        assert!(env.release(1).is_empty());
        env.play(1, &ActionChoice::Arm(0)).unwrap();
        let ev = env.release(2);
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].round, 1);
        assert_eq!(ev[0].observed_loss, 0.5);
    }

    #[test]
    fn uniform_delay_three_releases_at_five() {
        let mut env = matrix_env(
            vec![vec![0.2]; 6],
            DelaySchedule::UniformConst { d: 3 },
        );
        env.play(1, &ActionChoice::Arm(0)).unwrap();
        for t in 2..=4 {
            assert!(env.release(t).is_empty(), "round {t}");
        }
        assert_eq!(env.release(5).len(), 1);
    }

    #[test]
    fn arm_dependent_delay_indexes_played_arm() {
        let delta = vec![vec![0, 9]];
        let model = LossModel::Matrix {
            values: vec![vec![0.1, 0.9]],
        };
        let mut env = Environment::new(
            &model,
            &DelaySchedule::ArmDependent {
                delta: delta.clone(),
            },
            1,
            0,
        )
        .unwrap();
        env.play(1, &ActionChoice::Arm(0)).unwrap();
        assert_eq!(env.realized_delays(), &[0]);
        let mut env =
            Environment::new(&model, &DelaySchedule::ArmDependent { delta }, 1, 0).unwrap();
        env.play(1, &ActionChoice::Arm(1)).unwrap();
        assert_eq!(env.realized_delays(), &[9]);
        assert!(env.release(10).is_empty());
        assert_eq!(env.release(11).len(), 1);
    }

    #[test]
    fn out_of_order_play_rejected() {
        let mut env = matrix_env(vec![vec![0.0]; 2], DelaySchedule::Zero);
        assert!(matches!(
            env.play(2, &ActionChoice::Arm(0)),
            Err(EnvError::Order { .. })
        ));
    }

    #[test]
    fn every_event_released_exactly_once() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let t = 300u64;
        let delays: Vec<u64> = (0..t).map(|_| rng.random_range(0..40)).collect();
        let values = vec![vec![0.3, 0.6]; t as usize];
        let mut env = matrix_env(values, DelaySchedule::Zero);
        env.delays = DelayRealization::PerRound(delays.clone());
        let mut seen = vec![0u32; t as usize];
        for round in 1..=t {
            for ev in env.release(round) {
                // released the first round it is due: round == s + d + 1
                assert_eq!(round, ev.round + delays[(ev.round - 1) as usize] + 1);
                seen[(ev.round - 1) as usize] += 1;
            }
            env.play(round, &ActionChoice::Arm(0)).unwrap();
        }
        for ev in env.drain() {
            seen[(ev.round - 1) as usize] += 1;
        }
        assert!(seen.iter().all(|&c| c == 1));
        assert_eq!(env.total_delay(), delays.iter().sum::<u64>());
    }

    #[test]
    fn release_order_ascending_rounds() {
        let mut env = matrix_env(
            vec![vec![0.1]; 4],
            DelaySchedule::PerRound {
                delays: vec![3, 2, 1, 0],
            },
        );
        for t in 1..=4 {
            env.play(t, &ActionChoice::Arm(0)).unwrap();
        }
        let ev = env.release(5);
        let rounds: Vec<u64> = ev.iter().map(|e| e.round).collect();
        assert_eq!(rounds, vec![1, 2, 3, 4]);
    }

    #[test]
    fn comparator_picks_smallest_index_on_tie() {
        let env = matrix_env(vec![vec![0.5, 0.5], vec![0.5, 0.5]], DelaySchedule::Zero);
        let (c, total) = env.best_fixed_comparator();
        assert_eq!(c, Comparator::Arm(0));
        assert_eq!(total, 1.0);
        let env = matrix_env(vec![vec![1.0, 0.7], vec![1.0, 0.0]], DelaySchedule::Zero);
        let (c, total) = env.best_fixed_comparator();
        assert_eq!(c, Comparator::Arm(1));
        assert!((total - 0.7).abs() < 1e-12);
    }

    #[test]
    fn linear_comparators() {
        let vectors = vec![vec![0.3, -0.1], vec![0.1, -0.1]];
        let env = Environment::new(
            &LossModel::LinearSequence {
                vectors: vectors.clone(),
            },
            &DelaySchedule::Zero,
            2,
            0,
        )
        .unwrap();
        let (c, total) = env.best_fixed_comparator();
        assert_eq!(c, Comparator::Point(vec![-1.0, 1.0]));
        assert!((total - (-0.6)).abs() < 1e-12);
        let (c, total) = env.best_ball_comparator();
        if let Comparator::Point(y) = c {
            let norm: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
            assert!(y[0] < 0.0 && y[1] > 0.0);
        } else {
            panic!("expected a point comparator");
        }
        let s = (0.4_f64 * 0.4 + 0.2 * 0.2).sqrt();
        assert!((total + s).abs() < 1e-12);
    }

    #[test]
    fn bernoulli_realization_is_deterministic_in_seed() {
        let model = LossModel::Bernoulli {
            means: vec![0.3, 0.7],
        };
        let a = Environment::new(&model, &DelaySchedule::Zero, 50, 9).unwrap();
        let b = Environment::new(&model, &DelaySchedule::Zero, 50, 9).unwrap();
        assert_eq!(a.realized_losses(), b.realized_losses());
        let c = Environment::new(&model, &DelaySchedule::Zero, 50, 10).unwrap();
        assert_ne!(a.realized_losses(), c.realized_losses());
    }

    #[test]
    fn geometric_delays_capped() {
        let model = LossModel::Bernoulli { means: vec![0.5] };
        let env = Environment::new(
            &model,
            &DelaySchedule::Geometric { p: 1e-9 },
            10,
            4,
        )
        .unwrap();
        if let DelayRealization::PerRound(d) = &env.delays {
            assert!(d.iter().all(|&v| v <= 100));
        }
    }

    #[test]
    fn delay_summation_on_random_sequences() {
        // sum x_t / sqrt(1 + sum_{s<=t} x_s) <= 2 sqrt(1 + sum x_t)
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..200 {
            let len = rng.random_range(1..50);
            let xs: Vec<f64> = (0..len).map(|_| rng.random_range(0.0..5.0)).collect();
            let mut run = 0.0;
            let mut lhs = 0.0;
            for &x in &xs {
                run += x;
                lhs += x / (1.0 + run).sqrt();
            }
            assert!(lhs <= 2.0 * (1.0 + run).sqrt() + 1e-12);
        }
    }
}
