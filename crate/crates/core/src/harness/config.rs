//! Experiment configuration: a TOML file with algorithm, environment,
//! run-count, and output sections. CLI flags may override individual keys.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environment::{self, DelaySchedule, EnvError, LossModel};
use crate::geometry::Regularizer;
use crate::ledger::AllocationRule;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("toml: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("invalid config: {0}")]
    Invalid(String),
}

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmKind {
    ConstScale,
    Tinf,
    Sftinf,
    Sflbinf,
    Bolo,
    Vanilla,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegChoice {
    Tsallis,
    LogBarrier,
    NegEntropy,
    Hypercube,
    Ball,
}

impl RegChoice {
    pub fn build(self, dim: usize) -> Regularizer {
        match self {
            RegChoice::Tsallis => Regularizer::TsallisHalf(dim),
            RegChoice::LogBarrier => Regularizer::LogBarrierSimplex(dim),
            RegChoice::NegEntropy => Regularizer::NegEntropy(dim),
            RegChoice::Hypercube => Regularizer::HypercubeBarrier(dim),
            RegChoice::Ball => Regularizer::BallBarrier(dim),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllocChoice {
    Greedy,
    Proportional,
}

impl Default for AllocChoice {
    fn default() -> Self {
        AllocChoice::Greedy
    }
}

impl From<AllocChoice> for AllocationRule {
    fn from(c: AllocChoice) -> Self {
        match c {
            AllocChoice::Greedy => AllocationRule::Greedy,
            AllocChoice::Proportional => AllocationRule::Proportional,
        }
    }
}

fn default_prefactor() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlgorithmConfig {
    pub kind: AlgorithmKind,
    /// Number of arms (MAB) or coordinates (linear bandit).
    pub dimension: usize,
    pub horizon: u64,
    /// Constant scale for const_scale / vanilla kinds.
    #[serde(default)]
    pub sigma: Option<f64>,
    /// Multiplier on the delay term of the delay-aware Tsallis schedule.
    #[serde(default = "default_prefactor")]
    pub prefactor: f64,
    #[serde(default)]
    pub regularizer: Option<RegChoice>,
    #[serde(default)]
    pub allocation: AllocChoice,
}

/// Loss spec as written in config files; CSV-backed variants resolve to the
/// in-memory model at load time.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossConfig {
    Matrix { values: Vec<Vec<f64>> },
    MatrixCsv { path: PathBuf },
    Bernoulli { means: Vec<f64> },
    ScaleFree { base: Vec<Vec<f64>>, multiplier: f64 },
    ScaleFreeCsv { path: PathBuf, multiplier: f64 },
    LinearSequence { vectors: Vec<Vec<f64>> },
    LinearCsv { path: PathBuf },
}

impl LossConfig {
    pub fn resolve(&self, base_dir: &Path) -> Result<LossModel, ConfigError> {
        let abs = |p: &PathBuf| {
            if p.is_absolute() {
                p.clone()
            } else {
                base_dir.join(p)
            }
        };
        Ok(match self {
            LossConfig::Matrix { values } => LossModel::Matrix {
                values: values.clone(),
            },
            LossConfig::MatrixCsv { path } => LossModel::Matrix {
                values: environment::load_loss_matrix_csv(&abs(path))?,
            },
            LossConfig::Bernoulli { means } => LossModel::Bernoulli {
                means: means.clone(),
            },
            LossConfig::ScaleFree { base, multiplier } => LossModel::ScaleFree {
                base: base.clone(),
                multiplier: *multiplier,
            },
            LossConfig::ScaleFreeCsv { path, multiplier } => LossModel::ScaleFree {
                base: environment::load_loss_matrix_csv(&abs(path))?,
                multiplier: *multiplier,
            },
            LossConfig::LinearSequence { vectors } => LossModel::LinearSequence {
                vectors: vectors.clone(),
            },
            LossConfig::LinearCsv { path } => LossModel::LinearSequence {
                vectors: environment::load_loss_matrix_csv(&abs(path))?,
            },
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DelayConfig {
    Zero,
    UniformConst { d: u64 },
    PerRound { delays: Vec<u64> },
    PerRoundCsv { path: PathBuf },
    ArmDependent { delta: Vec<Vec<u64>> },
    Geometric { p: f64 },
}

impl DelayConfig {
    pub fn resolve(&self, base_dir: &Path) -> Result<DelaySchedule, ConfigError> {
        Ok(match self {
            DelayConfig::Zero => DelaySchedule::Zero,
            DelayConfig::UniformConst { d } => DelaySchedule::UniformConst { d: *d },
            DelayConfig::PerRound { delays } => DelaySchedule::PerRound {
                delays: delays.clone(),
            },
            DelayConfig::PerRoundCsv { path } => {
                let p = if path.is_absolute() {
                    path.clone()
                } else {
                    base_dir.join(path)
                };
                DelaySchedule::PerRound {
                    delays: environment::load_delay_vector_csv(&p)?,
                }
            }
            DelayConfig::ArmDependent { delta } => DelaySchedule::ArmDependent {
                delta: delta.clone(),
            },
            DelayConfig::Geometric { p } => DelaySchedule::Geometric { p: *p },
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvironmentConfig {
    pub loss: LossConfig,
    pub delay: DelayConfig,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    /// Dump full action vectors alongside the per-round hash.
    #[serde(default)]
    pub dump_actions: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub algorithm: AlgorithmConfig,
    pub environment: EnvironmentConfig,
    pub runs: u64,
    pub master_seed: u64,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let s = std::fs::read_to_string(path)?;
        Self::from_toml_str(&s)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::Invalid(format!(
                "schema_version {} unsupported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.runs == 0 {
            return Err(ConfigError::Invalid("runs must be >= 1".into()));
        }
        if self.algorithm.dimension == 0 {
            return Err(ConfigError::Invalid("dimension must be >= 1".into()));
        }
        match self.algorithm.kind {
            AlgorithmKind::ConstScale | AlgorithmKind::Vanilla => {
                if self.algorithm.sigma.map(|s| s <= 0.0).unwrap_or(true) {
                    return Err(ConfigError::Invalid(
                        "const_scale/vanilla need a positive sigma".into(),
                    ));
                }
            }
            AlgorithmKind::Bolo => {
                if let Some(r) = self.algorithm.regularizer {
                    if !matches!(r, RegChoice::Hypercube | RegChoice::Ball) {
                        return Err(ConfigError::Invalid(
                            "bolo needs a barrier regularizer".into(),
                        ));
                    }
                }
                if !matches!(self.environment.loss, LossConfig::LinearSequence { .. } | LossConfig::LinearCsv { .. }) {
                    return Err(ConfigError::Invalid(
                        "bolo needs a linear loss sequence".into(),
                    ));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Splitmix64-style per-run seed derivation. The increment constant
/// 0x9E3779B97F4A7C15 is fixed so other implementations can reproduce the
/// exact stream: z = master + (index+1)*0x9E3779B97F4A7C15, then the
/// standard splitmix64 finalizer.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
