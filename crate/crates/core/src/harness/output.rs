//! Artifact emission: runs.csv, summary.json, regret_curve.csv.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::{ExperimentConfig, SCHEMA_VERSION};
use super::run::{AggregateStats, RunRecord};

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Shape of summary.json.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub master_seed: u64,
    pub runs: u64,
    pub mean_final_regret: f64,
    pub stderr_final_regret: f64,
    pub mean_final_b: f64,
    pub min_final_b: f64,
    pub max_final_b: f64,
    pub total_skips: u64,
    pub mean_realized_delay: f64,
    /// Convention used when several arms tie for best in hindsight.
    pub tie_break: String,
    pub config: ExperimentConfig,
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn emit_outputs(
    stats: &AggregateStats,
    records: &[RunRecord],
    config: &ExperimentConfig,
    dir: &Path,
) -> Result<(), OutputError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;

    let runs_path = dir.join("runs.csv");
    {
        let mut w = csv::Writer::from_path(&runs_path).map_err(|source| OutputError::Csv {
            path: runs_path.clone(),
            source,
        })?;
        let wrap = |source| OutputError::Csv {
            path: runs_path.clone(),
            source,
        };
        w.write_record([
            "run", "t", "x_hash", "action", "observed", "sigma", "b", "b_total", "backlog",
            "skipped",
        ])
        .map_err(wrap)?;
        for rec in records {
            for row in &rec.rows {
                w.write_record([
                    rec.run_index.to_string(),
                    row.t.to_string(),
                    format!("{:016x}", row.x_hash),
                    row.action.clone(),
                    format!("{:.17e}", row.observed),
                    format!("{:.17e}", row.sigma),
                    format!("{:.17e}", row.b),
                    format!("{:.17e}", row.b_total),
                    row.backlog.to_string(),
                    (row.skipped as u8).to_string(),
                ])
                .map_err(wrap)?;
            }
        }
        w.flush().map_err(io_err(&runs_path))?;
    }

    let curve_path = dir.join("regret_curve.csv");
    {
        let mut w = csv::Writer::from_path(&curve_path).map_err(|source| OutputError::Csv {
            path: curve_path.clone(),
            source,
        })?;
        let wrap = |source| OutputError::Csv {
            path: curve_path.clone(),
            source,
        };
        w.write_record(["t", "mean_cum_regret", "stderr"]).map_err(wrap)?;
        for (i, (m, s)) in stats
            .mean_curve
            .iter()
            .zip(stats.stderr_curve.iter())
            .enumerate()
        {
            w.write_record([
                (i + 1).to_string(),
                format!("{m:.17e}"),
                format!("{s:.17e}"),
            ])
            .map_err(wrap)?;
        }
        w.flush().map_err(io_err(&curve_path))?;
    }

    let summary = RunSummary {
        schema_version: SCHEMA_VERSION,
        master_seed: config.master_seed,
        runs: config.runs,
        mean_final_regret: stats.final_mean,
        stderr_final_regret: stats.final_stderr,
        mean_final_b: stats.mean_final_b,
        min_final_b: stats.min_final_b,
        max_final_b: stats.max_final_b,
        total_skips: stats.total_skips,
        mean_realized_delay: stats.mean_realized_delay,
        tie_break: "smallest_index".to_string(),
        config: config.clone(),
    };
    let summary_path = dir.join("summary.json");
    let json = serde_json::to_string_pretty(&summary)?;
    fs::write(&summary_path, json + "\n").map_err(io_err(&summary_path))?;

    if config.output.dump_actions {
        let actions_path = dir.join("actions.csv");
        let mut w =
            csv::Writer::from_path(&actions_path).map_err(|source| OutputError::Csv {
                path: actions_path.clone(),
                source,
            })?;
        let wrap = |source| OutputError::Csv {
            path: actions_path.clone(),
            source,
        };
        w.write_record(["run", "t", "coords"]).map_err(wrap)?;
        for rec in records {
            for (i, a) in rec.actions.iter().enumerate() {
                let coords = a
                    .iter()
                    .map(|v| format!("{v:.17e}"))
                    .collect::<Vec<_>>()
                    .join(";");
                w.write_record([rec.run_index.to_string(), (i + 1).to_string(), coords])
                    .map_err(wrap)?;
            }
        }
        w.flush().map_err(io_err(&actions_path))?;
    }
    Ok(())
}
