//! Command-line driver: `run` executes an experiment config, `sweep` repeats
//! it over values of one config key, `verify` runs the invariant suite.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use banker_omd::harness::{self, ExperimentConfig};

#[derive(Parser)]
#[command(name = "banker-omd", version, about = "Delayed-feedback bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Override master_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of Monte-Carlo runs.
    #[arg(long)]
    runs: Option<u64>,
    /// Output directory (overrides the config's output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dump full action vectors alongside the per-round hashes.
    #[arg(long)]
    dump_actions: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one experiment and write runs.csv / summary.json / regret_curve.csv.
    Run(RunArgs),
    /// Re-run the experiment for each value of one dotted config key,
    /// e.g. --param environment.delay.d --values 0,8,32.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Dotted path of the key to vary.
        #[arg(long)]
        param: String,
        /// Comma-separated values to substitute.
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
    },
    /// Run the cross-module property suite.
    Verify {
        /// Only run properties whose name contains this substring.
        #[arg(long)]
        filter: Option<String>,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(args) => match execute(&args, None) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        },
        Command::Sweep { run, param, values } => {
            for value in &values {
                if let Err(e) = execute(&run, Some((&param, value))) {
                    eprintln!("error at {param}={value}: {e}");
                    return ExitCode::FAILURE;
                }
            }
            ExitCode::SUCCESS
        }
        Command::Verify { filter } => {
            let report = harness::verify(filter.as_deref());
            if report.results.is_empty() {
                eprintln!("no property matches the filter");
                return ExitCode::FAILURE;
            }
            for r in &report.results {
                println!(
                    "{} {:<26} {}",
                    if r.pass { "PASS" } else { "FAIL" },
                    r.name,
                    r.detail
                );
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn execute(args: &RunArgs, override_kv: Option<(&str, &str)>) -> Result<(), String> {
    let raw = std::fs::read_to_string(&args.config)
        .map_err(|e| format!("{}: {e}", args.config.display()))?;
    let mut value: toml::Value =
        toml::from_str(&raw).map_err(|e| format!("config parse: {e}"))?;
    if let Some((path, v)) = override_kv {
        set_key(&mut value, path, v)?;
    }
    let mut cfg: ExperimentConfig = value
        .try_into()
        .map_err(|e| format!("config: {e}"))?;
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(runs) = args.runs {
        cfg.runs = runs;
    }
    if args.dump_actions {
        cfg.output.dump_actions = true;
    }
    cfg.validate().map_err(|e| e.to_string())?;

    let base_dir = args
        .config
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
        .to_path_buf();
    let records = harness::run_monte_carlo(&cfg, &base_dir).map_err(|e| e.to_string())?;
    let stats = harness::aggregate(&records);

    let mut out = args
        .out
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    if let Some((path, v)) = override_kv {
        out = out.join(format!("{}={v}", path.replace('.', "_")));
    }
    harness::emit_outputs(&stats, &records, &cfg, &out).map_err(|e| e.to_string())?;
    println!(
        "runs={} final_regret={:.4} (stderr {:.4}) B_mean={:.2} skips={} -> {}",
        stats.runs,
        stats.final_mean,
        stats.final_stderr,
        stats.mean_final_b,
        stats.total_skips,
        out.display()
    );
    Ok(())
}

/// Set a dotted key inside a TOML document, parsing the value as the same
/// type the key currently has (or string when absent).
fn set_key(root: &mut toml::Value, path: &str, raw: &str) -> Result<(), String> {
    let mut cur = root;
    let parts: Vec<&str> = path.split('.').collect();
    for part in &parts[..parts.len() - 1] {
        cur = cur
            .get_mut(part)
            .ok_or_else(|| format!("config key {path} not found at `{part}`"))?;
    }
    let last = parts.last().expect("nonempty path");
    let new_value = if let Ok(i) = raw.parse::<i64>() {
        toml::Value::Integer(i)
    } else if let Ok(f) = raw.parse::<f64>() {
        toml::Value::Float(f)
    } else if let Ok(b) = raw.parse::<bool>() {
        toml::Value::Boolean(b)
    } else {
        toml::Value::String(raw.to_string())
    };
    match cur.as_table_mut() {
        Some(table) => {
            table.insert(last.to_string(), new_value);
            Ok(())
        }
        None => Err(format!("{path}: parent is not a table")),
    }
}
