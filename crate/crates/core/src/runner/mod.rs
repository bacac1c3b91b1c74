//! Config-driven experiment runner behind the `qlbe` binary.
//!
//! `qlbe run <config.json>` executes one experiment and writes
//! `results.csv`, `summary.json` (key scalars plus built-in pass/fail
//! checks), and `manifest.json` (config echo, code version, seed) into the
//! output directory. `qlbe compare <spec.json>` loads summaries of prior
//! runs and writes an agreement report. Exit codes: 0 when everything
//! passed, 2 for configuration problems, 3 for numerical failures or
//! failed checks.

mod config;
mod experiments;
mod report;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

pub use config::{
    EvolutionBlock, ExperimentTag, GaussianBlock, InitialStateBlock, LatticeBlock, LatticeInit,
    MonteCarloBlock, PhaseGridBlock, PositionGridBlock, ScenarioConfig, SpectralBlock,
    SweepBlock,
};
pub use experiments::{run_experiment, Check, RunSummary};
pub use report::{build_report, compare_from_path, ComparisonReport, ComparisonRow, ReportSpec};

/// Errors surfaced by the runner, split by exit code.
#[derive(Debug, thiserror::Error)]
pub enum RunnerError {
    /// Bad or incomplete configuration, or missing input artifacts.
    #[error("config error: {0}")]
    Config(String),
    /// A solver reported instability, positivity loss, or a failed
    /// integration.
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl RunnerError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Numerical(_) => 3,
            _ => 2,
        }
    }
}

/// Reproducibility record written next to every run's results.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    /// Effective RNG seed, for experiments that draw random numbers.
    pub seed: Option<u64>,
    pub config: ScenarioConfig,
}

/// Executes one experiment from a config file and writes all artifacts.
/// `seed_override` and `out_override` mirror the CLI flags.
pub fn execute_run(
    config_path: &Path,
    seed_override: Option<u64>,
    out_override: Option<&Path>,
) -> Result<RunSummary, RunnerError> {
    let text = std::fs::read_to_string(config_path).map_err(|e| {
        RunnerError::Config(format!("cannot read {}: {e}", config_path.display()))
    })?;
    let mut config = ScenarioConfig::parse(&text)?;
    if let Some(seed) = seed_override {
        if let Some(mc) = config.monte_carlo.as_mut() {
            mc.seed = seed;
        }
    }
    let out_dir: PathBuf = out_override
        .map(Path::to_path_buf)
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));

    let summary = run_experiment(&config, &out_dir)?;
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.monte_carlo.as_ref().map(|m| m.seed),
        config: config.clone(),
    };
    let mut summary_json = serde_json::to_string_pretty(&summary)?;
    summary_json.push('\n');
    std::fs::write(out_dir.join("summary.json"), summary_json)?;
    let mut manifest_json = serde_json::to_string_pretty(&manifest)?;
    manifest_json.push('\n');
    std::fs::write(out_dir.join("manifest.json"), manifest_json)?;
    Ok(summary)
}

#[derive(Parser)]
#[command(
    name = "qlbe",
    version,
    about = "Experiments on the linear Boltzmann equation and its diffusive limits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for ensemble experiments (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the RNG seed of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the output directory of the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a scenario config.
    Run { config: PathBuf },
    /// Compare artifacts of prior runs against each other.
    Compare { spec: PathBuf },
}

/// Entry point of the `qlbe` binary; returns the process exit code.
pub fn cli_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version land here with successful exit status.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };

    if let Some(threads) = cli.threads {
        // Errors only if a pool already exists, which is fine for our use.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }

    match cli.command {
        Command::Run { config } => match execute_run(&config, cli.seed, cli.out.as_deref()) {
            Ok(summary) => {
                for c in &summary.checks {
                    println!(
                        "check {:<28} {}  ({})",
                        c.name,
                        if c.passed { "pass" } else { "FAIL" },
                        c.detail
                    );
                }
                if summary.all_passed {
                    0
                } else {
                    eprintln!("one or more built-in checks failed");
                    3
                }
            }
            Err(e) => {
                eprintln!("{e}");
                e.exit_code()
            }
        },
        Command::Compare { spec } => {
            let out_dir = cli.out.unwrap_or_else(|| PathBuf::from("."));
            match compare_from_path(&spec, &out_dir) {
                Ok(true) => 0,
                Ok(false) => {
                    eprintln!("one or more cross-method comparisons failed");
                    3
                }
                Err(e) => {
                    eprintln!("{e}");
                    e.exit_code()
                }
            }
        }
    }
}
