//! Front end for the `apf` binary: configuration, benchmark orchestration
//! and plot-ready exports.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use apf_core::{MuStrategy, PlannerKind};
use clap::{Args, Parser, Subcommand};

pub use commands::{CliError, SummaryRow};
pub use config::{Config, ConfigError, Overrides};

/// Obstacle count range `N_l:N_u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Band {
    pub lower: usize,
    pub upper: usize,
}

impl FromStr for Band {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("invalid density band `{s}` (expected LOWER:UPPER, e.g. 20:45)");
        let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
        let lower = lo.trim().parse().map_err(|_| bad())?;
        let upper = hi.trim().parse().map_err(|_| bad())?;
        if lower > upper {
            return Err(bad());
        }
        Ok(Band { lower, upper })
    }
}

#[derive(Debug, Parser)]
#[command(name = "apf", version, about = "Potential field navigation planners and benchmarks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// TOML file with [env], [planner] and [sim] sections.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, value_name = "literal-argmin|min-feasible")]
    pub mu_strategy: Option<MuStrategy>,
    /// Worker threads for Monte Carlo batches.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the effective configuration to this file.
    #[arg(long, value_name = "PATH")]
    pub dump_config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one trial and write environment, trajectory and outcome as JSON.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        algo: Option<PlannerKind>,
        /// Environment JSON to replay instead of sampling one.
        #[arg(long)]
        env: Option<PathBuf>,
    },
    /// Monte Carlo batches per algorithm and density band; writes a summary CSV.
    Bench {
        #[command(flatten)]
        common: Common,
        /// Comma-separated algorithms [default: capf,bapf,crbapf,crbapf-star].
        #[arg(long, value_delimiter = ',')]
        algo: Vec<PlannerKind>,
        /// Comma-separated bands such as 20:45,45:70 [default: the config's band].
        #[arg(long, value_delimiter = ',')]
        densities: Vec<Band>,
        /// Per-trial results as JSON lines.
        #[arg(long, value_name = "PATH")]
        results: Option<PathBuf>,
        /// Include trajectories in the per-trial results.
        #[arg(long, requires = "results")]
        trajectories: bool,
    },
    /// Success rate against the obstacle decay rate, or a per-step trace of the adaptive rate.
    SweepMu {
        #[command(flatten)]
        common: Common,
        /// Comma-separated obstacle decay rates.
        #[arg(long, value_delimiter = ',', default_value = "100,300,500,700,1000")]
        mu_grid: Vec<f64>,
        /// Comma-separated algorithms [default: bapf,crbapf-star].
        #[arg(long, value_delimiter = ',')]
        algo: Vec<PlannerKind>,
        /// Comma-separated bands [default: the config's band].
        #[arg(long, value_delimiter = ',')]
        densities: Vec<Band>,
        /// Run one A-BAPF trial and log the chosen decay rate per step.
        #[arg(long)]
        trace: bool,
        /// Environment JSON for trace mode.
        #[arg(long, requires = "trace")]
        env: Option<PathBuf>,
    },
    /// Render a bench CSV as an aligned table, marking the best success rate per band.
    Compare {
        csv: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
