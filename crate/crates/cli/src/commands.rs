use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use apf_core::geometry::GeometryError;
use apf_core::monte_carlo::MonteCarloError;
use apf_core::simulation::run_trial_observed;
use apf_core::{
    run_monte_carlo, run_trial, sample_environment, trial_rng, EnvGenConfig, Environment, MetricsSummary, Outcome,
    PlannerConfig, PlannerKind, Point2, TrialResult,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{Config, ConfigError, Overrides};
use crate::{Band, Command, Common};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}: {message}")]
    Malformed { path: String, message: String },
    #[error(transparent)]
    MonteCarlo(#[from] MonteCarloError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("{0}")]
    Usage(String),
}

fn io_error(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// One line of the bench summary CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algo: String,
    pub n_lower: usize,
    pub n_upper: usize,
    pub trials: usize,
    #[serde(rename = "R_s")]
    pub success_rate: f64,
    #[serde(rename = "M_s_bar")]
    pub avg_steps: Option<f64>,
    #[serde(rename = "S")]
    pub safety: Option<f64>,
    #[serde(rename = "T_a_ms")]
    pub avg_runtime_ms: f64,
}

impl SummaryRow {
    pub fn new(kind: PlannerKind, band: Band, summary: &MetricsSummary) -> Self {
        SummaryRow {
            algo: kind.name().to_string(),
            n_lower: band.lower,
            n_upper: band.upper,
            trials: summary.trials,
            success_rate: summary.success_rate,
            avg_steps: summary.avg_steps,
            safety: summary.safety,
            avg_runtime_ms: summary.avg_runtime * 1e3,
        }
    }
}

pub const SUMMARY_HEADER: [&str; 8] = ["algo", "n_lower", "n_upper", "trials", "R_s", "M_s_bar", "S", "T_a_ms"];

/// One trial in the JSON-lines results file.
#[derive(Debug, Serialize)]
struct TrialLine<'a> {
    algo: &'a str,
    n_lower: usize,
    n_upper: usize,
    trial: usize,
    outcome: Outcome,
    steps: usize,
    detected_obstacles: &'a BTreeSet<usize>,
    random_walk_steps: usize,
    wall_time: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    trajectory: Option<&'a [Point2]>,
}

/// The `run` document.
#[derive(Debug, Serialize)]
struct RunReport<'a> {
    algo: &'a str,
    seed: u64,
    environment: &'a Environment,
    #[serde(flatten)]
    result: &'a TrialResult,
}

#[derive(Debug, Serialize)]
struct TraceRow {
    step: usize,
    x: f64,
    y: f64,
    mu_hat: Option<f64>,
}

#[derive(Debug, Serialize)]
struct SweepRow<'a> {
    mu_o: f64,
    algo: &'a str,
    n_lower: usize,
    n_upper: usize,
    trials: usize,
    #[serde(rename = "R_s")]
    success_rate: f64,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(io_error(p))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn out_label(path: Option<&Path>) -> PathBuf {
    path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf)
}

fn load_config(common: &Common, algo: Option<PlannerKind>) -> Result<Config, CliError> {
    let overrides = Overrides {
        algo,
        trials: common.trials,
        seed: common.seed,
        mu_strategy: common.mu_strategy,
    };
    let config = Config::load(common.config.as_deref(), &overrides)?;
    if let Some(p) = &common.dump_config {
        std::fs::write(p, config.to_toml()).map_err(io_error(p))?;
    }
    if common.jobs == Some(0) {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    Ok(config)
}

fn load_environment(path: &Path) -> Result<Environment, CliError> {
    let text = std::fs::read_to_string(path).map_err(io_error(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Malformed {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn with_band(env: &EnvGenConfig, band: Band) -> EnvGenConfig {
    EnvGenConfig {
        n_lower: band.lower,
        n_upper: band.upper,
        ..env.clone()
    }
}

fn bands_or_default(bands: Vec<Band>, config: &Config) -> Vec<Band> {
    if bands.is_empty() {
        vec![Band {
            lower: config.env.n_lower,
            upper: config.env.n_upper,
        }]
    } else {
        bands
    }
}

fn write_err(path: Option<&Path>) -> impl Fn(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: out_label(path).display().to_string(),
        source,
    }
}

fn csv_err(path: Option<&Path>) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Io {
        path: out_label(path).display().to_string(),
        source: io::Error::other(e),
    }
}

pub fn dispatch(command: Command) -> Result<u8, CliError> {
    match command {
        Command::Run { common, algo, env } => cmd_run(&common, algo, env.as_deref()),
        Command::Bench {
            common,
            algo,
            densities,
            results,
            trajectories,
        } => cmd_bench(&common, algo, densities, results.as_deref(), trajectories),
        Command::SweepMu {
            common,
            mu_grid,
            algo,
            densities,
            trace,
            env,
        } => {
            if trace {
                cmd_trace(&common, env.as_deref())
            } else {
                cmd_sweep_mu(&common, &mu_grid, algo, densities)
            }
        }
        Command::Compare { csv, out } => cmd_compare(&csv, out.as_deref()),
    }
}

/// One trial. Uses the same random stream as trial 0 of a batch with the
/// same seed, so `run` replays the first trial of `bench`.
fn cmd_run(common: &Common, algo: Option<PlannerKind>, env_path: Option<&Path>) -> Result<u8, CliError> {
    let config = load_config(common, algo)?;
    let mut rng = trial_rng(config.sim.seed, 0);
    let env = match env_path {
        Some(p) => load_environment(p)?,
        None => sample_environment(&config.env, &mut rng)?,
    };
    let result = run_trial(&env, &config.planner, &config.sim, &mut rng);
    let report = RunReport {
        algo: config.planner.kind.name(),
        seed: config.sim.seed,
        environment: &env,
        result: &result,
    };
    let out = common.out.as_deref();
    let mut w = output(out)?;
    serde_json::to_writer_pretty(&mut w, &report).map_err(|e| write_err(out)(e.into()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(write_err(out))?;
    eprintln!(
        "{}: {:?} after {} steps",
        config.planner.kind.label(),
        result.outcome,
        result.steps
    );
    Ok(if result.outcome == Outcome::Success { 0 } else { 1 })
}

const BENCH_DEFAULT: [PlannerKind; 4] = [
    PlannerKind::Capf,
    PlannerKind::Bapf,
    PlannerKind::CrBapf,
    PlannerKind::CrBapfStar,
];

fn cmd_bench(
    common: &Common,
    algos: Vec<PlannerKind>,
    densities: Vec<Band>,
    results_path: Option<&Path>,
    trajectories: bool,
) -> Result<u8, CliError> {
    let config = load_config(common, None)?;
    let algos = if algos.is_empty() {
        BENCH_DEFAULT.to_vec()
    } else {
        algos
    };
    let bands = bands_or_default(densities, &config);

    let out = common.out.as_deref();
    let mut summary = csv::Writer::from_writer(output(out)?);
    let mut results = results_path.map(|p| output(Some(p))).transpose()?;

    for &band in &bands {
        let env = with_band(&config.env, band);
        for &kind in &algos {
            let planner = PlannerConfig {
                kind,
                ..config.planner.clone()
            };
            let run = run_monte_carlo(&env, &planner, &config.sim, common.jobs)?;
            summary
                .serialize(SummaryRow::new(kind, band, &run.summary))
                .map_err(csv_err(out))?;
            summary.flush().map_err(write_err(out))?;
            if let Some(w) = results.as_mut() {
                for (trial, r) in run.results.iter().enumerate() {
                    let line = TrialLine {
                        algo: kind.name(),
                        n_lower: band.lower,
                        n_upper: band.upper,
                        trial,
                        outcome: r.outcome,
                        steps: r.steps,
                        detected_obstacles: &r.detected_obstacles,
                        random_walk_steps: r.random_walk_steps,
                        wall_time: r.wall_time,
                        trajectory: trajectories.then_some(r.trajectory.as_slice()),
                    };
                    serde_json::to_writer(&mut *w, &line).map_err(|e| write_err(results_path)(e.into()))?;
                    writeln!(w).map_err(write_err(results_path))?;
                }
            }
        }
    }
    if let Some(mut w) = results {
        w.flush().map_err(write_err(results_path))?;
    }
    Ok(0)
}

const SWEEP_DEFAULT: [PlannerKind; 2] = [PlannerKind::Bapf, PlannerKind::CrBapfStar];

fn cmd_sweep_mu(common: &Common, grid: &[f64], algos: Vec<PlannerKind>, densities: Vec<Band>) -> Result<u8, CliError> {
    let config = load_config(common, None)?;
    if grid.is_empty() {
        return Err(CliError::Usage("--mu-grid is empty".into()));
    }
    let algos = if algos.is_empty() {
        SWEEP_DEFAULT.to_vec()
    } else {
        algos
    };
    let bands = bands_or_default(densities, &config);

    let out = common.out.as_deref();
    let mut w = csv::Writer::from_writer(output(out)?);
    for &band in &bands {
        let env = with_band(&config.env, band);
        for &mu_o in grid {
            for &kind in &algos {
                let mut planner = PlannerConfig {
                    kind,
                    ..config.planner.clone()
                };
                planner.potential.mu_o = mu_o;
                planner.validate().map_err(|e| ConfigError::Invalid {
                    key: e.key().to_string(),
                    message: format!("--mu-grid value {mu_o}: {e}"),
                })?;
                let run = run_monte_carlo(&env, &planner, &config.sim, common.jobs)?;
                w.serialize(SweepRow {
                    mu_o,
                    algo: kind.name(),
                    n_lower: band.lower,
                    n_upper: band.upper,
                    trials: run.summary.trials,
                    success_rate: run.summary.success_rate,
                })
                .map_err(csv_err(out))?;
            }
        }
    }
    w.flush().map_err(write_err(out))?;
    Ok(0)
}

/// One A-BAPF trial, logging the decay rate chosen for every step.
fn cmd_trace(common: &Common, env_path: Option<&Path>) -> Result<u8, CliError> {
    let config = load_config(common, Some(PlannerKind::ABapf))?;
    let mut rng = trial_rng(config.sim.seed, 0);
    let env = match env_path {
        Some(p) => load_environment(p)?,
        None => sample_environment(&config.env, &mut rng)?,
    };
    let mut rows = Vec::new();
    let result = run_trial_observed(&env, &config.planner, &config.sim, &mut rng, |pos, step| {
        rows.push(TraceRow {
            step: rows.len(),
            x: pos.x,
            y: pos.y,
            mu_hat: step.mu_hat,
        });
    });
    let out = common.out.as_deref();
    let mut w = csv::Writer::from_writer(output(out)?);
    for row in rows {
        w.serialize(row).map_err(csv_err(out))?;
    }
    w.flush().map_err(write_err(out))?;
    eprintln!("A-BAPF: {:?} after {} steps", result.outcome, result.steps);
    Ok(0)
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>, CliError> {
    let malformed = |message: String| CliError::Malformed {
        path: path.display().to_string(),
        message,
    };
    let file = File::open(path).map_err(io_error(path))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers().map_err(|e| malformed(e.to_string()))?.clone();
    if headers.iter().ne(SUMMARY_HEADER) {
        return Err(malformed(format!(
            "expected header `{}`, found `{}`",
            SUMMARY_HEADER.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let rows = reader
        .deserialize()
        .collect::<Result<Vec<SummaryRow>, _>>()
        .map_err(|e| malformed(e.to_string()))?;
    if rows.is_empty() {
        return Err(malformed("no rows".into()));
    }
    Ok(rows)
}

fn display_algo(name: &str) -> &str {
    match name.parse::<PlannerKind>() {
        Ok(kind) => kind.label(),
        Err(_) => name,
    }
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.digits$}"))
}

/// Aligned text table grouped by band, in first-seen order. The best
/// success rate of each band carries a `*`.
pub fn render_table(rows: &[SummaryRow]) -> String {
    let mut bands: Vec<(usize, usize)> = Vec::new();
    for r in rows {
        if !bands.contains(&(r.n_lower, r.n_upper)) {
            bands.push((r.n_lower, r.n_upper));
        }
    }
    let header = ["band", "algorithm", "trials", "R_s", "M_s", "S (m)", "T_a (ms)"];
    let mut cells: Vec<[String; 7]> = Vec::new();
    for &(lo, hi) in &bands {
        let group: Vec<&SummaryRow> = rows.iter().filter(|r| (r.n_lower, r.n_upper) == (lo, hi)).collect();
        let best = group.iter().map(|r| r.success_rate).fold(f64::NEG_INFINITY, f64::max);
        for (i, r) in group.iter().enumerate() {
            let mark = if r.success_rate == best { "*" } else { " " };
            cells.push([
                if i == 0 { format!("{lo}:{hi}") } else { String::new() },
                display_algo(&r.algo).to_string(),
                r.trials.to_string(),
                format!("{:.3}{mark}", r.success_rate),
                opt(r.avg_steps, 2),
                opt(r.safety, 2),
                format!("{:.4}", r.avg_runtime_ms),
            ]);
        }
    }
    let mut widths = header.map(str::len);
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |row: &[String]| {
        let mut s = String::new();
        for (i, (c, w)) in row.iter().zip(widths).enumerate() {
            let pad = w - c.chars().count();
            if i < 2 {
                s.push_str(c);
                s.push_str(&" ".repeat(pad));
            } else {
                s.push_str(&" ".repeat(pad));
                s.push_str(c);
            }
            if i + 1 < row.len() {
                s.push_str("  ");
            }
        }
        s.trim_end().to_string() + "\n"
    };
    let mut table = line(&header.map(String::from));
    table.push_str(&line(&widths.map(|w| "-".repeat(w))));
    for row in &cells {
        table.push_str(&line(row));
    }
    table
}

fn cmd_compare(csv_path: &Path, out: Option<&Path>) -> Result<u8, CliError> {
    let rows = read_summary(csv_path)?;
    let mut w = output(out)?;
    w.write_all(render_table(&rows).as_bytes())
        .and_then(|_| w.flush())
        .map_err(write_err(out))?;
    Ok(0)
}
