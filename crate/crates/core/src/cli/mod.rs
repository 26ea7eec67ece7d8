//! Command-line front end.
//!
//! Exit codes: 0 success, 1 invalid input, 2 numerical failure.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{default_indicators, EpidemicIndicators};
use crate::model::Resources;
use crate::optimizer::{
    minimize_tau_with, objective_with, procurement_plan, OptimizationResult,
};
use crate::Error;

pub use config::{OutputPaths, ScenarioConfig};
use output::{event_records, sweep_csv, trajectory_csv, write_json, write_text, EventRecord, SweepRow};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }

    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Validation(format!("{}: {e}", path.display()))
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "vaxplan", version, about = "Cost-optimal vaccination program planning in the SIRD model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Scenario configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Bundled scenario: variant1 or variant2.
    #[arg(long)]
    preset: Option<String>,
}

impl Source {
    fn load(&self) -> Result<ScenarioConfig, CliError> {
        match (&self.config, &self.preset) {
            (Some(p), _) => ScenarioConfig::load(p),
            (None, Some(name)) => ScenarioConfig::preset(name),
            (None, None) => unreachable!("clap enforces one source"),
        }
    }
}

#[derive(Debug, Args)]
struct Outputs {
    /// Output CSV path (overrides the config).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Output JSON summary path (overrides the config).
    #[arg(long)]
    json: Option<PathBuf>,
}

impl Outputs {
    fn resolve(&self, cfg: &ScenarioConfig, stem: &str) -> (PathBuf, PathBuf) {
        let csv = self
            .csv
            .clone()
            .or_else(|| cfg.output.csv.clone())
            .unwrap_or_else(|| PathBuf::from(format!("{stem}.csv")));
        let json = self
            .json
            .clone()
            .or_else(|| cfg.output.json.clone())
            .unwrap_or_else(|| PathBuf::from(format!("{stem}.json")));
        (csv, json)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one program duration.
    Simulate {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        tau: f64,
        #[command(flatten)]
        out: Outputs,
    },
    /// Find the cost-optimal program duration.
    Optimize {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        out: Outputs,
    },
    /// Optimal duration and vaccine demand with unlimited stock.
    Procure {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        out: Outputs,
    },
    /// One indicator row per parameter value.
    Sweep {
        #[command(flatten)]
        source: Source,
        /// One of tau, k, l, m, a, b, c, eps, r.
        #[arg(long)]
        param: String,
        /// Comma list or start:step:end.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        /// Fixed program duration for non-tau sweeps (default: optimize each row).
        #[arg(long)]
        tau: Option<f64>,
        /// Output CSV path.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Write a bundled configuration to a file.
    Init {
        #[arg(long)]
        preset: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateSummary {
    pub tau: f64,
    pub resources: Resources,
    pub objective: f64,
    pub feasible: bool,
    pub indicators: EpidemicIndicators,
    pub events: Vec<EventRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizeSummary {
    pub tau_star: f64,
    pub cost_star: f64,
    pub tau_max: f64,
    pub evaluations: usize,
    pub indicators: EpidemicIndicators,
    /// Epidemic duration minus the optimal program length.
    pub duration_minus_tau_star: f64,
    pub events: Vec<EventRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProcureSummary {
    pub tau_double_star: f64,
    pub m_double_star: f64,
    pub cost: f64,
    pub evaluations: usize,
    pub indicators: EpidemicIndicators,
    pub events: Vec<EventRecord>,
}

pub fn run_simulate(
    cfg: &ScenarioConfig,
    tau: f64,
    csv: &Path,
    json: &Path,
) -> Result<SimulateSummary, CliError> {
    let sc = cfg.scenario();
    if !(0.0..=sc.horizon).contains(&tau) {
        return Err(CliError::Validation(format!(
            "tau: must lie in [0, {}], got {tau}",
            sc.horizon
        )));
    }
    let eval = objective_with(tau, &sc, &cfg.resources, &cfg.tolerances, cfg.cost_horizon)?;
    let traj = &eval.trajectory;
    let summary = SimulateSummary {
        tau,
        resources: cfg.resources,
        objective: eval.cost,
        feasible: eval.feasible,
        indicators: default_indicators(traj),
        events: event_records(traj),
    };
    write_text(csv, &trajectory_csv(traj, cfg.population))?;
    write_json(json, &summary)?;
    Ok(summary)
}

fn optimize(cfg: &ScenarioConfig, resources: &Resources) -> Result<OptimizationResult, CliError> {
    Ok(minimize_tau_with(
        &cfg.scenario(),
        resources,
        &cfg.tolerances,
        &cfg.search(),
    )?)
}

pub fn run_optimize(cfg: &ScenarioConfig, csv: &Path, json: &Path) -> Result<OptimizeSummary, CliError> {
    let res = optimize(cfg, &cfg.resources)?;
    let summary = OptimizeSummary {
        tau_star: res.tau_star,
        cost_star: res.cost_star,
        tau_max: res.tau_max,
        evaluations: res.evaluations,
        indicators: res.indicators,
        duration_minus_tau_star: res.indicators.duration - res.tau_star,
        events: event_records(&res.trajectory),
    };
    write_text(csv, &trajectory_csv(&res.trajectory, cfg.population))?;
    write_json(json, &summary)?;
    Ok(summary)
}

pub fn run_procure(cfg: &ScenarioConfig, csv: &Path, json: &Path) -> Result<ProcureSummary, CliError> {
    let plan = procurement_plan(
        &cfg.scenario(),
        cfg.resources.k,
        cfg.resources.l,
        &cfg.tolerances,
        cfg.opt_tol,
    )?;
    let opt = &plan.optimum;
    let summary = ProcureSummary {
        tau_double_star: plan.tau,
        m_double_star: plan.vaccine,
        cost: opt.cost_star,
        evaluations: opt.evaluations,
        indicators: opt.indicators,
        events: event_records(&opt.trajectory),
    };
    write_text(csv, &trajectory_csv(&opt.trajectory, cfg.population))?;
    write_json(json, &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Tau,
    K,
    L,
    M,
    A,
    B,
    C,
    Eps,
    R,
}

impl std::str::FromStr for SweepParam {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "tau" => SweepParam::Tau,
            "k" => SweepParam::K,
            "l" => SweepParam::L,
            "m" => SweepParam::M,
            "a" => SweepParam::A,
            "b" => SweepParam::B,
            "c" => SweepParam::C,
            "eps" => SweepParam::Eps,
            "r" => SweepParam::R,
            other => {
                return Err(CliError::Validation(format!(
                    "unknown sweep parameter '{other}' (expected tau, k, l, m, a, b, c, eps or r)"
                )))
            }
        })
    }
}

impl SweepParam {
    fn apply(self, cfg: &mut ScenarioConfig, x: f64) {
        match self {
            SweepParam::Tau => {}
            SweepParam::K => cfg.resources.k = x,
            SweepParam::L => cfg.resources.l = x,
            SweepParam::M => cfg.resources.m = x,
            SweepParam::A => cfg.cost.a = x,
            SweepParam::B => cfg.cost.b = x,
            SweepParam::C => cfg.cost.c = x,
            SweepParam::Eps => cfg.epidemic.eps = x,
            SweepParam::R => cfg.epidemic.r = x,
        }
    }
}

/// Parse a comma list (`0.5,2.949`) or an inclusive range (`0:0.5:15`).
pub fn parse_values(text: &str) -> Result<Vec<f64>, CliError> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let bad = |s: &str| CliError::Validation(format!("values: cannot parse '{s}'"));
    let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(s));
    if text.contains(':') && !text.contains(',') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(bad(text));
        }
        let (start, step, end) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
        if !(start.is_finite() && end.is_finite() && step.is_finite() && step > 0.0 && end >= start) {
            return Err(CliError::Validation(format!(
                "values: range '{text}' needs step > 0 and end >= start"
            )));
        }
        let n = ((end - start) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|j| start + j as f64 * step).collect());
    }
    text.split(',').map(parse).collect()
}

pub fn run_sweep(
    cfg: &ScenarioConfig,
    param: SweepParam,
    values: &[f64],
    fixed_tau: Option<f64>,
    csv: &Path,
) -> Result<Vec<SweepRow>, CliError> {
    let mut variants = Vec::with_capacity(values.len());
    for &x in values {
        let mut c = cfg.clone();
        param.apply(&mut c, x);
        c.validate()?;
        let tau = if param == SweepParam::Tau { Some(x) } else { fixed_tau };
        if let Some(t) = tau {
            if !(0.0..=c.horizon).contains(&t) {
                return Err(CliError::Validation(format!(
                    "tau: must lie in [0, {}], got {t}",
                    c.horizon
                )));
            }
        }
        variants.push((x, c, tau));
    }

    let rows: Vec<SweepRow> = variants
        .par_iter()
        .map(|(x, c, tau)| -> Result<SweepRow, CliError> {
            match tau {
                Some(t) => {
                    let e = objective_with(*t, &c.scenario(), &c.resources, &c.tolerances, c.cost_horizon)?;
                    Ok(SweepRow {
                        value: *x,
                        tau: *t,
                        objective: e.cost,
                        indicators: default_indicators(&e.trajectory),
                    })
                }
                None => {
                    let r = optimize(c, &c.resources)?;
                    Ok(SweepRow {
                        value: *x,
                        tau: r.tau_star,
                        objective: r.cost_star,
                        indicators: r.indicators,
                    })
                }
            }
        })
        .collect::<Result<_, _>>()?;
    write_text(csv, &sweep_csv(&rows))?;
    Ok(rows)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { source, tau, out } => {
            let cfg = source.load()?;
            let (csv, json) = out.resolve(&cfg, "simulate");
            run_simulate(&cfg, tau, &csv, &json)?;
        }
        Command::Optimize { source, out } => {
            let cfg = source.load()?;
            let (csv, json) = out.resolve(&cfg, "optimize");
            run_optimize(&cfg, &csv, &json)?;
        }
        Command::Procure { source, out } => {
            let cfg = source.load()?;
            let (csv, json) = out.resolve(&cfg, "procure");
            run_procure(&cfg, &csv, &json)?;
        }
        Command::Sweep {
            source,
            param,
            values,
            tau,
            csv,
        } => {
            let param: SweepParam = param.parse()?;
            let values = parse_values(&values)?;
            let cfg = source.load()?;
            let csv = csv
                .or_else(|| cfg.output.csv.clone())
                .unwrap_or_else(|| PathBuf::from("sweep.csv"));
            run_sweep(&cfg, param, &values, tau, &csv)?;
        }
        Command::Init { preset, out } => {
            let cfg = ScenarioConfig::preset(&preset)?;
            write_text(&out, &(cfg.to_json() + "\n"))?;
        }
    }
    Ok(())
}

/// Run the tool with the given arguments and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn main() -> i32 {
    run(std::env::args_os())
}
