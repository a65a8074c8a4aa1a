// Copyright 2026 The robustctl Authors
// SPDX-License-Identifier: Apache-2.0

//! Command-line front end.
//!
//! Settings come from an optional JSON config file ([`RunConfig`]) and are
//! overridden by flags. Exit codes: 0 success, 1 error, 2 a negative result
//! (lemma conditions fail, optimizer did not converge, no recurrence found,
//! a min-time cell did not converge).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::algebra::{
    lie_closure, recurrence_defect_at, recurrence_time, system_generators, DEFAULT_CLOSURE_TOL,
    DEFAULT_MAX_DEPTH,
};
use crate::ensemble::{lemma_check_configs, make_grid, LemmaOptions};
use crate::error::{Error, Result};
use crate::evaluate::{min_control_time, sweep_param, MinTimeOptions, DEFAULT_SWEEP_POINTS};
use crate::gates::resolve_gate;
use crate::grape::{optimize, Metric, OptimizationReport, OptimizerConfig};
use crate::io;
use crate::models::ControlSystem;
use crate::polyapprox::{fit_odd_constant, sup_error_table};
use crate::qmat::CMatrix;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "ROBUSTCTL_THREADS";

/// Exit code for a negative but well-formed result.
pub const EXIT_NEGATIVE: i32 = 2;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub omega0: f64,
    pub omega1: f64,
    pub n: usize,
    /// Parameter the grid runs over; defaults to the system's only
    /// parameter, or `omega`.
    pub param: Option<String>,
    /// Values of the remaining parameters.
    pub fixed: BTreeMap<String, f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            omega0: 1.0,
            omega1: 2.0,
            n: 11,
            param: None,
            fixed: BTreeMap::new(),
        }
    }
}

/// Contents of a `--config` file. Every field is optional.
///
/// ```json
/// {
///   "system": "E",
///   "grid": {"omega0": 1.0, "omega1": 2.0, "n": 11},
///   "target": "CNOT",
///   "optimizer": {"total_time": 32, "n_segments": 128, "restarts": 20, "seed": 7},
///   "sweep_points": 1001,
///   "epsilons": [0.01, 0.001],
///   "n_values": [1, 3, 5],
///   "t_max": 40,
///   "output_dir": "out"
/// }
/// ```
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Catalog name or path to a JSON system definition.
    pub system: String,
    pub grid: GridConfig,
    /// Gate name or path to a JSON gate file.
    pub target: String,
    pub optimizer: OptimizerConfig,
    pub sweep_points: usize,
    pub epsilons: Vec<f64>,
    pub n_values: Vec<usize>,
    pub t_max: usize,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            system: "A".into(),
            grid: GridConfig::default(),
            target: "CNOT".into(),
            optimizer: OptimizerConfig::default(),
            sweep_points: DEFAULT_SWEEP_POINTS,
            epsilons: vec![1e-2, 1e-3],
            n_values: vec![1, 3, 5],
            t_max: 40,
            output_dir: PathBuf::from("."),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "robustctl",
    version,
    about = "Robust control of qubit systems with unknown drift parameters"
)]
pub struct Cli {
    /// Worker threads (overrides ROBUSTCTL_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the ensemble controllability conditions on a grid.
    Analyze(Common),
    /// Find a robust pulse with ensemble GRAPE.
    Optimize(OptimizeArgs),
    /// Evaluate a pulse over the continuous interval.
    Sweep(SweepArgs),
    /// Minimum integer control time for each grid size and error.
    Mintime(MintimeArgs),
    /// Odd-polynomial approximation of a constant.
    Polyfit(PolyfitArgs),
    /// ε-recurrence time of a drift Hamiltonian.
    Recurrence(RecurrenceArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Catalog name (A, A-variant, B, C, D, E, 1q-wX, 1q-XwY, 1q-XwZ) or a
    /// JSON system file.
    #[arg(long)]
    pub system: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub omega0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub omega1: Option<f64>,
    /// Number of grid points.
    #[arg(long = "n")]
    pub n: Option<usize>,
    /// Parameter the grid runs over.
    #[arg(long)]
    pub grid_param: Option<String>,
    /// Fixed parameter value, `name=value`; repeatable.
    #[arg(long = "param", value_parser = parse_assignment)]
    pub params: Vec<(String, f64)>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct OptimizerFlags {
    /// Gate name (CNOT, CZ, SWAP, identity, X, Z, H) or a JSON gate file.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub total_time: Option<f64>,
    #[arg(long)]
    pub segments: Option<usize>,
    /// literal or phase_insensitive.
    #[arg(long)]
    pub metric: Option<Metric>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub amplitude_bound: Option<f64>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub opt: OptimizerFlags,
    /// Also sweep the result over the interval.
    #[arg(long)]
    pub sweep: bool,
    /// Include the wall time in report.json (it is always printed on stderr).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// Pulse CSV to evaluate.
    #[arg(long)]
    pub pulse: PathBuf,
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub amplitude_bound: Option<f64>,
}

#[derive(Debug, Args)]
pub struct MintimeArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub opt: OptimizerFlags,
    /// Comma-separated allowed errors, largest first.
    #[arg(long, value_delimiter = ',')]
    pub epsilons: Option<Vec<f64>>,
    /// Comma-separated grid sizes.
    #[arg(long, value_delimiter = ',')]
    pub n_values: Option<Vec<usize>>,
    #[arg(long)]
    pub t_max: Option<usize>,
    /// Checkpoint file (default: <out>/mintime_checkpoint.json).
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub no_checkpoint: bool,
}

#[derive(Debug, Args)]
pub struct PolyfitArgs {
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub omega0: f64,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub omega1: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub theta: f64,
    /// Largest degree index K; fits for 0..=K are tabulated.
    #[arg(long, default_value_t = 40)]
    pub k_max: usize,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Accepted for uniformity; the fit is deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RecurrenceArgs {
    /// Diagonal Hamiltonian given by its eigenvalues (comma-separated).
    #[arg(
        long,
        value_delimiter = ',',
        conflicts_with = "system",
        allow_negative_numbers = true
    )]
    pub eigenvalues: Option<Vec<f64>>,
    /// Use the drift of this system at the `--param` values.
    #[arg(long)]
    pub system: Option<String>,
    #[arg(long = "param", value_parser = parse_assignment)]
    pub params: Vec<(String, f64)>,
    #[arg(long)]
    pub eps: f64,
    #[arg(long)]
    pub t_max: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub dt: f64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Accepted for uniformity; the search is deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
}

fn parse_assignment(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    let v: f64 = v
        .trim()
        .parse()
        .map_err(|_| format!("bad number in `{s}`"))?;
    Ok((k.trim().to_string(), v))
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
        }
    }
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = load_config(self.config.as_deref())?;
        if let Some(s) = &self.system {
            cfg.system = s.clone();
        }
        if let Some(v) = self.omega0 {
            cfg.grid.omega0 = v;
        }
        if let Some(v) = self.omega1 {
            cfg.grid.omega1 = v;
        }
        if let Some(v) = self.n {
            cfg.grid.n = v;
        }
        if let Some(p) = &self.grid_param {
            cfg.grid.param = Some(p.clone());
        }
        for (k, v) in &self.params {
            cfg.grid.fixed.insert(k.clone(), *v);
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        if let Some(s) = self.seed {
            cfg.optimizer.seed = s;
        }
        Ok(cfg)
    }
}

impl OptimizerFlags {
    fn apply(&self, cfg: &mut RunConfig) {
        let o = &mut cfg.optimizer;
        if let Some(t) = &self.target {
            cfg.target = t.clone();
        }
        if let Some(v) = self.total_time {
            o.total_time = v;
        }
        if let Some(v) = self.segments {
            o.n_segments = v;
        }
        if let Some(v) = self.metric {
            o.metric = v;
        }
        if let Some(v) = self.restarts {
            o.restarts = v;
        }
        if let Some(v) = self.max_iter {
            o.max_iter = v;
        }
        if let Some(v) = self.threshold {
            o.threshold = v;
        }
        if let Some(v) = self.amplitude_bound {
            o.amplitude_bound = v;
        }
    }
}

/// A catalog name or a system file.
pub fn load_system(spec: &str) -> Result<ControlSystem> {
    match ControlSystem::named(spec) {
        Err(Error::UnknownSystem(_)) if Path::new(spec).exists() => {
            ControlSystem::from_json(&std::fs::read_to_string(spec)?)
        }
        other => other,
    }
}

/// Index of the gridded parameter and the base parameter vector.
fn grid_layout(system: &ControlSystem, grid: &GridConfig) -> Result<(usize, Vec<f64>)> {
    let names: Vec<&str> = system.params().iter().map(|p| p.name.as_str()).collect();
    if names.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "system {} has no unknown parameter to grid over",
            system.name()
        )));
    }
    let wanted = match &grid.param {
        Some(p) => p.as_str(),
        None if names.len() == 1 => names[0],
        None => "omega",
    };
    let index = names.iter().position(|n| *n == wanted).ok_or_else(|| {
        Error::Config(format!(
            "system {} has no parameter `{wanted}`",
            system.name()
        ))
    })?;
    for k in grid.fixed.keys() {
        if !names.contains(&k.as_str()) {
            return Err(Error::Config(format!(
                "system {} has no parameter `{k}`",
                system.name()
            )));
        }
    }
    let base = names
        .iter()
        .enumerate()
        .map(|(i, n)| {
            if i == index {
                Ok(grid.omega0)
            } else {
                grid.fixed.get(*n).copied().ok_or_else(|| {
                    Error::Config(format!("parameter `{n}` needs a value (--param {n}=...)"))
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((index, base))
}

struct Setup {
    cfg: RunConfig,
    system: ControlSystem,
    index: usize,
    base: Vec<f64>,
    grid_points: Vec<f64>,
    configs: Vec<Vec<f64>>,
}

fn setup(cfg: RunConfig) -> Result<Setup> {
    let system = load_system(&cfg.system)?;
    let (index, base) = grid_layout(&system, &cfg.grid)?;
    let grid = make_grid(cfg.grid.omega0, cfg.grid.omega1, cfg.grid.n)?;
    let configs: Vec<Vec<f64>> = grid
        .points()
        .iter()
        .map(|&w| {
            let mut p = base.clone();
            p[index] = w;
            p
        })
        .collect();
    for p in &configs {
        system.check_params(p)?;
    }
    std::fs::create_dir_all(&cfg.output_dir)?;
    Ok(Setup {
        grid_points: grid.points().to_vec(),
        cfg,
        system,
        index,
        base,
        configs,
    })
}

fn cmd_analyze(args: &Common) -> Result<i32> {
    let s = setup(args.resolve()?)?;
    let report = lemma_check_configs(&s.system, &s.configs, &LemmaOptions::default())?;
    let mut closures = Vec::new();
    for p in &s.configs {
        let basis = lie_closure(
            &system_generators(&s.system, p)?,
            DEFAULT_CLOSURE_TOL,
            DEFAULT_MAX_DEPTH,
        )?;
        closures.push(json!({
            "params": p,
            "dim": basis.dim(),
            "sweeps": basis.sweeps,
            "generation_log": basis.generation_log,
        }));
    }
    let out = json!({ "lemma": report, "closures": closures });
    io::write_json(&s.cfg.output_dir.join("analysis.json"), &out)?;
    eprintln!(
        "condition (1): {}  condition (2): {}  extended dim {}/{}",
        report.condition1, report.condition2, report.extended_dim, report.max_extended_dim
    );
    Ok(if report.both_conditions() {
        0
    } else {
        EXIT_NEGATIVE
    })
}

/// Report JSON without the wall time unless `timing` is set, so identical
/// runs produce identical files.
pub fn report_json(report: &OptimizationReport, timing: bool) -> Result<String> {
    let mut v = serde_json::to_value(report)?;
    if !timing {
        if let Some(obj) = v.as_object_mut() {
            obj.remove("wall_time");
        }
    }
    io::to_json_string(&v)
}

fn write_spectrum(
    s: &Setup,
    schedule: &crate::grape::PulseSchedule,
    target: &CMatrix,
    pulse_ref: &str,
) -> Result<f64> {
    let mut spectrum = sweep_param(
        &s.system,
        schedule,
        target,
        &s.base,
        s.index,
        (s.cfg.grid.omega0, s.cfg.grid.omega1),
        s.cfg.sweep_points,
        &s.grid_points,
    )?;
    spectrum.schedule_ref = pulse_ref.to_string();
    spectrum.target_ref = s.cfg.target.clone();
    let mut buf = Vec::new();
    io::write_spectrum_csv(&mut buf, &spectrum)?;
    std::fs::write(s.cfg.output_dir.join("spectrum.csv"), buf)?;
    let lipschitz = s.system.drift_slope(s.index).op_norm();
    let summary = spectrum.summary(lipschitz, schedule.total_time());
    io::write_json(&s.cfg.output_dir.join("spectrum_summary.json"), &summary)?;
    Ok(summary.max_error_phase_insensitive)
}

fn cmd_optimize(args: &OptimizeArgs) -> Result<i32> {
    let mut cfg = args.common.resolve()?;
    args.opt.apply(&mut cfg);
    let s = setup(cfg)?;
    let target = resolve_gate(&s.cfg.target, s.system.dim())?;
    let report = optimize(&s.system, &s.configs, &target, &s.cfg.optimizer)?;
    io::save_pulse(&s.cfg.output_dir.join("pulse.csv"), &report.schedule)?;
    std::fs::write(
        s.cfg.output_dir.join("report.json"),
        report_json(&report, args.timing)?,
    )?;
    eprintln!(
        "converged: {}  max error {:.3e}  restarts {}  wall time {:.2}s",
        report.converged, report.max_error, report.restarts_used, report.wall_time
    );
    if args.sweep {
        let worst = write_spectrum(&s, &report.schedule, &target, "pulse.csv")?;
        eprintln!("sweep max error {worst:.3e}");
    }
    Ok(if report.converged { 0 } else { EXIT_NEGATIVE })
}

fn cmd_sweep(args: &SweepArgs) -> Result<i32> {
    let mut cfg = args.common.resolve()?;
    if let Some(t) = &args.target {
        cfg.target = t.clone();
    }
    if let Some(p) = args.points {
        cfg.sweep_points = p;
    }
    if let Some(b) = args.amplitude_bound {
        cfg.optimizer.amplitude_bound = b;
    }
    let s = setup(cfg)?;
    let target = resolve_gate(&s.cfg.target, s.system.dim())?;
    let schedule = io::load_pulse(&args.pulse, s.cfg.optimizer.amplitude_bound)?;
    if schedule.n_controls() != s.system.n_controls() {
        return Err(Error::PulseFormat(format!(
            "pulse has {} control columns, system {} has {} controls",
            schedule.n_controls(),
            s.system.name(),
            s.system.n_controls()
        )));
    }
    let worst = write_spectrum(&s, &schedule, &target, &args.pulse.display().to_string())?;
    eprintln!("sweep max error {worst:.3e}");
    Ok(0)
}

fn cmd_mintime(args: &MintimeArgs) -> Result<i32> {
    let mut cfg = args.common.resolve()?;
    args.opt.apply(&mut cfg);
    if let Some(e) = &args.epsilons {
        cfg.epsilons = e.clone();
    }
    if let Some(n) = &args.n_values {
        cfg.n_values = n.clone();
    }
    if let Some(t) = args.t_max {
        cfg.t_max = t;
    }
    let s = setup(cfg)?;
    if s.system.n_params() != 1 {
        return Err(Error::InvalidArgument(
            "mintime needs a single-parameter system".into(),
        ));
    }
    let target = resolve_gate(&s.cfg.target, s.system.dim())?;
    let o = &s.cfg.optimizer;
    let opts = MinTimeOptions {
        interval: (s.cfg.grid.omega0, s.cfg.grid.omega1),
        epsilons: s.cfg.epsilons.clone(),
        n_values: s.cfg.n_values.clone(),
        t_max: s.cfg.t_max,
        segments_per_time: o.n_segments as f64 / o.total_time,
    };
    let checkpoint = if args.no_checkpoint {
        None
    } else {
        Some(
            args.checkpoint
                .clone()
                .unwrap_or_else(|| s.cfg.output_dir.join("mintime_checkpoint.json")),
        )
    };
    let table = min_control_time(
        &s.system,
        &target,
        &s.cfg.target,
        &opts,
        o,
        checkpoint.as_deref(),
    )?;
    let mut buf = Vec::new();
    io::write_mintime_csv(&mut buf, &table.rows)?;
    std::fs::write(s.cfg.output_dir.join("mintime.csv"), buf)?;
    let all = table.rows.iter().all(|r| r.converged);
    Ok(if all { 0 } else { EXIT_NEGATIVE })
}

fn cmd_polyfit(args: &PolyfitArgs) -> Result<i32> {
    let interval = (args.omega0, args.omega1);
    let ks: Vec<usize> = (0..=args.k_max).collect();
    let table = sup_error_table(interval, args.theta, &ks)?;
    std::fs::create_dir_all(&args.out)?;
    let mut buf = Vec::new();
    io::write_polyfit_csv(&mut buf, &table)?;
    std::fs::write(args.out.join("polyfit.csv"), buf)?;
    let best = fit_odd_constant(interval, args.k_max, args.theta)?;
    io::write_json(
        &args.out.join("polyfit.json"),
        &json!({ "table": table, "fit": best }),
    )?;
    Ok(0)
}

fn cmd_recurrence(args: &RecurrenceArgs) -> Result<i32> {
    let h = match (&args.eigenvalues, &args.system) {
        (Some(ev), None) => CMatrix::from_real_diagonal(ev),
        (None, Some(name)) => {
            let system = load_system(name)?;
            let params = system
                .params()
                .iter()
                .map(|p| {
                    args.params
                        .iter()
                        .find(|(k, _)| *k == p.name)
                        .map(|(_, v)| *v)
                        .ok_or_else(|| {
                            Error::Config(format!("parameter `{}` needs a value", p.name))
                        })
                })
                .collect::<Result<Vec<_>>>()?;
            system.eval_drift(&params)?
        }
        _ => {
            return Err(Error::InvalidArgument(
                "give either --eigenvalues or --system".into(),
            ))
        }
    };
    let t = recurrence_time(&h, args.eps, args.t_max, args.dt)?;
    let defect = t.map(|t| recurrence_defect_at(&h, t)).transpose()?;
    std::fs::create_dir_all(&args.out)?;
    io::write_json(
        &args.out.join("recurrence.json"),
        &json!({ "found": t.is_some(), "t": t, "defect": defect, "eps": args.eps, "t_max": args.t_max, "dt": args.dt }),
    )?;
    Ok(if t.is_some() { 0 } else { EXIT_NEGATIVE })
}

fn dispatch(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Analyze(a) => cmd_analyze(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Mintime(a) => cmd_mintime(a),
        Command::Polyfit(a) => cmd_polyfit(a),
        Command::Recurrence(a) => cmd_recurrence(a),
    }
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v.trim().parse().map(Some).map_err(|_| {
            Error::Config(format!(
                "{THREADS_ENV} must be a positive integer, got `{v}`"
            ))
        }),
        _ => Ok(None),
    }
}

/// Runs the command line `args` (including the program name) and returns the
/// process exit code. Errors are printed on stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = thread_count(cli.threads).and_then(|threads| match threads {
        Some(0) => Err(Error::Config("thread count must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(|| dispatch(&cli)),
        None => dispatch(&cli),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
