// Copyright 2026 The robustctl Authors
// SPDX-License-Identifier: Apache-2.0

//! Robustness over the continuous parameter interval: error sweeps, the
//! propagator Lipschitz bound, and minimum control time searches.
//!
//! The Lipschitz bound `‖U_a(T) − U_b(T)‖ ≤ T‖H_d(a) − H_d(b)‖` also bounds
//! how far either gate error can move between two sweep points, which turns a
//! finite sweep into a statement about the whole interval (see
//! [`SpectrumSummary`]).

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::make_grid;
use crate::error::{Error, Result};
use crate::grape::{self, optimize_from, OptimizerConfig, PulseSchedule};
use crate::models::ControlSystem;
use crate::qmat::CMatrix;

/// Default number of sweep points.
pub const DEFAULT_SWEEP_POINTS: usize = 1001;
/// Slack allowed in [`bound_check`].
pub const BOUND_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct ErrorSpectrum {
    pub omegas: Vec<f64>,
    pub errors_literal: Vec<f64>,
    pub errors_phase_insensitive: Vec<f64>,
    /// Whether the row is one of the optimization grid points.
    pub grid_point: Vec<bool>,
    pub schedule_ref: String,
    pub target_ref: String,
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

impl ErrorSpectrum {
    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn max_literal(&self) -> f64 {
        max_of(&self.errors_literal)
    }

    pub fn max_phase_insensitive(&self) -> f64 {
        max_of(&self.errors_phase_insensitive)
    }

    /// Largest gap between consecutive sweep points.
    pub fn max_spacing(&self) -> f64 {
        self.omegas
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Worst-case errors anywhere in the swept interval, given the drift
    /// Lipschitz constant `‖∂H_d/∂ω‖` and the schedule duration.
    pub fn summary(&self, lipschitz: f64, total_time: f64) -> SpectrumSummary {
        let slack = 0.5 * self.max_spacing() * total_time * lipschitz;
        let grid = |errs: &[f64]| {
            errs.iter()
                .zip(&self.grid_point)
                .filter(|(_, g)| **g)
                .map(|(e, _)| *e)
                .fold(f64::NEG_INFINITY, f64::max)
        };
        SpectrumSummary {
            schedule_ref: self.schedule_ref.clone(),
            target_ref: self.target_ref.clone(),
            n_points: self.len(),
            interval: (self.omegas[0], self.omegas[self.len() - 1]),
            max_spacing: self.max_spacing(),
            lipschitz,
            total_time,
            max_error_literal: self.max_literal(),
            max_error_phase_insensitive: self.max_phase_insensitive(),
            max_grid_error_literal: grid(&self.errors_literal),
            max_grid_error_phase_insensitive: grid(&self.errors_phase_insensitive),
            certified_bound_literal: self.max_literal() + slack,
            certified_bound_phase_insensitive: self.max_phase_insensitive() + slack,
        }
    }
}

/// Sweep maxima plus bounds valid for every ω in the interval:
/// `max_error + (Δω/2)·T·‖∂H_d/∂ω‖`, with `Δω` the largest sweep spacing.
/// Both metrics move by at most `‖U_a − U_b‖` between two points.
#[derive(Clone, Debug, Serialize)]
pub struct SpectrumSummary {
    pub schedule_ref: String,
    pub target_ref: String,
    pub n_points: usize,
    pub interval: (f64, f64),
    pub max_spacing: f64,
    pub lipschitz: f64,
    pub total_time: f64,
    pub max_error_literal: f64,
    pub max_error_phase_insensitive: f64,
    pub max_grid_error_literal: f64,
    pub max_grid_error_phase_insensitive: f64,
    pub certified_bound_literal: f64,
    pub certified_bound_phase_insensitive: f64,
}

/// Uniform points on `interval` with every grid point inserted exactly: a
/// uniform point within `1e-9` of a grid point is replaced by it, otherwise
/// the grid point is added.
fn sweep_points(interval: (f64, f64), n_points: usize, grid: &[f64]) -> (Vec<f64>, Vec<bool>) {
    let (a, b) = interval;
    let step = (b - a) / (n_points - 1) as f64;
    let mut pts: Vec<(f64, bool)> = (0..n_points)
        .map(|k| {
            (
                if k == n_points - 1 {
                    b
                } else {
                    a + step * k as f64
                },
                false,
            )
        })
        .collect();
    let tol = 1e-9 * (b - a).abs().max(1.0);
    for &g in grid {
        if g < a - tol || g > b + tol {
            continue;
        }
        match pts.iter_mut().find(|(p, _)| (*p - g).abs() <= tol) {
            Some(slot) => *slot = (g, true),
            None => pts.push((g, true)),
        }
    }
    pts.sort_by(|x, y| x.0.total_cmp(&y.0));
    pts.dedup_by(|x, y| x.0 == y.0);
    pts.into_iter().unzip()
}

/// Error spectrum of `schedule` as one parameter varies over `interval`.
///
/// `base` gives the values of all parameters; entry `index` is swept. Rows at
/// `grid` values reproduce the optimizer's per-point errors bit for bit.
#[allow(clippy::too_many_arguments)]
pub fn sweep_param(
    system: &ControlSystem,
    schedule: &PulseSchedule,
    target: &CMatrix,
    base: &[f64],
    index: usize,
    interval: (f64, f64),
    n_points: usize,
    grid: &[f64],
) -> Result<ErrorSpectrum> {
    if n_points < 2 {
        return Err(Error::InvalidArgument(
            "a sweep needs at least 2 points".into(),
        ));
    }
    let (a, b) = interval;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::Interval(a, b));
    }
    if base.len() != system.n_params() {
        return Err(Error::Arity {
            expected: system.n_params(),
            got: base.len(),
        });
    }
    if index >= base.len() {
        return Err(Error::InvalidArgument(format!(
            "no parameter with index {index}"
        )));
    }
    let (omegas, grid_point) = sweep_points(interval, n_points, grid);
    let errs: Vec<(f64, f64)> = omegas
        .par_iter()
        .map(|&w| {
            let mut p = base.to_vec();
            p[index] = w;
            grape::point_errors(system, &p, target, schedule, false)
        })
        .collect::<Result<_>>()?;
    let (errors_literal, errors_phase_insensitive) = errs.into_iter().unzip();
    Ok(ErrorSpectrum {
        omegas,
        errors_literal,
        errors_phase_insensitive,
        grid_point,
        schedule_ref: String::new(),
        target_ref: String::new(),
    })
}

/// [`sweep_param`] for a single-parameter system.
pub fn sweep(
    system: &ControlSystem,
    schedule: &PulseSchedule,
    target: &CMatrix,
    interval: (f64, f64),
    n_points: usize,
    grid: &[f64],
) -> Result<ErrorSpectrum> {
    if system.n_params() != 1 {
        return Err(Error::InvalidArgument(format!(
            "system {} has {} parameters; use sweep_param",
            system.name(),
            system.n_params()
        )));
    }
    sweep_param(
        system,
        schedule,
        target,
        &[interval.0],
        0,
        interval,
        n_points,
        grid,
    )
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Compares `‖U_a(T) − U_b(T)‖` with `T‖H_d(a) − H_d(b)‖`.
pub fn bound_check(
    system: &ControlSystem,
    schedule: &PulseSchedule,
    params_a: &[f64],
    params_b: &[f64],
) -> Result<BoundCheck> {
    let ua = grape::propagate(system, params_a, schedule)?;
    let ub = grape::propagate(system, params_b, schedule)?;
    let lhs = (&ua - &ub).op_norm();
    let dh = &system.eval_drift(params_a)? - &system.eval_drift(params_b)?;
    let rhs = schedule.total_time() * dh.op_norm();
    Ok(BoundCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + BOUND_SLACK,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinTimeRow {
    pub n: usize,
    pub epsilon: f64,
    pub t: usize,
    pub converged: bool,
    pub restarts_used: usize,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct MinTimeTable {
    pub rows: Vec<MinTimeRow>,
}

impl MinTimeTable {
    /// For every N, T never decreases as ε decreases.
    pub fn is_monotone(&self) -> bool {
        self.rows.iter().all(|r| {
            self.rows
                .iter()
                .filter(|s| s.n == r.n && s.epsilon < r.epsilon)
                .all(|s| s.t >= r.t)
        })
    }
}

/// Settings for [`min_control_time`] beyond the optimizer configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinTimeOptions {
    pub interval: (f64, f64),
    /// Sorted in descending order.
    pub epsilons: Vec<f64>,
    pub n_values: Vec<usize>,
    pub t_max: usize,
    /// Segments per unit time; a run at time T uses `round(T·density)`
    /// segments (at least one).
    pub segments_per_time: f64,
}

/// Resumable state of a [`min_control_time`] run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub system: String,
    pub target: String,
    pub seed: u64,
    pub options: MinTimeOptions,
    pub config: OptimizerConfig,
    pub entries: Vec<CheckpointEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckpointEntry {
    pub row: MinTimeRow,
    /// Schedule that met the threshold, used to warm-start the next ε.
    pub schedule: Option<PulseSchedule>,
}

impl Checkpoint {
    fn matches(&self, other: &Checkpoint) -> bool {
        self.system == other.system
            && self.target == other.target
            && self.seed == other.seed
            && self.options == other.options
            && self.config == other.config
    }

    fn find(&self, n: usize, epsilon: f64) -> Option<&CheckpointEntry> {
        self.entries
            .iter()
            .find(|e| e.row.n == n && e.row.epsilon.to_bits() == epsilon.to_bits())
    }

    fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, crate::io::to_json_string(self)?.as_bytes())
    }
}

fn validate_mintime(opts: &MinTimeOptions) -> Result<()> {
    if opts.n_values.is_empty() {
        return Err(Error::InvalidArgument("N list is empty".into()));
    }
    if opts.n_values.contains(&0) {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    if opts.epsilons.is_empty() {
        return Err(Error::InvalidArgument("epsilon list is empty".into()));
    }
    if opts.epsilons.iter().any(|e| e.is_nan() || *e <= 0.0) {
        return Err(Error::InvalidArgument("epsilons must be positive".into()));
    }
    if opts.epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(
            "epsilons must be strictly decreasing".into(),
        ));
    }
    if opts.t_max == 0 {
        return Err(Error::InvalidArgument("t_max must be at least 1".into()));
    }
    if !(opts.segments_per_time > 0.0 && opts.segments_per_time.is_finite()) {
        return Err(Error::InvalidArgument(
            "segments_per_time must be positive".into(),
        ));
    }
    Ok(())
}

/// Smallest integer control time reaching each ε on each grid size.
///
/// For fixed N the epsilons are processed from largest to smallest; the
/// search for a smaller ε starts at the time found for the previous one and
/// warm-starts from its schedule, so the table is monotone by construction.
/// If a larger ε is not reached by `t_max`, smaller ones are recorded as
/// unreached without further search.
///
/// With `checkpoint`, finished rows are stored after each (N, ε) cell and
/// reused when the same run is started again.
pub fn min_control_time(
    system: &ControlSystem,
    target: &CMatrix,
    target_name: &str,
    opts: &MinTimeOptions,
    config: &OptimizerConfig,
    checkpoint: Option<&Path>,
) -> Result<MinTimeTable> {
    validate_mintime(opts)?;
    let mut state = Checkpoint {
        system: system.name().to_string(),
        target: target_name.to_string(),
        seed: config.seed,
        options: opts.clone(),
        config: config.clone(),
        entries: Vec::new(),
    };
    if let Some(path) = checkpoint.filter(|p| p.exists()) {
        let text = std::fs::read_to_string(path)?;
        let saved: Checkpoint = serde_json::from_str(&text)?;
        if !saved.matches(&state) {
            return Err(Error::Config(format!(
                "checkpoint {} belongs to a different run",
                path.display()
            )));
        }
        state.entries = saved.entries;
    }

    let mut table = MinTimeTable::default();
    for &n in &opts.n_values {
        let configs = make_grid(opts.interval.0, opts.interval.1, n)?.configs();
        let mut lower = 1;
        let mut warm: Option<PulseSchedule> = None;
        for &eps in &opts.epsilons {
            if let Some(done) = state.find(n, eps) {
                lower = done.row.t;
                warm = done.schedule.clone();
                if !done.row.converged {
                    lower = opts.t_max + 1;
                }
                table.rows.push(done.row.clone());
                continue;
            }
            let start = Instant::now();
            let mut entry = CheckpointEntry {
                row: MinTimeRow {
                    n,
                    epsilon: eps,
                    t: opts.t_max,
                    converged: false,
                    restarts_used: 0,
                    wall_time_s: 0.0,
                },
                schedule: None,
            };
            for t in lower..=opts.t_max {
                let segments = ((t as f64 * opts.segments_per_time).round() as usize).max(1);
                let cfg = OptimizerConfig {
                    total_time: t as f64,
                    n_segments: segments,
                    threshold: eps,
                    ..config.clone()
                };
                let init = warm.as_ref().filter(|w| w.n_segments() == segments);
                let report = optimize_from(system, &configs, target, &cfg, init)?;
                entry.row.restarts_used = report.restarts_used;
                if report.converged {
                    entry.row.t = t;
                    entry.row.converged = true;
                    entry.schedule = Some(report.schedule);
                    break;
                }
            }
            entry.row.wall_time_s = start.elapsed().as_secs_f64();
            lower = if entry.row.converged {
                entry.row.t
            } else {
                opts.t_max + 1
            };
            warm = entry.schedule.clone();
            table.rows.push(entry.row.clone());
            state.entries.push(entry);
            if let Some(path) = checkpoint {
                state.save(path)?;
            }
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::make_grid;
    use crate::gates::named_gate;
    use crate::grape::{ensemble_objective, Metric};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sys_a() -> ControlSystem {
        ControlSystem::named("A").unwrap()
    }

    fn random_schedule(seed: u64, t: f64, m: usize) -> PulseSchedule {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PulseSchedule::random(&mut rng, 1, t, m, 10.0).unwrap()
    }

    #[test]
    fn sweep_rows_at_grid_points_match_the_objective() {
        let s = sys_a();
        let grid = make_grid(1.0, 2.0, 11).unwrap();
        let sched = random_schedule(3, 4.0, 16);
        let target = named_gate("CNOT", 4).unwrap();
        let spec = sweep(&s, &sched, &target, (1.0, 2.0), 1001, grid.points()).unwrap();
        assert_eq!(spec.len(), 1001);
        assert_eq!(spec.grid_point.iter().filter(|g| **g).count(), 11);
        let (_, per) = ensemble_objective(
            &s,
            &grid.configs(),
            &target,
            &sched,
            Metric::PhaseInsensitive,
        )
        .unwrap();
        let (_, lit) =
            ensemble_objective(&s, &grid.configs(), &target, &sched, Metric::Literal).unwrap();
        let rows: Vec<usize> = (0..spec.len()).filter(|&i| spec.grid_point[i]).collect();
        for (k, &i) in rows.iter().enumerate() {
            assert_eq!(spec.omegas[i], grid.points()[k]);
            assert_eq!(spec.errors_phase_insensitive[i], per[k]);
            assert_eq!(spec.errors_literal[i], lit[k]);
        }
    }

    #[test]
    fn off_lattice_grid_points_are_inserted() {
        let (pts, marks) = sweep_points((1.0, 2.0), 3, &[1.25]);
        assert_eq!(pts, vec![1.0, 1.25, 1.5, 2.0]);
        assert_eq!(marks, vec![false, true, false, false]);
    }

    #[test]
    fn degenerate_sweeps_are_rejected() {
        let s = sys_a();
        let sched = random_schedule(1, 1.0, 4);
        let target = named_gate("CNOT", 4).unwrap();
        assert!(sweep(&s, &sched, &target, (1.0, 2.0), 1, &[]).is_err());
        assert!(sweep(&s, &sched, &target, (2.0, 1.0), 10, &[]).is_err());
        assert!(PulseSchedule::new(1.0, vec![vec![]], 10.0).is_err());
    }

    #[test]
    fn certified_bound_dominates_a_finer_sweep() {
        let s = sys_a();
        let sched = random_schedule(8, 2.0, 8);
        let target = named_gate("CNOT", 4).unwrap();
        let coarse = sweep(&s, &sched, &target, (1.0, 2.0), 11, &[]).unwrap();
        let fine = sweep(&s, &sched, &target, (1.0, 2.0), 2001, &[]).unwrap();
        let summary = coarse.summary(s.drift_lipschitz().unwrap(), sched.total_time());
        assert!(fine.max_literal() <= summary.certified_bound_literal);
        assert!(fine.max_phase_insensitive() <= summary.certified_bound_phase_insensitive);
    }

    #[test]
    fn bound_check_examples() {
        let s = sys_a();
        let sched = random_schedule(2, 3.0, 12);
        let same = bound_check(&s, &sched, &[1.3], &[1.3]).unwrap();
        assert_eq!(same.lhs, 0.0);
        assert!(same.holds);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for i in 0..100 {
            let sched = random_schedule(1000 + i, rng.random_range(0.0..10.0), 10);
            let a = rng.random_range(1.0..=2.0);
            let b = rng.random_range(1.0..=2.0);
            let r = bound_check(&s, &sched, &[a], &[b]).unwrap();
            // Direct oracle: the drift difference is (a − b)·XI, of norm |a − b|.
            assert!((r.rhs - sched.total_time() * (a - b).abs()).abs() < 1e-12);
            assert!(r.holds, "{r:?}");
        }
    }

    #[test]
    fn nearest_grid_point_is_within_half_a_spacing() {
        for n in 2..12 {
            let grid = make_grid(1.0, 2.0, n).unwrap();
            let half = 1.0 / (2.0 * (n - 1) as f64);
            for k in 0..=1000 {
                let w = 1.0 + k as f64 / 1000.0;
                assert!((grid.nearest(w) - w).abs() <= half + 1e-15);
            }
        }
    }

    fn quick_config() -> OptimizerConfig {
        OptimizerConfig {
            restarts: 3,
            max_iter: 300,
            seed: 5,
            ..OptimizerConfig::default()
        }
    }

    #[test]
    fn min_time_is_monotone_and_resumable() {
        let s = ControlSystem::named("1q-XwZ").unwrap();
        let target = named_gate("X", 2).unwrap();
        let opts = MinTimeOptions {
            interval: (1.0, 2.0),
            epsilons: vec![1e-2, 1e-4],
            n_values: vec![1, 2],
            t_max: 12,
            segments_per_time: 4.0,
        };
        let dir = tempfile::tempdir().unwrap();
        let ck = dir.path().join("ck.json");
        let table = min_control_time(&s, &target, "X", &opts, &quick_config(), Some(&ck)).unwrap();
        assert_eq!(table.rows.len(), 4);
        assert!(table.is_monotone());
        assert!(table.rows.iter().all(|r| r.converged), "{:?}", table.rows);

        // A second run reads every row back from the checkpoint.
        let again = min_control_time(&s, &target, "X", &opts, &quick_config(), Some(&ck)).unwrap();
        assert_eq!(again.rows, table.rows);

        // A different seed does not match the stored run.
        let other = OptimizerConfig {
            seed: 6,
            ..quick_config()
        };
        assert!(matches!(
            min_control_time(&s, &target, "X", &opts, &other, Some(&ck)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn min_time_rejects_bad_input() {
        let s = sys_a();
        let target = named_gate("CNOT", 4).unwrap();
        let base = MinTimeOptions {
            interval: (1.0, 2.0),
            epsilons: vec![1e-2],
            n_values: vec![1],
            t_max: 5,
            segments_per_time: 4.0,
        };
        let cfg = quick_config();
        let bad = [
            MinTimeOptions {
                n_values: vec![],
                ..base.clone()
            },
            MinTimeOptions {
                epsilons: vec![],
                ..base.clone()
            },
            MinTimeOptions {
                epsilons: vec![1e-3, 1e-2],
                ..base.clone()
            },
            MinTimeOptions {
                t_max: 0,
                ..base.clone()
            },
        ];
        for o in &bad {
            assert!(min_control_time(&s, &target, "CNOT", o, &cfg, None).is_err());
        }
    }
}
