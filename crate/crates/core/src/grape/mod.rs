// Copyright 2026 The robustctl Authors
// SPDX-License-Identifier: Apache-2.0

//! Piecewise-constant pulses and ensemble GRAPE.
//!
//! A schedule holds one amplitude per control and segment. Each segment is
//! exponentiated exactly through the eigendecomposition of its Hamiltonian,
//! and the same decomposition gives the exact derivative of the segment
//! propagator: for `H = V diag(λ) V†`,
//!
//! ```text
//! ∂/∂a exp(-iΔt H) = V (Φ ∘ V† H_k V) V†,
//! Φ_jl = (e^{-iΔtλ_j} − e^{-iΔtλ_l}) / (λ_j − λ_l)
//!      = −iΔt e^{-iΔt(λ_j+λ_l)/2} sinc(Δt(λ_j−λ_l)/2),
//! ```
//!
//! the second form being the one evaluated, since it has no cancellation
//! when eigenvalues are close.
//!
//! The ensemble objective is the mean gate error over parameter
//! configurations. Configurations are evaluated in parallel and reduced in
//! order, so results do not depend on the number of threads.

mod lbfgs;

use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::ControlSystem;
use crate::qmat::{c64, CMatrix, HermitianEigen};

/// Unitarity tolerance for gates passed to [`gate_error`].
pub const UNITARITY_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// `1 − Re Tr(T† U)/d`, in `[0, 2]`.
    Literal,
    /// `1 − |Tr(T† U)|/d`, in `[0, 1]`.
    #[default]
    PhaseInsensitive,
}

impl Metric {
    fn error(self, z: Complex64) -> f64 {
        match self {
            Metric::Literal => 1.0 - z.re,
            Metric::PhaseInsensitive => 1.0 - z.norm(),
        }
    }

    /// Derivative of the error given the derivative of the normalized
    /// overlap `z`.
    fn error_derivative(self, z: Complex64, dz: Complex64) -> f64 {
        match self {
            Metric::Literal => -dz.re,
            Metric::PhaseInsensitive => {
                let n = z.norm();
                if n == 0.0 {
                    0.0
                } else {
                    -(z.conj() * dz).re / n
                }
            }
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" => Ok(Metric::Literal),
            "phase_insensitive" | "phase-insensitive" => Ok(Metric::PhaseInsensitive),
            _ => Err(Error::InvalidArgument(format!("unknown metric `{s}`"))),
        }
    }
}

/// Piecewise-constant control amplitudes on uniform segments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    total_time: f64,
    n_segments: usize,
    /// `amplitudes[k][m]`: control `k`, segment `m`.
    amplitudes: Vec<Vec<f64>>,
    amplitude_bound: f64,
}

impl PulseSchedule {
    pub fn new(total_time: f64, amplitudes: Vec<Vec<f64>>, amplitude_bound: f64) -> Result<Self> {
        if !(total_time.is_finite() && total_time >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "total time must be finite and non-negative, got {total_time}"
            )));
        }
        if amplitude_bound.is_nan() || amplitude_bound <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "amplitude bound must be positive, got {amplitude_bound}"
            )));
        }
        let n_segments = amplitudes.first().map_or(0, Vec::len);
        if n_segments == 0 {
            return Err(Error::InvalidArgument(
                "schedule needs at least one segment".into(),
            ));
        }
        if amplitudes.iter().any(|row| row.len() != n_segments) {
            return Err(Error::Shape(
                "every control needs the same number of segments".into(),
            ));
        }
        for &a in amplitudes.iter().flatten() {
            if !a.is_finite() || a.abs() > amplitude_bound {
                return Err(Error::InvalidArgument(format!(
                    "amplitude {a} exceeds the bound {amplitude_bound}"
                )));
            }
        }
        Ok(PulseSchedule {
            total_time,
            n_segments,
            amplitudes,
            amplitude_bound,
        })
    }

    pub fn zeros(
        n_controls: usize,
        total_time: f64,
        n_segments: usize,
        bound: f64,
    ) -> Result<Self> {
        if n_controls == 0 {
            return Err(Error::InvalidArgument(
                "schedule needs at least one control".into(),
            ));
        }
        Self::new(total_time, vec![vec![0.0; n_segments]; n_controls], bound)
    }

    /// Independent uniform amplitudes in `[−1, 1]` (clipped to the bound).
    pub fn random(
        rng: &mut impl Rng,
        n_controls: usize,
        total_time: f64,
        n_segments: usize,
        bound: f64,
    ) -> Result<Self> {
        let lim = bound.min(1.0);
        let amps = (0..n_controls)
            .map(|_| {
                (0..n_segments)
                    .map(|_| rng.random_range(-1.0..=1.0f64).clamp(-lim, lim))
                    .collect()
            })
            .collect();
        Self::new(total_time, amps, bound)
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn n_segments(&self) -> usize {
        self.n_segments
    }

    pub fn n_controls(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitude_bound(&self) -> f64 {
        self.amplitude_bound
    }

    pub fn amplitudes(&self) -> &[Vec<f64>] {
        &self.amplitudes
    }

    pub fn segment_duration(&self) -> f64 {
        self.total_time / self.n_segments as f64
    }

    /// `(t_start, t_end)` of segment `m`. The last segment ends exactly at
    /// `total_time`.
    pub fn segment_bounds(&self, m: usize) -> (f64, f64) {
        let dt = self.segment_duration();
        let end = if m + 1 == self.n_segments {
            self.total_time
        } else {
            (m + 1) as f64 * dt
        };
        (m as f64 * dt, end)
    }

    /// Amplitudes flattened control-major.
    pub fn to_flat(&self) -> Vec<f64> {
        self.amplitudes.concat()
    }

    pub fn with_flat(&self, flat: &[f64]) -> Result<Self> {
        if flat.len() != self.n_controls() * self.n_segments {
            return Err(Error::Shape(format!(
                "expected {} amplitudes, got {}",
                self.n_controls() * self.n_segments,
                flat.len()
            )));
        }
        let amps = flat.chunks(self.n_segments).map(<[f64]>::to_vec).collect();
        Self::new(self.total_time, amps, self.amplitude_bound)
    }

    /// `self` followed by `next`. Segment durations must agree.
    pub fn concat(&self, next: &PulseSchedule) -> Result<Self> {
        if self.n_controls() != next.n_controls() {
            return Err(Error::Shape("control counts differ".into()));
        }
        let (a, b) = (self.segment_duration(), next.segment_duration());
        if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
            return Err(Error::InvalidArgument(
                "concatenated schedules need equal segment durations".into(),
            ));
        }
        let amps = self
            .amplitudes
            .iter()
            .zip(&next.amplitudes)
            .map(|(x, y)| [x.as_slice(), y.as_slice()].concat())
            .collect();
        Self::new(
            self.total_time + next.total_time,
            amps,
            self.amplitude_bound.max(next.amplitude_bound),
        )
    }

    fn check_against(&self, system: &ControlSystem) -> Result<()> {
        if self.n_controls() != system.n_controls() {
            return Err(Error::Shape(format!(
                "schedule has {} controls, system {} has {}",
                self.n_controls(),
                system.name(),
                system.n_controls()
            )));
        }
        Ok(())
    }
}

/// Segment eigendecompositions and propagators for one drift.
struct Segments {
    eigs: Vec<HermitianEigen>,
    props: Vec<DMatrix<Complex64>>,
}

fn segments(system: &ControlSystem, drift: &CMatrix, schedule: &PulseSchedule) -> Segments {
    let dt = schedule.segment_duration();
    let amps = schedule.amplitudes();
    let mut eigs = Vec::with_capacity(schedule.n_segments);
    let mut props = Vec::with_capacity(schedule.n_segments);
    for m in 0..schedule.n_segments {
        let h = system.hamiltonian(drift, amps.iter().map(|row| row[m]));
        let e = HermitianEigen::of_unchecked(&h);
        props.push(e.propagator(dt).inner().clone());
        eigs.push(e);
    }
    Segments { eigs, props }
}

fn propagate_drift(system: &ControlSystem, drift: &CMatrix, schedule: &PulseSchedule) -> CMatrix {
    let segs = segments(system, drift, schedule);
    let mut u = DMatrix::identity(system.dim(), system.dim());
    for p in &segs.props {
        u = p * u;
    }
    CMatrix::from_inner(u)
}

/// Propagator of the whole schedule at parameter values `params`.
pub fn propagate(
    system: &ControlSystem,
    params: &[f64],
    schedule: &PulseSchedule,
) -> Result<CMatrix> {
    schedule.check_against(system)?;
    let drift = system.eval_drift(params)?;
    Ok(propagate_drift(system, &drift, schedule))
}

/// Like [`propagate`] but with no domain check on `params`.
pub fn propagate_unchecked(
    system: &ControlSystem,
    params: &[f64],
    schedule: &PulseSchedule,
) -> Result<CMatrix> {
    schedule.check_against(system)?;
    let drift = system.eval_drift_with(params, true)?;
    Ok(propagate_drift(system, &drift, schedule))
}

fn overlap(u: &CMatrix, target: &CMatrix) -> Complex64 {
    let d = u.rows() as f64;
    // Tr(T† U) = Σ conj(T_ij) U_ij
    let s: Complex64 = target
        .as_slice()
        .iter()
        .zip(u.as_slice())
        .map(|(t, x)| t.conj() * x)
        .sum();
    s / d
}

fn check_gate_pair(u: &CMatrix, target: &CMatrix) -> Result<()> {
    if u.rows() != target.rows() || u.cols() != target.cols() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} against target {}x{}",
            u.rows(),
            u.cols(),
            target.rows(),
            target.cols()
        )));
    }
    u.ensure_unitary(UNITARITY_TOL)?;
    target.ensure_unitary(UNITARITY_TOL)
}

pub fn gate_error(u: &CMatrix, target: &CMatrix, metric: Metric) -> Result<f64> {
    check_gate_pair(u, target)?;
    Ok(metric.error(overlap(u, target)))
}

/// Overlap `Tr(T† U)/d` at one configuration and, optionally, its derivative
/// with respect to every amplitude (control-major).
fn point_overlap(
    system: &ControlSystem,
    drift: &CMatrix,
    target: &CMatrix,
    schedule: &PulseSchedule,
    want_grad: bool,
) -> (Complex64, Vec<Complex64>) {
    let d = system.dim();
    let n_seg = schedule.n_segments;
    let dt = schedule.segment_duration();
    let segs = segments(system, drift, schedule);

    let mut prefix = Vec::with_capacity(n_seg + 1);
    prefix.push(DMatrix::<Complex64>::identity(d, d));
    for p in &segs.props {
        let next = p * prefix.last().unwrap();
        prefix.push(next);
    }
    let u = CMatrix::from_inner(prefix[n_seg].clone());
    let z = overlap(&u, target);
    if !want_grad {
        return (z, Vec::new());
    }

    let mut grad = vec![c64(0.0, 0.0); system.n_controls() * n_seg];
    if dt == 0.0 {
        return (z, grad);
    }
    let t_adj = target.inner().adjoint();
    let inv_d = 1.0 / d as f64;
    let mut phi = DMatrix::<Complex64>::zeros(d, d);
    // suffix = U_{M-1} ⋯ U_{m+1}
    let mut suffix = DMatrix::<Complex64>::identity(d, d);
    for m in (0..n_seg).rev() {
        let eig = &segs.eigs[m];
        let v = eig.vectors.inner();
        let vh = v.adjoint();
        // Tr(T† S dU P) = Tr(W dU) with W = P T† S.
        let w = &prefix[m] * &t_adj * &suffix;
        let a = &vh * w * v;
        for j in 0..d {
            for l in 0..d {
                let (lj, ll) = (eig.values[j], eig.values[l]);
                let x = 0.5 * dt * (lj - ll);
                let sinc = if x.abs() < 1e-8 {
                    1.0 - x * x / 6.0
                } else {
                    x.sin() / x
                };
                phi[(j, l)] =
                    Complex64::from_polar(1.0, -0.5 * dt * (lj + ll)) * c64(0.0, -dt * sinc);
            }
        }
        for (k, hc) in system.controls().iter().enumerate() {
            let x = &vh * hc.inner() * v;
            let mut s = c64(0.0, 0.0);
            for j in 0..d {
                for l in 0..d {
                    s += a[(l, j)] * phi[(j, l)] * x[(j, l)];
                }
            }
            grad[k * n_seg + m] = s * inv_d;
        }
        suffix *= &segs.props[m];
    }
    (z, grad)
}

/// `(literal, phase_insensitive)` errors at one parameter point, computed
/// exactly as the optimizer computes them. Parameters outside the domain are
/// accepted when `allow_extrapolation` is set.
pub fn point_errors(
    system: &ControlSystem,
    params: &[f64],
    target: &CMatrix,
    schedule: &PulseSchedule,
    allow_extrapolation: bool,
) -> Result<(f64, f64)> {
    schedule.check_against(system)?;
    if target.rows() != system.dim() || target.cols() != system.dim() {
        return Err(Error::DimensionMismatch(format!(
            "target is {}x{}, system dimension is {}",
            target.rows(),
            target.cols(),
            system.dim()
        )));
    }
    target.ensure_unitary(UNITARITY_TOL)?;
    let drift = system.eval_drift_with(params, allow_extrapolation)?;
    let (z, _) = point_overlap(system, &drift, target, schedule, false);
    Ok((Metric::Literal.error(z), Metric::PhaseInsensitive.error(z)))
}

/// Per-configuration errors and the gradient of their mean.
#[derive(Clone, Debug)]
pub struct EnsembleEvaluation {
    pub mean_error: f64,
    pub per_point: Vec<f64>,
    /// Same configurations under the other metric.
    pub per_point_other: Vec<f64>,
    /// `[n_controls][n_segments]`, empty unless requested.
    pub gradient: Vec<Vec<f64>>,
}

fn evaluate_ensemble(
    system: &ControlSystem,
    drifts: &[CMatrix],
    target: &CMatrix,
    schedule: &PulseSchedule,
    metric: Metric,
    want_grad: bool,
) -> EnsembleEvaluation {
    let other = match metric {
        Metric::Literal => Metric::PhaseInsensitive,
        Metric::PhaseInsensitive => Metric::Literal,
    };
    let results: Vec<(Complex64, Vec<Complex64>)> = drifts
        .par_iter()
        .map(|drift| point_overlap(system, drift, target, schedule, want_grad))
        .collect();
    let n = drifts.len() as f64;
    let per_point: Vec<f64> = results.iter().map(|(z, _)| metric.error(*z)).collect();
    let per_point_other = results.iter().map(|(z, _)| other.error(*z)).collect();
    let mean_error = per_point.iter().sum::<f64>() / n;
    let mut gradient = Vec::new();
    if want_grad {
        let n_seg = schedule.n_segments;
        let mut flat = vec![0.0; system.n_controls() * n_seg];
        for (z, dz) in &results {
            for (g, d) in flat.iter_mut().zip(dz) {
                *g += metric.error_derivative(*z, *d);
            }
        }
        gradient = flat
            .chunks(n_seg)
            .map(|c| c.iter().map(|g| g / n).collect())
            .collect();
    }
    EnsembleEvaluation {
        mean_error,
        per_point,
        per_point_other,
        gradient,
    }
}

fn prepare(
    system: &ControlSystem,
    configs: &[Vec<f64>],
    target: &CMatrix,
    schedule: Option<&PulseSchedule>,
) -> Result<Vec<CMatrix>> {
    if configs.is_empty() {
        return Err(Error::InvalidArgument(
            "ensemble needs at least one configuration".into(),
        ));
    }
    if target.rows() != system.dim() || target.cols() != system.dim() {
        return Err(Error::DimensionMismatch(format!(
            "target is {}x{}, system dimension is {}",
            target.rows(),
            target.cols(),
            system.dim()
        )));
    }
    target.ensure_unitary(UNITARITY_TOL)?;
    if let Some(s) = schedule {
        s.check_against(system)?;
    }
    configs.iter().map(|p| system.eval_drift(p)).collect()
}

/// Mean and per-configuration gate error.
pub fn ensemble_objective(
    system: &ControlSystem,
    configs: &[Vec<f64>],
    target: &CMatrix,
    schedule: &PulseSchedule,
    metric: Metric,
) -> Result<(f64, Vec<f64>)> {
    let drifts = prepare(system, configs, target, Some(schedule))?;
    let e = evaluate_ensemble(system, &drifts, target, schedule, metric, false);
    Ok((e.mean_error, e.per_point))
}

/// Objective together with its exact gradient.
pub fn ensemble_evaluation(
    system: &ControlSystem,
    configs: &[Vec<f64>],
    target: &CMatrix,
    schedule: &PulseSchedule,
    metric: Metric,
) -> Result<EnsembleEvaluation> {
    let drifts = prepare(system, configs, target, Some(schedule))?;
    Ok(evaluate_ensemble(
        system, &drifts, target, schedule, metric, true,
    ))
}

/// Gradient of the mean error, `[n_controls][n_segments]`.
pub fn gradient(
    system: &ControlSystem,
    configs: &[Vec<f64>],
    target: &CMatrix,
    schedule: &PulseSchedule,
    metric: Metric,
) -> Result<Vec<Vec<f64>>> {
    Ok(ensemble_evaluation(system, configs, target, schedule, metric)?.gradient)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub total_time: f64,
    pub n_segments: usize,
    pub metric: Metric,
    pub restarts: usize,
    pub max_iter: usize,
    /// Convergence threshold on the largest per-configuration error.
    pub threshold: f64,
    pub seed: u64,
    pub amplitude_bound: f64,
    /// L-BFGS history length.
    pub memory: usize,
    /// An attempt is abandoned when its mean error fell by less than
    /// `stall_rel` (relative) over the last `stall_window` iterations;
    /// 0 disables the check.
    pub stall_window: usize,
    pub stall_rel: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            total_time: 32.0,
            n_segments: 128,
            metric: Metric::PhaseInsensitive,
            restarts: 20,
            max_iter: 2000,
            threshold: 1e-4,
            seed: 0,
            amplitude_bound: 10.0,
            memory: 10,
            stall_window: 200,
            stall_rel: 0.02,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimizationReport {
    pub system: String,
    pub configs: Vec<Vec<f64>>,
    pub metric: Metric,
    pub schedule: PulseSchedule,
    /// Errors under `metric`.
    pub per_point_error: Vec<f64>,
    pub per_point_error_literal: Vec<f64>,
    pub per_point_error_phase_insensitive: Vec<f64>,
    pub max_error: f64,
    pub mean_error: f64,
    pub threshold: f64,
    /// Iterations of the attempt that produced `schedule`.
    pub iterations: usize,
    pub total_iterations: usize,
    pub restarts_used: usize,
    pub seed: u64,
    pub converged: bool,
    pub wall_time: f64,
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Ensemble GRAPE with seeded random restarts. Attempt `r` draws its initial
/// amplitudes from ChaCha8 seeded with `seed`, stream `r`. The first
/// converged attempt wins; otherwise the attempt with the smallest maximum
/// error is returned.
pub fn optimize(
    system: &ControlSystem,
    configs: &[Vec<f64>],
    target: &CMatrix,
    config: &OptimizerConfig,
) -> Result<OptimizationReport> {
    optimize_from(system, configs, target, config, None)
}

/// [`optimize`] with an optional starting schedule for the first attempt.
pub fn optimize_from(
    system: &ControlSystem,
    configs: &[Vec<f64>],
    target: &CMatrix,
    config: &OptimizerConfig,
    initial: Option<&PulseSchedule>,
) -> Result<OptimizationReport> {
    let start = Instant::now();
    let drifts = prepare(system, configs, target, initial)?;
    if config.n_segments == 0 {
        return Err(Error::InvalidArgument(
            "n_segments must be at least 1".into(),
        ));
    }
    if config.threshold.is_nan() || config.threshold < 0.0 {
        return Err(Error::InvalidArgument(
            "threshold must be non-negative".into(),
        ));
    }
    let template = PulseSchedule::zeros(
        system.n_controls(),
        config.total_time,
        config.n_segments,
        config.amplitude_bound,
    )?;
    let opts = lbfgs::Options {
        max_iter: config.max_iter,
        memory: config.memory.max(1),
        bound: config.amplitude_bound,
        threshold: config.threshold,
        stall_window: config.stall_window,
        stall_rel: config.stall_rel,
    };

    let attempts = config.restarts.max(1);
    let mut best: Option<(f64, PulseSchedule, EnsembleEvaluation, usize)> = None;
    let mut total_iterations = 0;
    let mut restarts_used = 0;
    for r in 0..attempts {
        restarts_used += 1;
        let x0 = match (r, initial) {
            (0, Some(s)) => s.to_flat(),
            _ => {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream(r as u64);
                PulseSchedule::random(
                    &mut rng,
                    system.n_controls(),
                    config.total_time,
                    config.n_segments,
                    config.amplitude_bound,
                )?
                .to_flat()
            }
        };
        let objective = |x: &[f64]| -> Result<lbfgs::Evaluation> {
            let s = template.with_flat(x)?;
            let e = evaluate_ensemble(system, &drifts, target, &s, config.metric, true);
            Ok(lbfgs::Evaluation {
                value: e.mean_error,
                worst: max_of(&e.per_point),
                grad: e.gradient.concat(),
            })
        };
        let out = lbfgs::minimize(objective, x0, &opts)?;
        total_iterations += out.iterations;
        let schedule = template.with_flat(&out.x)?;
        let eval = evaluate_ensemble(system, &drifts, target, &schedule, config.metric, false);
        let worst = max_of(&eval.per_point);
        let better = best.as_ref().is_none_or(|(b, ..)| worst < *b);
        if better {
            best = Some((worst, schedule, eval, out.iterations));
        }
        if worst <= config.threshold {
            break;
        }
    }
    let (max_error, schedule, eval, iterations) = best.expect("at least one attempt");
    let (literal, insensitive) = match config.metric {
        Metric::Literal => (eval.per_point.clone(), eval.per_point_other.clone()),
        Metric::PhaseInsensitive => (eval.per_point_other.clone(), eval.per_point.clone()),
    };
    Ok(OptimizationReport {
        system: system.name().to_string(),
        configs: configs.to_vec(),
        metric: config.metric,
        schedule,
        per_point_error: eval.per_point,
        per_point_error_literal: literal,
        per_point_error_phase_insensitive: insensitive,
        max_error,
        mean_error: eval.mean_error,
        threshold: config.threshold,
        iterations,
        total_iterations,
        restarts_used,
        seed: config.seed,
        converged: max_error <= config.threshold,
        wall_time: start.elapsed().as_secs_f64(),
    })
}
