// Copyright 2026 The robustctl Authors
// SPDX-License-Identifier: Apache-2.0

//! Discretized unknown parameters and the block-diagonal extended system.
//!
//! Replacing the interval `[ω₀, ω₁]` by a grid `Ω_N` turns the unknown
//! parameter into a fully known system `⊕ₙ H_d(ωₙ) + v(t) ⊕ₙ H_c`. That
//! system is controllable on `⊕ₙ su(d)` exactly when its Lie algebra reaches
//! dimension `N(d² − 1)`, which in turn requires (1) full controllability at
//! every grid point and (2) no two grid points being unitarily equivalent.

use serde::Serialize;

use crate::algebra::{
    closure, distinct_matrix, fingerprint_hash, lie_closure, skew_traceless, system_fingerprints,
    system_generators, BlockDiagonal, LieBasis, DEFAULT_CLOSURE_TOL, DEFAULT_WORD_LEN,
};
use crate::error::{Error, Result};
use crate::models::ControlSystem;
use crate::qmat::CMatrix;

/// Largest `N·d` for which the extended system is built.
pub const EXTENDED_SIZE_CAP: usize = 128;

/// Sweep cap for extended closures; words grow more slowly to reach the
/// larger algebra than for a single `su(d)`.
pub const EXTENDED_MAX_DEPTH: usize = 16;

/// Strictly increasing grid points inside a closed interval.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParameterGrid {
    points: Vec<f64>,
    interval: (f64, f64),
}

impl ParameterGrid {
    pub fn new(points: Vec<f64>, interval: (f64, f64)) -> Result<Self> {
        let (lo, hi) = interval;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Interval(lo, hi));
        }
        if points.is_empty() {
            return Err(Error::InvalidArgument(
                "grid needs at least one point".into(),
            ));
        }
        if points.iter().any(|p| p.is_nan()) || points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "grid points must be strictly increasing".into(),
            ));
        }
        if points.iter().any(|&p| !(p >= lo && p <= hi)) {
            return Err(Error::InvalidArgument(
                "grid point outside its interval".into(),
            ));
        }
        Ok(ParameterGrid { points, interval })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points as one-element parameter vectors.
    pub fn configs(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|&p| vec![p]).collect()
    }

    /// Grid point closest to `omega`.
    pub fn nearest(&self, omega: f64) -> f64 {
        self.points
            .iter()
            .cloned()
            .min_by(|a, b| (a - omega).abs().total_cmp(&(b - omega).abs()))
            .unwrap_or(f64::NAN)
    }
}

/// `n` equally spaced points from `omega0` to `omega1` inclusive; `n = 1`
/// gives `{omega0}`.
pub fn make_grid(omega0: f64, omega1: f64, n: usize) -> Result<ParameterGrid> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "grid size must be at least 1".into(),
        ));
    }
    if !(omega0.is_finite() && omega1.is_finite()) || omega0 > omega1 || (omega0 == omega1 && n > 1)
    {
        return Err(Error::Interval(omega0, omega1));
    }
    let points = if n == 1 {
        vec![omega0]
    } else {
        let step = (omega1 - omega0) / (n - 1) as f64;
        (0..n)
            .map(|k| {
                if k == n - 1 {
                    omega1
                } else {
                    omega0 + step * k as f64
                }
            })
            .collect()
    };
    ParameterGrid::new(points, (omega0, omega1))
}

/// The block-diagonal system over a set of parameter configurations.
#[derive(Clone, Debug)]
pub struct ExtendedSystem {
    pub base: ControlSystem,
    pub configs: Vec<Vec<f64>>,
    pub drift_blocks: Vec<CMatrix>,
    pub control_blocks: Vec<BlockDiagonal>,
}

impl ExtendedSystem {
    fn build(system: &ControlSystem, configs: Vec<Vec<f64>>) -> Result<Self> {
        let size = configs.len() * system.dim();
        if size > EXTENDED_SIZE_CAP {
            return Err(Error::SizeCap(size, EXTENDED_SIZE_CAP));
        }
        let drift_blocks = configs
            .iter()
            .map(|p| system.eval_drift(p))
            .collect::<Result<Vec<_>>>()?;
        let control_blocks = system
            .controls()
            .iter()
            .map(|h| BlockDiagonal(vec![h.clone(); configs.len()]))
            .collect();
        Ok(ExtendedSystem {
            base: system.clone(),
            configs,
            drift_blocks,
            control_blocks,
        })
    }

    /// Total dimension `N·d`.
    pub fn dim(&self) -> usize {
        self.configs.len() * self.base.dim()
    }

    pub fn n_blocks(&self) -> usize {
        self.configs.len()
    }

    pub fn dense_drift(&self) -> CMatrix {
        CMatrix::direct_sum(&self.drift_blocks)
    }

    pub fn dense_controls(&self) -> Vec<CMatrix> {
        self.control_blocks
            .iter()
            .map(BlockDiagonal::to_dense)
            .collect()
    }

    /// Skew-Hermitian generators with the identity part of every block
    /// removed, so the algebra lies in `⊕ su(d)`.
    pub fn generators(&self) -> Vec<BlockDiagonal> {
        let mut gens = vec![BlockDiagonal(
            self.drift_blocks.iter().map(skew_traceless).collect(),
        )];
        gens.extend(
            self.control_blocks
                .iter()
                .map(|c| BlockDiagonal(c.0.iter().map(skew_traceless).collect())),
        );
        gens
    }

    pub fn closure(&self, tol: f64, max_depth: usize) -> Result<LieBasis<BlockDiagonal>> {
        closure(self.generators(), self.dim(), tol, max_depth)
    }

    /// `N(d² − 1)`, the largest possible closure dimension.
    pub fn max_dim(&self) -> usize {
        let d = self.base.dim();
        self.n_blocks() * (d * d - 1)
    }
}

/// Extended system over a one-parameter grid.
pub fn extend(system: &ControlSystem, grid: &ParameterGrid) -> Result<ExtendedSystem> {
    if system.n_params() != 1 {
        return Err(Error::InvalidArgument(format!(
            "system has {} parameters; use extend_product",
            system.n_params()
        )));
    }
    ExtendedSystem::build(system, grid.configs())
}

/// Extended system over the Cartesian product of one grid per parameter.
pub fn extend_product(system: &ControlSystem, grids: &[ParameterGrid]) -> Result<ExtendedSystem> {
    if grids.len() != system.n_params() {
        return Err(Error::Arity {
            expected: system.n_params(),
            got: grids.len(),
        });
    }
    let count: usize = grids.iter().map(ParameterGrid::len).product();
    if count * system.dim() > EXTENDED_SIZE_CAP {
        return Err(Error::SizeCap(count * system.dim(), EXTENDED_SIZE_CAP));
    }
    let mut configs: Vec<Vec<f64>> = vec![Vec::new()];
    for g in grids {
        configs = configs
            .into_iter()
            .flat_map(|prefix| {
                g.points().iter().map(move |&p| {
                    let mut v = prefix.clone();
                    v.push(p);
                    v
                })
            })
            .collect();
    }
    ExtendedSystem::build(system, configs)
}

#[derive(Clone, Debug)]
pub struct LemmaOptions {
    pub tol: f64,
    pub max_depth: usize,
    pub word_len: usize,
    pub fingerprint_tol: f64,
}

impl Default for LemmaOptions {
    fn default() -> Self {
        LemmaOptions {
            tol: DEFAULT_CLOSURE_TOL,
            max_depth: EXTENDED_MAX_DEPTH,
            word_len: DEFAULT_WORD_LEN,
            fingerprint_tol: 1e-9,
        }
    }
}

/// Outcome of checking both lemma conditions on a set of grid points.
#[derive(Clone, Debug, Serialize)]
pub struct LemmaReport {
    pub system: String,
    pub points: Vec<Vec<f64>>,
    /// Lie algebra dimension at each point.
    pub lie_dims: Vec<usize>,
    /// Condition (1) per point.
    pub fully_controllable: Vec<bool>,
    /// Condition (2) per pair: fingerprints differ.
    pub pairwise_distinct: Vec<Vec<bool>>,
    pub condition1: bool,
    pub condition2: bool,
    pub extended_dim: usize,
    pub max_extended_dim: usize,
    /// Robust (indeed ensemble) controllability on the grid.
    pub verdict: bool,
    pub fingerprints_hash: String,
    pub word_len: usize,
}

impl LemmaReport {
    pub fn both_conditions(&self) -> bool {
        self.condition1 && self.condition2
    }
}

/// Checks conditions (1) and (2) and computes the extended closure dimension
/// for arbitrary parameter configurations.
pub fn lemma_check_configs(
    system: &ControlSystem,
    configs: &[Vec<f64>],
    opts: &LemmaOptions,
) -> Result<LemmaReport> {
    let d = system.dim();
    let mut lie_dims = Vec::with_capacity(configs.len());
    for p in configs {
        let basis = lie_closure(&system_generators(system, p)?, opts.tol, opts.max_depth)?;
        lie_dims.push(basis.dim());
    }
    let fully_controllable: Vec<bool> = lie_dims.iter().map(|&k| k == d * d - 1).collect();
    let fps = system_fingerprints(system, configs, opts.word_len)?;
    let distinct = distinct_matrix(&fps, opts.fingerprint_tol);
    let condition2 =
        (0..configs.len()).all(|i| (0..configs.len()).all(|j| i == j || distinct[i][j]));
    let ext = ExtendedSystem::build(system, configs.to_vec())?;
    let extended_dim = ext.closure(opts.tol, opts.max_depth)?.dim();
    let max_extended_dim = ext.max_dim();
    Ok(LemmaReport {
        system: system.name().to_string(),
        points: configs.to_vec(),
        lie_dims,
        condition1: fully_controllable.iter().all(|&b| b),
        fully_controllable,
        pairwise_distinct: distinct,
        condition2,
        extended_dim,
        max_extended_dim,
        verdict: extended_dim == max_extended_dim,
        fingerprints_hash: fingerprint_hash(&fps),
        word_len: opts.word_len,
    })
}

/// [`lemma_check_configs`] on a one-parameter grid.
pub fn lemma_check(system: &ControlSystem, grid: &ParameterGrid) -> Result<LemmaReport> {
    lemma_check_configs(system, &grid.configs(), &LemmaOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ParamSpec;
    use crate::qmat::pauli;

    #[test]
    fn grid_examples() {
        let g = make_grid(1.0, 2.0, 11).unwrap();
        assert_eq!(g.len(), 11);
        for (k, p) in g.points().iter().enumerate() {
            assert!((p - (1.0 + 0.1 * k as f64)).abs() < 1e-15);
        }
        assert_eq!(make_grid(1.0, 2.0, 2).unwrap().points(), &[1.0, 2.0]);
        assert_eq!(make_grid(1.0, 2.0, 1).unwrap().points(), &[1.0]);
        assert_eq!(make_grid(1.5, 1.5, 1).unwrap().points(), &[1.5]);
        assert!(make_grid(1.0, 2.0, 0).is_err());
        assert!(make_grid(2.0, 1.0, 3).is_err());
        assert!(make_grid(1.0, 1.0, 3).is_err());
    }

    #[test]
    fn grid_spacing_bound() {
        for n in [2usize, 3, 5, 11] {
            let g = make_grid(1.0, 2.0, n).unwrap();
            for k in 0..=1000 {
                let w = 1.0 + k as f64 / 1000.0;
                let gap = (w - g.nearest(w)).abs();
                assert!(gap <= 1.0 / (2.0 * (n - 1) as f64) + 1e-15);
            }
        }
    }

    #[test]
    fn extend_examples() {
        let a = ControlSystem::named("A").unwrap();
        let g = make_grid(1.0, 2.0, 3).unwrap();
        let ext = extend(&a, &g).unwrap();
        assert_eq!(ext.dim(), 12);
        let drift = ext.dense_drift();
        assert_eq!(drift.rows(), 12);
        let zi = pauli::string("ZI").unwrap();
        let expected = CMatrix::direct_sum(&[zi.clone(), zi.clone(), zi]);
        assert_eq!(ext.dense_controls()[0], expected);
        let block1 = a.eval_drift(&[1.5]).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(drift.get(4 + i, 4 + j), block1.get(i, j));
                assert_eq!(drift.get(i, 4 + j).norm(), 0.0);
            }
        }
    }

    #[test]
    fn extend_rejects_oversized_and_out_of_domain() {
        let a = ControlSystem::named("A").unwrap();
        assert!(matches!(
            extend(&a, &make_grid(1.0, 2.0, 33).unwrap()),
            Err(Error::SizeCap(132, 128))
        ));
        assert!(extend(&a, &make_grid(0.0, 2.0, 3).unwrap()).is_err());
        let d = ControlSystem::named("D").unwrap();
        assert!(extend(&d, &make_grid(1.0, 2.0, 3).unwrap()).is_err());
        let grids = [
            make_grid(0.0, 1.0, 2).unwrap(),
            make_grid(1.0, 2.0, 3).unwrap(),
        ];
        let ext = extend_product(&d, &grids).unwrap();
        assert_eq!(ext.n_blocks(), 6);
        assert_eq!(ext.configs[1], vec![0.0, 1.5]);
        let big = [
            make_grid(-1.0, 1.0, 6).unwrap(),
            make_grid(1.0, 2.0, 6).unwrap(),
        ];
        assert!(matches!(extend_product(&d, &big), Err(Error::SizeCap(..))));
    }

    #[test]
    fn extended_closure_of_system_a() {
        let a = ControlSystem::named("A").unwrap();
        let ext = extend(&a, &make_grid(1.0, 2.0, 3).unwrap()).unwrap();
        let basis = ext.closure(1e-8, EXTENDED_MAX_DEPTH).unwrap();
        assert_eq!(basis.dim(), 45);
        // The dense route on the 12x12 matrices agrees.
        let mut gens = vec![ext.dense_drift()];
        gens.extend(ext.dense_controls());
        let dense = lie_closure(&gens, 1e-8, EXTENDED_MAX_DEPTH).unwrap();
        assert_eq!(dense.dim(), 45);
    }

    fn wx_z(xi: f64) -> ControlSystem {
        ControlSystem::new(
            "wX-Z",
            vec![ParamSpec {
                name: "omega".into(),
                min: -xi,
                max: xi,
            }],
            CMatrix::zeros(2, 2),
            vec![pauli::x()],
            vec![pauli::z()],
        )
        .unwrap()
    }

    #[test]
    fn symmetric_grid_violates_condition_two() {
        let s = wx_z(1.0);
        let g = ParameterGrid::new(vec![-1.0, 1.0], (-1.0, 1.0)).unwrap();
        let r = lemma_check(&s, &g).unwrap();
        assert!(r.condition1);
        assert!(!r.condition2);
        assert_eq!(r.extended_dim, 3);
        assert_eq!(r.max_extended_dim, 6);
        assert!(!r.verdict);
    }

    #[test]
    fn singleton_grid_reduces_to_condition_one() {
        let a = ControlSystem::named("A").unwrap();
        let r = lemma_check(&a, &make_grid(1.0, 2.0, 1).unwrap()).unwrap();
        assert!(r.condition1 && r.condition2 && r.verdict);
        assert_eq!(r.extended_dim, 15);
        assert_eq!(r.pairwise_distinct, vec![vec![false]]);
    }

    #[test]
    fn verdict_matches_conditions_across_catalog() {
        for name in crate::models::CATALOG.iter().filter(|n| **n != "D") {
            let s = ControlSystem::named(name).unwrap();
            for n in 1..=4 {
                let r = lemma_check(&s, &make_grid(1.0, 2.0, n).unwrap()).unwrap();
                assert_eq!(r.verdict, r.both_conditions(), "{name} N={n}");
                let ext = extend(&s, &make_grid(1.0, 2.0, n).unwrap()).unwrap();
                let mut gens = vec![ext.dense_drift()];
                gens.extend(ext.dense_controls());
                let dense = lie_closure(&gens, 1e-8, EXTENDED_MAX_DEPTH).unwrap();
                assert_eq!(dense.dim(), r.extended_dim, "{name} N={n}");
            }
        }
    }
}
