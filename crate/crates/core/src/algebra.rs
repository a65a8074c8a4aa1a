// Copyright 2026 The robustctl Authors
// SPDX-License-Identifier: Apache-2.0

//! Lie-algebraic controllability analysis.
//!
//! The dynamical Lie algebra of a system is the real span of all nested
//! commutators of `i·H_d` and `i·H_k`. [`lie_closure`] computes an orthonormal
//! basis of it (identity components stripped, so the algebra sits inside
//! `su(d)`); a system is fully controllable when the basis has `d² − 1`
//! elements.
//!
//! Closure is computed by sweeps: the first sweep orthonormalizes the
//! generators, and every later sweep brackets the elements added by the
//! previous sweep against the whole basis. A candidate is accepted when its
//! residual after two passes of modified Gram–Schmidt exceeds `tol`. The
//! candidates are brackets of unit-norm elements, so the threshold does not
//! depend on how the generators were scaled.

use std::fmt;

use num_complex::Complex64;
use serde::{Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::models::ControlSystem;
use crate::qmat::{c64, real_inner, CMatrix, HERMITIAN_TOL};

/// Default residual threshold for accepting a new basis element.
pub const DEFAULT_CLOSURE_TOL: f64 = 1e-8;
/// Default cap on closure sweeps.
pub const DEFAULT_MAX_DEPTH: usize = 8;
/// Default word length for trace fingerprints.
pub const DEFAULT_WORD_LEN: usize = 4;

/// Elements of a real Lie algebra with a real inner product.
pub trait LieElement: Clone + Send + Sync {
    fn bracket(&self, other: &Self) -> Self;
    fn inner(&self, other: &Self) -> f64;
    fn axpy(&mut self, s: f64, other: &Self);
    fn scale(&mut self, s: f64);

    fn norm(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }
}

impl LieElement for CMatrix {
    fn bracket(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    fn inner(&self, other: &Self) -> f64 {
        real_inner(self, other)
    }

    fn axpy(&mut self, s: f64, other: &Self) {
        CMatrix::axpy(self, c64(s, 0.0), other);
    }

    fn scale(&mut self, s: f64) {
        *self = CMatrix::scale(self, s);
    }
}

/// A block-diagonal matrix stored block by block. Brackets and inner products
/// act blockwise, which is what makes closure of the extended ensemble system
/// affordable.
#[derive(Clone, Debug)]
pub struct BlockDiagonal(pub Vec<CMatrix>);

impl BlockDiagonal {
    pub fn to_dense(&self) -> CMatrix {
        CMatrix::direct_sum(&self.0)
    }
}

impl LieElement for BlockDiagonal {
    fn bracket(&self, other: &Self) -> Self {
        BlockDiagonal(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a.bracket(b))
                .collect(),
        )
    }

    fn inner(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| real_inner(a, b))
            .sum()
    }

    fn axpy(&mut self, s: f64, other: &Self) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            CMatrix::axpy(a, c64(s, 0.0), b);
        }
    }

    fn scale(&mut self, s: f64) {
        for a in &mut self.0 {
            *a = CMatrix::scale(a, s);
        }
    }
}

/// Provenance of a basis element: a generator or a bracket of two earlier
/// elements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BracketWord {
    Generator(usize),
    Bracket(Box<BracketWord>, Box<BracketWord>),
}

impl BracketWord {
    /// Generator indices in the order they appear in the word.
    pub fn letters(&self) -> Vec<usize> {
        match self {
            BracketWord::Generator(i) => vec![*i],
            BracketWord::Bracket(a, b) => {
                let mut v = a.letters();
                v.extend(b.letters());
                v
            }
        }
    }

    pub fn len(&self) -> usize {
        match self {
            BracketWord::Generator(_) => 1,
            BracketWord::Bracket(a, b) => a.len() + b.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl fmt::Display for BracketWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BracketWord::Generator(i) => write!(f, "g{i}"),
            BracketWord::Bracket(a, b) => write!(f, "[{a},{b}]"),
        }
    }
}

impl Serialize for BracketWord {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Orthonormal basis of a dynamical Lie algebra.
#[derive(Clone, Debug)]
pub struct LieBasis<E = CMatrix> {
    /// Dimension of the Hilbert space the elements act on.
    pub dim_space: usize,
    pub elements: Vec<E>,
    pub generation_log: Vec<BracketWord>,
    /// Number of sweeps performed, including the generator sweep.
    pub sweeps: usize,
}

impl<E: LieElement> LieBasis<E> {
    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    /// Norm of what is left of `x` after projecting out the span.
    pub fn residual(&self, x: &E) -> f64 {
        let mut r = x.clone();
        project_out(&self.elements, &mut r);
        r.norm()
    }
}

fn project_out<E: LieElement>(basis: &[E], x: &mut E) {
    for _pass in 0..2 {
        for b in basis {
            let c = b.inner(x);
            if c != 0.0 {
                x.axpy(-c, b);
            }
        }
    }
}

/// Adds `candidate` to the basis if its residual exceeds `tol`. The candidate
/// is expected to be built from unit-norm elements.
fn try_add<E: LieElement>(
    basis: &mut LieBasis<E>,
    mut candidate: E,
    word: BracketWord,
    tol: f64,
) -> bool {
    project_out(&basis.elements, &mut candidate);
    let r = candidate.norm();
    if r > tol {
        candidate.scale(1.0 / r);
        basis.elements.push(candidate);
        basis.generation_log.push(word);
        true
    } else {
        false
    }
}

/// Closure of arbitrary algebra elements. Generators are normalized before
/// use; zero generators are skipped.
pub fn closure<E: LieElement>(
    generators: Vec<E>,
    dim_space: usize,
    tol: f64,
    max_depth: usize,
) -> Result<LieBasis<E>> {
    let mut basis = LieBasis {
        dim_space,
        elements: Vec::new(),
        generation_log: Vec::new(),
        sweeps: 1,
    };
    let mut frontier = Vec::new();
    for (i, mut g) in generators.into_iter().enumerate() {
        let n = g.norm();
        if n == 0.0 || !n.is_finite() {
            continue;
        }
        g.scale(1.0 / n);
        if try_add(&mut basis, g, BracketWord::Generator(i), tol) {
            frontier.push(basis.elements.len() - 1);
        }
    }
    if basis.elements.is_empty() {
        return Err(Error::InvalidArgument(
            "Lie closure needs at least one generator with a nonzero traceless part".into(),
        ));
    }
    while !frontier.is_empty() {
        if basis.sweeps >= max_depth {
            return Err(Error::ClosureIncomplete {
                depth: basis.sweeps,
                dim: basis.dim(),
            });
        }
        basis.sweeps += 1;
        let known = basis.elements.len();
        let first_new = frontier[0];
        let mut added = Vec::new();
        for &f in &frontier {
            for j in 0..known {
                // Pairs inside the frontier are visited once.
                if j >= first_new && j <= f {
                    continue;
                }
                let c = basis.elements[f].bracket(&basis.elements[j]);
                let word = BracketWord::Bracket(
                    Box::new(basis.generation_log[f].clone()),
                    Box::new(basis.generation_log[j].clone()),
                );
                if try_add(&mut basis, c, word, tol) {
                    added.push(basis.elements.len() - 1);
                }
            }
        }
        frontier = added;
    }
    Ok(basis)
}

/// `i·h − (i Tr h / d)·I`: the traceless skew-Hermitian image of a Hamiltonian.
pub fn skew_traceless(h: &CMatrix) -> CMatrix {
    let d = h.rows();
    let mut a = h.scale_c(Complex64::I);
    let shift = a.trace() / d as f64;
    for k in 0..d {
        a.set(k, k, a.get(k, k) - shift);
    }
    a
}

/// Orthonormal basis of the Lie algebra generated by `i·g` for Hermitian
/// generators `g`.
pub fn lie_closure(generators: &[CMatrix], tol: f64, max_depth: usize) -> Result<LieBasis> {
    let first = generators
        .first()
        .ok_or_else(|| Error::InvalidArgument("no generators".into()))?;
    let d = first.rows();
    let mut skew = Vec::with_capacity(generators.len());
    for g in generators {
        if !g.is_square() || g.rows() != d {
            return Err(Error::DimensionMismatch(format!(
                "generator is {}x{}, expected {d}x{d}",
                g.rows(),
                g.cols()
            )));
        }
        g.ensure_hermitian(HERMITIAN_TOL * g.max_abs().max(1.0))?;
        skew.push(skew_traceless(g));
    }
    closure(skew, d, tol, max_depth)
}

/// Drift at `params` followed by the controls.
pub fn system_generators(system: &ControlSystem, params: &[f64]) -> Result<Vec<CMatrix>> {
    let mut gens = vec![system.eval_drift(params)?];
    gens.extend(system.controls().iter().cloned());
    Ok(gens)
}

/// Whether the system at `params` generates all of `su(d)`.
pub fn is_fully_controllable(system: &ControlSystem, params: &[f64], tol: f64) -> Result<bool> {
    let basis = lie_closure(&system_generators(system, params)?, tol, DEFAULT_MAX_DEPTH)?;
    let d = system.dim();
    Ok(basis.dim() == d * d - 1)
}

/// Whether `h` is (up to its identity component) in the span of `basis`.
pub fn span_contains(basis: &LieBasis, h: &CMatrix, tol: f64) -> Result<bool> {
    if h.rows() != basis.dim_space || h.cols() != basis.dim_space {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{}, basis acts on dimension {}",
            h.rows(),
            h.cols(),
            basis.dim_space
        )));
    }
    let mut a = skew_traceless(h);
    let n = a.norm();
    if n == 0.0 {
        return Ok(true);
    }
    LieElement::scale(&mut a, 1.0 / n);
    Ok(basis.residual(&a) <= tol)
}

/// Real and imaginary parts of `Tr(W)` for every word `W` over `ops` of
/// length 1 to `max_word_len`, shortest words first and lexicographic within
/// a length. These traces are unchanged when every op is conjugated by the
/// same unitary, so differing fingerprints prove two op lists are not
/// simultaneously unitarily equivalent. Equal fingerprints prove nothing.
pub fn equivalence_fingerprint(ops: &[CMatrix], max_word_len: usize) -> Result<Vec<f64>> {
    if max_word_len == 0 {
        return Err(Error::InvalidArgument(
            "word length must be at least 1".into(),
        ));
    }
    let first = ops
        .first()
        .ok_or_else(|| Error::InvalidArgument("fingerprint of an empty op list".into()))?;
    let d = first.rows();
    if ops.iter().any(|o| o.rows() != d || o.cols() != d) {
        return Err(Error::DimensionMismatch(
            "fingerprint ops differ in shape".into(),
        ));
    }
    let mut out = Vec::new();
    // Products for every word of the current length, in lexicographic order.
    let mut level: Vec<CMatrix> = ops.to_vec();
    for len in 1..=max_word_len {
        for w in &level {
            let t = w.trace();
            out.push(t.re);
            out.push(t.im);
        }
        if len < max_word_len {
            level = level
                .iter()
                .flat_map(|w| ops.iter().map(move |o| w * o))
                .collect();
        }
    }
    Ok(out)
}

/// Hex SHA-256 of a list of fingerprints, for compact reports.
pub fn fingerprint_hash(fingerprints: &[Vec<f64>]) -> String {
    let mut hasher = Sha256::new();
    for fp in fingerprints {
        for v in fp {
            hasher.update(v.to_le_bytes());
        }
        hasher.update([0xff]);
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Fingerprints of `{H_d(p)} ∪ controls` for each parameter point.
pub fn system_fingerprints(
    system: &ControlSystem,
    points: &[Vec<f64>],
    max_word_len: usize,
) -> Result<Vec<Vec<f64>>> {
    points
        .iter()
        .map(|p| equivalence_fingerprint(&system_generators(system, p)?, max_word_len))
        .collect()
}

/// Entry `(i, j)` is true when the fingerprints at points `i` and `j` differ
/// by more than `tol` in max norm, which certifies that the two systems are
/// not unitarily equivalent. The diagonal is false.
pub fn pairwise_distinct(
    system: &ControlSystem,
    points: &[Vec<f64>],
    max_word_len: usize,
    tol: f64,
) -> Result<Vec<Vec<bool>>> {
    let fps = system_fingerprints(system, points, max_word_len)?;
    Ok(distinct_matrix(&fps, tol))
}

pub(crate) fn distinct_matrix(fps: &[Vec<f64>], tol: f64) -> Vec<Vec<bool>> {
    let n = fps.len();
    let mut out = vec![vec![false; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let diff = fps[i]
                .iter()
                .zip(&fps[j])
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            out[i][j] = diff > tol;
            out[j][i] = out[i][j];
        }
    }
    out
}

/// `‖I − exp(−i h t)‖` from the eigenvalues of `h`.
fn recurrence_defect(eigenvalues: &[f64], t: f64) -> f64 {
    eigenvalues
        .iter()
        .map(|&l| 2.0 * (0.5 * l * t).sin().abs())
        .fold(0.0, f64::max)
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * b.abs().max(1.0) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        x1
    } else {
        x2
    }
}

/// Smallest `t ≤ t_max` with `‖I − exp(−i h t)‖ < eps`.
///
/// Scans `t = dt, 2dt, …` and refines every grid point that already meets
/// `eps` or is a local minimum of the defect by golden-section search over
/// the two neighbouring grid cells. Candidates count only after the
/// evolution has left the `eps`-ball around the identity, so the trivial
/// neighbourhood of `t = 0` is excluded. Returns `None` when nothing is
/// found.
pub fn recurrence_time(h: &CMatrix, eps: f64, t_max: f64, dt: f64) -> Result<Option<f64>> {
    if eps.is_nan() || eps <= 0.0 || dt.is_nan() || dt <= 0.0 || t_max.is_nan() || dt >= t_max {
        return Err(Error::InvalidArgument(format!(
            "recurrence search needs eps > 0 and 0 < dt < t_max (eps={eps}, dt={dt}, t_max={t_max})"
        )));
    }
    let eig = h.eigh()?;
    let lam = eig.values;
    let defect = |t: f64| recurrence_defect(&lam, t);
    let n = (t_max / dt).floor() as usize;
    let at = |k: usize| k as f64 * dt;
    let mut prev = defect(0.0);
    let mut cur = defect(at(1));
    let mut left = false;
    for k in 1..=n {
        let next = if k < n {
            defect(at(k + 1))
        } else {
            f64::INFINITY
        };
        left |= cur >= eps;
        let interior_min = k >= 2 && cur <= prev && cur <= next;
        if left && (cur < eps || interior_min) {
            let lo = at(k - 1).max(dt);
            let hi = at(k + 1).min(t_max);
            let t = golden_min(defect, lo, hi);
            let (t, d) = if defect(t) <= cur {
                (t, defect(t))
            } else {
                (at(k), cur)
            };
            if d < eps {
                return Ok(Some(t));
            }
        }
        prev = cur;
        cur = next;
    }
    Ok(None)
}

/// The ε-recurrence defect `‖I − exp(−i h t)‖`, exposed for reports.
pub fn recurrence_defect_at(h: &CMatrix, t: f64) -> Result<f64> {
    Ok(recurrence_defect(&h.eigh()?.values, t))
}
