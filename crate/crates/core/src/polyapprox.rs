// Copyright 2026 The robustctl Authors
// SPDX-License-Identifier: Apache-2.0

//! Minimax fits of odd polynomials `p(ω) = ω f(ω²)` to constants.
//!
//! A system that can simulate `ω^{2k+1} P` for every `k` can simulate
//! `θ P` robustly on `[ω₀, ω₁]` to the accuracy with which an odd polynomial
//! approximates the constant `θ` there. That is only possible when the
//! interval excludes zero; otherwise every odd polynomial vanishes at `ω = 0`
//! and the error is at least `|θ|`.
//!
//! Fits are discrete minimax problems on a 2001-point Chebyshev grid, solved
//! with a multiple-exchange (Remez) iteration. Inner polynomials are kept in
//! a Chebyshev basis of `ω²` mapped onto `[-1, 1]`; monomial coefficients are
//! derived from that for reporting only. Sup errors are always re-measured
//! on an independent 10 001-point uniform grid.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Points in the Chebyshev grid the fit is solved on.
pub const FIT_GRID_POINTS: usize = 2001;
/// Points in the uniform grid sup errors are reported on.
pub const CHECK_GRID_POINTS: usize = 10_001;

const MAX_EXCHANGES: usize = 200;

/// `f(s) = Σ a_k T_k(x)` with `x = (2s − lo − hi)/(hi − lo)`.
#[derive(Clone, Debug, Serialize)]
pub struct SquaredChebyshev {
    pub cheb: Vec<f64>,
    pub s_lo: f64,
    pub s_hi: f64,
}

impl SquaredChebyshev {
    fn for_interval(interval: (f64, f64), degree: usize) -> Self {
        let (a, b) = interval;
        let (s_lo, s_hi) = if a <= 0.0 && b >= 0.0 {
            (0.0, (a * a).max(b * b))
        } else {
            ((a * a).min(b * b), (a * a).max(b * b))
        };
        SquaredChebyshev {
            cheb: vec![0.0; degree + 1],
            s_lo,
            s_hi,
        }
    }

    fn map(&self, s: f64) -> f64 {
        if self.s_hi == self.s_lo {
            return 0.0;
        }
        (2.0 * s - self.s_lo - self.s_hi) / (self.s_hi - self.s_lo)
    }

    fn basis(&self, s: f64, out: &mut [f64]) {
        let x = self.map(s);
        for k in 0..out.len() {
            out[k] = match k {
                0 => 1.0,
                1 => x,
                _ => 2.0 * x * out[k - 1] - out[k - 2],
            };
        }
    }

    /// Clenshaw evaluation of `f(s)`.
    pub fn eval(&self, s: f64) -> f64 {
        let x = self.map(s);
        let (mut b1, mut b2) = (0.0, 0.0);
        for &a in self.cheb.iter().skip(1).rev() {
            let b0 = a + 2.0 * x * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        self.cheb.first().copied().unwrap_or(0.0) + x * b1 - b2
    }

    /// Coefficients of `f` in powers of `s`.
    pub fn monomial(&self) -> Vec<f64> {
        let n = self.cheb.len();
        let (alpha, beta) = if self.s_hi == self.s_lo {
            (0.0, 0.0)
        } else {
            let w = self.s_hi - self.s_lo;
            (2.0 / w, -(self.s_lo + self.s_hi) / w)
        };
        let mut out = vec![0.0; n];
        let mut prev: Vec<f64> = vec![1.0];
        let mut cur: Vec<f64> = vec![beta, alpha];
        for (k, &a) in self.cheb.iter().enumerate() {
            let t: &[f64] = match k {
                0 => &prev,
                1 => &cur,
                _ => {
                    let mut next = vec![0.0; k + 1];
                    for (i, &c) in cur.iter().enumerate() {
                        next[i] += 2.0 * beta * c;
                        next[i + 1] += 2.0 * alpha * c;
                    }
                    for (i, &c) in prev.iter().enumerate() {
                        next[i] -= c;
                    }
                    prev = std::mem::replace(&mut cur, next);
                    &cur
                }
            };
            for (i, &c) in t.iter().enumerate() {
                out[i] += a * c;
            }
        }
        out
    }
}

/// `p(ω) = Σ_k c_k ω^{2k+1}` fitted to a constant.
#[derive(Clone, Debug, Serialize)]
pub struct OddPolynomial {
    /// Monomial coefficients `c_0 … c_K`.
    pub coeffs: Vec<f64>,
    pub interval: (f64, f64),
    pub theta: f64,
    /// Max deviation from `theta` on the uniform check grid.
    pub sup_error: f64,
    pub series: SquaredChebyshev,
}

impl OddPolynomial {
    pub fn eval(&self, omega: f64) -> f64 {
        omega * self.series.eval(omega * omega)
    }

    pub fn degree_index(&self) -> usize {
        self.coeffs.len() - 1
    }
}

/// `f(ω²) = Σ_k c_k ω^{2k}` fitted to a function of `ω`.
#[derive(Clone, Debug, Serialize)]
pub struct EvenPolynomial {
    pub coeffs: Vec<f64>,
    pub interval: (f64, f64),
    pub sup_error: f64,
    pub series: SquaredChebyshev,
}

impl EvenPolynomial {
    pub fn eval(&self, omega: f64) -> f64 {
        self.series.eval(omega * omega)
    }
}

/// Even-polynomial fits of the two rational targets
/// `(θ₁ + ωθ₂)/(1 + ω²)` and `(θ₂ − ωθ₁)/(1 + ω²)`.
#[derive(Clone, Debug, Serialize)]
pub struct RationalFit {
    pub f1: EvenPolynomial,
    pub f3: EvenPolynomial,
}

fn check_interval(interval: (f64, f64)) -> Result<()> {
    let (a, b) = interval;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::Interval(a, b));
    }
    Ok(())
}

/// Chebyshev-distributed points on `[a, b]`, ascending.
pub fn chebyshev_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (0..n)
        .map(|i| {
            let theta = std::f64::consts::PI * (n - 1 - i) as f64 / (n - 1) as f64;
            (mid + half * theta.cos()).clamp(a, b)
        })
        .collect()
}

/// Uniform points on `[a, b]` including both ends.
pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i == n - 1 {
                b
            } else {
                a + (b - a) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// Discrete minimax solution of `min_c max_i |t_i − Σ_k c_k Φ_ik|` for a
/// Haar system sampled at ascending points. Returns the coefficients with the
/// smallest max residual seen.
fn remez(phi: &DMatrix<f64>, target: &[f64]) -> Vec<f64> {
    let m = phi.nrows();
    let n = phi.ncols();
    if target.iter().all(|&t| t == 0.0) {
        return vec![0.0; n];
    }
    let refs = n + 1;
    let mut reference: Vec<usize> = (0..refs)
        .map(|j| ((j as f64) * (m - 1) as f64 / (refs - 1) as f64).round() as usize)
        .collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..MAX_EXCHANGES {
        let mut a = DMatrix::<f64>::zeros(refs, refs);
        let mut rhs = DVector::<f64>::zeros(refs);
        for (row, &i) in reference.iter().enumerate() {
            for k in 0..n {
                a[(row, k)] = phi[(i, k)];
            }
            a[(row, n)] = if row % 2 == 0 { 1.0 } else { -1.0 };
            rhs[row] = target[i];
        }
        let Some(sol) = a.lu().solve(&rhs) else { break };
        let coeffs: Vec<f64> = sol.iter().take(n).cloned().collect();
        let level = sol[n].abs();
        let resid: Vec<f64> = (0..m)
            .map(|i| target[i] - (0..n).map(|k| phi[(i, k)] * coeffs[k]).sum::<f64>())
            .collect();
        let max_resid = resid.iter().fold(0.0f64, |acc, r| acc.max(r.abs()));
        if best.as_ref().is_none_or(|(b, _)| max_resid < *b) {
            best = Some((max_resid, coeffs.clone()));
        }
        if max_resid <= level * (1.0 + 1e-12) + 1e-15 {
            break;
        }
        let next = exchange(&resid, refs);
        if next.len() != refs || next == reference {
            break;
        }
        reference = next;
    }
    best.map(|(_, c)| c).unwrap_or_else(|| vec![0.0; n])
}

/// Alternating extrema of the residual, pruned to `refs` points while
/// keeping the largest ones.
fn exchange(resid: &[f64], refs: usize) -> Vec<usize> {
    let mut ext: Vec<usize> = Vec::new();
    for (i, &r) in resid.iter().enumerate() {
        if r == 0.0 {
            continue;
        }
        match ext.last() {
            Some(&j) if resid[j].signum() == r.signum() => {
                if r.abs() > resid[j].abs() {
                    *ext.last_mut().unwrap() = i;
                }
            }
            _ => ext.push(i),
        }
    }
    while ext.len() > refs {
        let (pos, _) = ext
            .iter()
            .enumerate()
            .min_by(|a, b| resid[*a.1].abs().total_cmp(&resid[*b.1].abs()))
            .unwrap();
        if pos == 0 || pos == ext.len() - 1 {
            ext.remove(pos);
        } else if ext.len() - refs == 1 {
            // Dropping an interior point would break alternation; drop the
            // smaller end instead.
            if resid[ext[0]].abs() <= resid[*ext.last().unwrap()].abs() {
                ext.remove(0);
            } else {
                ext.pop();
            }
        } else {
            let left = resid[ext[pos - 1]].abs();
            let right = resid[ext[pos + 1]].abs();
            ext.remove(pos);
            if left <= right {
                ext.remove(pos - 1);
            } else {
                ext.remove(pos);
            }
        }
    }
    ext
}

fn fit_series(
    interval: (f64, f64),
    degree: usize,
    weight: impl Fn(f64) -> f64 + Sync,
    target: impl Fn(f64) -> f64 + Sync,
) -> SquaredChebyshev {
    let mut series = SquaredChebyshev::for_interval(interval, degree);
    let grid = chebyshev_grid(interval.0, interval.1, FIT_GRID_POINTS);
    let n = degree + 1;
    let mut phi = DMatrix::<f64>::zeros(grid.len(), n);
    let mut row = vec![0.0; n];
    for (i, &w) in grid.iter().enumerate() {
        series.basis(w * w, &mut row);
        let scale = weight(w);
        for k in 0..n {
            phi[(i, k)] = scale * row[k];
        }
    }
    let t: Vec<f64> = grid.iter().map(|&w| target(w)).collect();
    series.cheb = remez(&phi, &t);
    series
}

fn sup_deviation(interval: (f64, f64), f: impl Fn(f64) -> f64) -> f64 {
    uniform_grid(interval.0, interval.1, CHECK_GRID_POINTS)
        .into_iter()
        .map(|w| f(w).abs())
        .fold(0.0, f64::max)
}

fn fit_odd_exact_degree(interval: (f64, f64), degree_index: usize, theta: f64) -> OddPolynomial {
    let (a, b) = interval;
    let series = if a <= 0.0 && b >= 0.0 {
        SquaredChebyshev::for_interval(interval, degree_index)
    } else {
        fit_series(interval, degree_index, |w| w, |_| theta)
    };
    let sup_error = sup_deviation(interval, |w| w * series.eval(w * w) - theta);
    OddPolynomial {
        coeffs: series.monomial(),
        interval,
        theta,
        sup_error,
        series,
    }
}

/// Zero-pads `p` to degree index `k`.
fn pad(mut p: OddPolynomial, k: usize) -> OddPolynomial {
    p.series.cheb.resize(k + 1, 0.0);
    p.coeffs = p.series.monomial();
    p
}

/// Fits for every degree index `0..=k_max`, each replaced by the best
/// measured fit of lower or equal degree. Near machine precision the
/// exchange can land a higher-degree fit slightly above a lower-degree one;
/// the lower-degree polynomial is also a candidate of the higher degree, so
/// errors come out non-increasing in K.
fn fit_odd_ladder(interval: (f64, f64), k_max: usize, theta: f64) -> Vec<OddPolynomial> {
    let raw: Vec<OddPolynomial> = (0..=k_max)
        .into_par_iter()
        .map(|k| fit_odd_exact_degree(interval, k, theta))
        .collect();
    let mut out: Vec<OddPolynomial> = Vec::with_capacity(raw.len());
    for (k, p) in raw.into_iter().enumerate() {
        match out.last() {
            Some(prev) if prev.sup_error < p.sup_error => out.push(pad(prev.clone(), k)),
            _ => out.push(p),
        }
    }
    out
}

/// Best odd polynomial `Σ_{k≤K} c_k ω^{2k+1}` approximating `theta` on the
/// interval. When the interval contains zero the optimum is `p = 0` with
/// error `|θ|`, which is what gets returned.
pub fn fit_odd_constant(
    interval: (f64, f64),
    degree_index: usize,
    theta: f64,
) -> Result<OddPolynomial> {
    check_interval(interval)?;
    Ok(fit_odd_ladder(interval, degree_index, theta).pop().unwrap())
}

/// Fits `f₁(ω²)` and `f₃(ω²)` to the rational targets that make
/// `f₁ − ωf₃ = θ₁` and `f₃ + ωf₁ = θ₂`. The interval must exclude zero so
/// that `ω` has a fixed sign as a function of `ω²`.
pub fn fit_rational_target(
    interval: (f64, f64),
    degree_index: usize,
    theta1: f64,
    theta2: f64,
) -> Result<RationalFit> {
    check_interval(interval)?;
    let (a, b) = interval;
    if a <= 0.0 && b >= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "interval [{a}, {b}] contains 0: the branch ω = ±√(ω²) is undefined"
        )));
    }
    let t1 = move |w: f64| (theta1 + w * theta2) / (1.0 + w * w);
    let t3 = move |w: f64| (theta2 - w * theta1) / (1.0 + w * w);
    let make = |target: &(dyn Fn(f64) -> f64 + Sync)| {
        let series = fit_series(interval, degree_index, |_| 1.0, target);
        let sup_error = sup_deviation(interval, |w| series.eval(w * w) - target(w));
        EvenPolynomial {
            coeffs: series.monomial(),
            interval,
            sup_error,
            series,
        }
    };
    Ok(RationalFit {
        f1: make(&t1),
        f3: make(&t3),
    })
}

/// `(K, sup_error)` for each requested degree index, in the given order.
pub fn sup_error_table(
    interval: (f64, f64),
    theta: f64,
    degrees: &[usize],
) -> Result<Vec<(usize, f64)>> {
    check_interval(interval)?;
    let Some(&k_max) = degrees.iter().max() else {
        return Ok(Vec::new());
    };
    let ladder = fit_odd_ladder(interval, k_max, theta);
    Ok(degrees.iter().map(|&k| (k, ladder[k].sup_error)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_zero_on_one_two() {
        let p = fit_odd_constant((1.0, 2.0), 0, 1.0).unwrap();
        assert!((p.coeffs[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((p.sup_error - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(p.degree_index(), 0);
    }

    #[test]
    fn table_is_non_increasing_down_to_rounding_level() {
        let ks: Vec<usize> = (0..=40).collect();
        let t = sup_error_table((1.0, 2.0), 1.0, &ks).unwrap();
        assert!(t.windows(2).all(|w| w[1].1 <= w[0].1));
        assert!(t[40].1 < 1e-13);
        let p = fit_odd_constant((1.0, 2.0), 40, 1.0).unwrap();
        assert_eq!(p.coeffs.len(), 41);
        assert_eq!(p.sup_error, t[40].1);
    }

    #[test]
    fn interval_through_zero_cannot_beat_theta() {
        for k in [0, 3, 10] {
            let p = fit_odd_constant((-1.0, 1.0), k, 1.0).unwrap();
            assert!(p.sup_error >= 1.0, "K={k}: {}", p.sup_error);
        }
        let p = fit_odd_constant((0.0, 1.0), 4, -2.5).unwrap();
        assert!(p.sup_error >= 2.5);
    }

    #[test]
    fn higher_degree_fits_better() {
        let low = fit_odd_constant((1.0, 2.0), 2, 1.0).unwrap();
        let high = fit_odd_constant((1.0, 2.0), 6, 1.0).unwrap();
        assert!(high.sup_error < low.sup_error);
    }

    #[test]
    fn odd_symmetry() {
        let p = fit_odd_constant((1.0, 2.0), 5, 0.7).unwrap();
        for w in [0.3, 1.1, 1.9, 2.7] {
            assert_eq!(p.eval(-w), -p.eval(w));
        }
    }

    #[test]
    fn negative_interval_mirrors_positive() {
        let pos = fit_odd_constant((1.0, 2.0), 3, 1.0).unwrap();
        let neg = fit_odd_constant((-2.0, -1.0), 3, -1.0).unwrap();
        assert!((pos.sup_error - neg.sup_error).abs() < 1e-9);
    }

    #[test]
    fn sup_error_matches_dense_reevaluation() {
        let p = fit_odd_constant((1.0, 2.0), 4, 1.0).unwrap();
        let dense = uniform_grid(1.0, 2.0, CHECK_GRID_POINTS)
            .into_iter()
            .map(|w| (p.eval(w) - 1.0).abs())
            .fold(0.0, f64::max);
        assert!((dense - p.sup_error).abs() <= 1e-9);
        for w in [1.0, 2.0] {
            assert!((p.eval(w) - 1.0).abs() <= p.sup_error + 1e-9);
        }
    }

    #[test]
    fn monomial_coefficients_agree_with_series() {
        let p = fit_odd_constant((1.0, 2.0), 4, 1.0).unwrap();
        for w in [1.0f64, 1.25, 1.5, 2.0] {
            let direct: f64 = p
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * w.powi(2 * k as i32 + 1))
                .sum();
            assert!(
                (direct - p.eval(w)).abs() < 1e-8,
                "{direct} vs {}",
                p.eval(w)
            );
        }
    }

    #[test]
    fn rational_targets() {
        let lo = fit_rational_target((1.0, 2.0), 4, 1.0, 0.0).unwrap();
        let hi = fit_rational_target((1.0, 2.0), 8, 1.0, 0.0).unwrap();
        assert!(hi.f1.sup_error < lo.f1.sup_error);
        assert!(hi.f3.sup_error < lo.f3.sup_error);
        let zero = fit_rational_target((1.0, 2.0), 3, 0.0, 0.0).unwrap();
        assert_eq!(zero.f1.sup_error, 0.0);
        assert_eq!(zero.f3.sup_error, 0.0);
        assert!(zero.f1.coeffs.iter().all(|&c| c == 0.0));
        assert!(fit_rational_target((-1.0, 1.0), 3, 1.0, 0.0).is_err());
    }

    #[test]
    fn rational_fit_reconstructs_rotation_angles() {
        let (t1, t2) = (0.4, -0.9);
        let fit = fit_rational_target((1.0, 2.0), 12, t1, t2).unwrap();
        for w in [1.0, 1.37, 2.0] {
            let f1 = fit.f1.eval(w);
            let f3 = fit.f3.eval(w);
            assert!((f1 - w * f3 - t1).abs() < 1e-6);
            assert!((f3 + w * f1 - t2).abs() < 1e-6);
        }
    }

    #[test]
    fn degenerate_interval_rejected() {
        assert!(matches!(
            fit_odd_constant((1.0, 1.0), 2, 1.0),
            Err(Error::Interval(..))
        ));
        assert!(fit_odd_constant((2.0, 1.0), 2, 1.0).is_err());
    }
}
