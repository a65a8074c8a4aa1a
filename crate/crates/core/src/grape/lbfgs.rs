// Copyright 2026 The robustctl Authors
// SPDX-License-Identifier: Apache-2.0

//! Limited-memory BFGS on a box `|x_i| ≤ bound`, with a projected Armijo
//! backtracking line search.

use std::collections::VecDeque;

use crate::error::Result;

pub(crate) struct Evaluation {
    pub value: f64,
    pub grad: Vec<f64>,
    /// Quantity compared against the stopping threshold.
    pub worst: f64,
}

pub(crate) struct Options {
    pub max_iter: usize,
    pub memory: usize,
    pub bound: f64,
    pub threshold: f64,
    /// Give up when the value fell by less than `stall_rel` (relative) over
    /// the last `stall_window` iterations. A window of 0 disables this.
    pub stall_window: usize,
    pub stall_rel: f64,
}

pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub iterations: usize,
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Components that may move: not pinned at a bound with the gradient pushing
/// further out.
fn free_mask(x: &[f64], g: &[f64], bound: f64) -> Vec<bool> {
    x.iter()
        .zip(g)
        .map(|(&xi, &gi)| !((xi >= bound && gi < 0.0) || (xi <= -bound && gi > 0.0)))
        .collect()
}

fn two_loop(g: &[f64], pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = pairs.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in &mut q {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

pub(crate) fn minimize(
    mut f: impl FnMut(&[f64]) -> Result<Evaluation>,
    x0: Vec<f64>,
    opts: &Options,
) -> Result<Outcome> {
    let bound = opts.bound;
    let mut x: Vec<f64> = x0.into_iter().map(|v| v.clamp(-bound, bound)).collect();
    let mut cur = f(&x)?;
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;
    let mut history = vec![cur.value];

    while iterations < opts.max_iter && cur.worst > opts.threshold {
        let w = opts.stall_window;
        if w > 0 && history.len() > w {
            let past = history[history.len() - 1 - w];
            if past - cur.value < opts.stall_rel * past {
                break;
            }
        }
        let free = free_mask(&x, &cur.grad, bound);
        let g_free: Vec<f64> = cur
            .grad
            .iter()
            .zip(&free)
            .map(|(&g, &ok)| if ok { g } else { 0.0 })
            .collect();
        if g_free.iter().all(|g| g.abs() < 1e-14) {
            break;
        }
        let mut dir = two_loop(&g_free, &pairs);
        for (d, &ok) in dir.iter_mut().zip(&free) {
            if !ok {
                *d = 0.0;
            }
        }
        if dot(&dir, &g_free) >= 0.0 {
            pairs.clear();
            dir = g_free.iter().map(|g| -g).collect();
        }
        if pairs.is_empty() {
            // Without curvature information cap the first move at one unit.
            let big = dir.iter().fold(0.0f64, |m, d| m.max(d.abs()));
            if big > 1.0 {
                dir.iter_mut().for_each(|d| *d /= big);
            }
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = x
                .iter()
                .zip(&dir)
                .map(|(xi, di)| (xi + step * di).clamp(-bound, bound))
                .collect();
            let moved: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
            let decrease = dot(&cur.grad, &moved);
            let next = f(&trial)?;
            if next.value <= cur.value + ARMIJO * decrease && decrease < 0.0 {
                accepted = Some((trial, moved, next));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, s, next)) = accepted else {
            if pairs.is_empty() {
                break;
            }
            pairs.clear();
            continue;
        };
        let y: Vec<f64> = next
            .grad
            .iter()
            .zip(&cur.grad)
            .map(|(a, b)| a - b)
            .collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if pairs.len() == opts.memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        x = trial;
        cur = next;
        history.push(cur.value);
        iterations += 1;
    }
    Ok(Outcome { x, iterations })
}
