// Copyright 2026 The robustctl Authors
// SPDX-License-Identifier: Apache-2.0

//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Run alone with `cargo test --release --test acceptance`.
//! `ROBUSTCTL_ACCEPT=3,4` restricts the run to the listed criteria.

use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robustctl::algebra::{
    equivalence_fingerprint, lie_closure, system_generators, DEFAULT_CLOSURE_TOL,
    DEFAULT_MAX_DEPTH, DEFAULT_WORD_LEN,
};
use robustctl::ensemble::{extend, make_grid, ParameterGrid, EXTENDED_MAX_DEPTH};
use robustctl::evaluate::{bound_check, min_control_time, sweep, MinTimeOptions};
use robustctl::gates::named_gate;
use robustctl::grape::{
    ensemble_objective, gradient, optimize, Metric, OptimizerConfig, PulseSchedule,
};
use robustctl::models::{ControlSystem, CATALOG};
use robustctl::polyapprox::{fit_odd_constant, sup_error_table};
use robustctl::qmat::pauli;
use robustctl::CMatrix;

type Outcome = Result<String, String>;
type Criterion = (usize, &'static str, fn() -> Outcome);

fn check(cond: bool, msg: String) -> Outcome {
    if cond {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

// ---------------------------------------------------------------------------
// Independent closure oracle in Pauli coordinates.
//
// An element is a list of blocks; each block holds the real coefficients of a
// Hermitian matrix on the non-identity Pauli strings. The bracket i[A, B] is
// computed from the Pauli multiplication table, and the span is tracked by
// Gaussian elimination with partial pivoting.

/// `σ_a σ_b = i^k σ_c` with labels 0..4 = I, X, Y, Z; returns (k, c).
fn pauli_mul(a: usize, b: usize) -> (u32, usize) {
    match (a, b) {
        (0, _) => (0, b),
        (_, 0) => (0, a),
        _ if a == b => (0, 0),
        _ => {
            let c = 6 - a - b;
            let cyclic = matches!((a, b), (1, 2) | (2, 3) | (3, 1));
            (if cyclic { 1 } else { 3 }, c)
        }
    }
}

struct PauliOracle {
    qubits: usize,
}

impl PauliOracle {
    fn digits(&self, index: usize) -> Vec<usize> {
        (0..self.qubits)
            .map(|q| (index >> (2 * (self.qubits - 1 - q))) & 3)
            .collect()
    }

    fn index(&self, digits: &[usize]) -> usize {
        digits.iter().fold(0, |acc, &d| (acc << 2) | d)
    }

    fn label(&self, index: usize) -> String {
        self.digits(index)
            .iter()
            .map(|&d| ['I', 'X', 'Y', 'Z'][d])
            .collect()
    }

    fn n_strings(&self) -> usize {
        1 << (2 * self.qubits)
    }

    /// Pauli coordinates of a Hermitian matrix, identity dropped.
    fn coords(&self, h: &CMatrix) -> Vec<f64> {
        let d = h.dim() as f64;
        (1..self.n_strings())
            .map(|i| {
                let p = pauli::string(&self.label(i)).unwrap();
                p.hs_inner(h).unwrap().re / d
            })
            .collect()
    }

    /// `i[A, B]` for one block.
    fn bracket(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; a.len()];
        for (i, &x) in a.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            let pd = self.digits(i + 1);
            for (j, &y) in b.iter().enumerate() {
                if y == 0.0 {
                    continue;
                }
                let qd = self.digits(j + 1);
                let mut k = 0u32;
                let mut anti = 0usize;
                let mut rd = Vec::with_capacity(self.qubits);
                for (&p, &q) in pd.iter().zip(&qd) {
                    let (kk, r) = pauli_mul(p, q);
                    k += kk;
                    if p != 0 && q != 0 && p != q {
                        anti += 1;
                    }
                    rd.push(r);
                }
                if anti.is_multiple_of(2) {
                    continue;
                }
                // PQ = i^k R with k odd, [P,Q] = 2 i^k R, i[P,Q] = 2 i^(k+1) R.
                let sign = if (k + 1).is_multiple_of(4) { 1.0 } else { -1.0 };
                let r = self.index(&rd);
                out[r - 1] += 2.0 * sign * x * y;
            }
        }
        out
    }
}

/// Row-reduced span of real vectors.
struct Span {
    rows: Vec<(usize, Vec<f64>)>,
    tol: f64,
}

impl Span {
    fn new(tol: f64) -> Self {
        Span {
            rows: Vec::new(),
            tol,
        }
    }

    /// Adds `v` if it is independent; returns whether it was added.
    fn insert(&mut self, v: &[f64]) -> bool {
        let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if scale == 0.0 {
            return false;
        }
        let mut r: Vec<f64> = v.iter().map(|x| x / scale).collect();
        for (piv, row) in &self.rows {
            let f = r[*piv];
            if f != 0.0 {
                for (a, b) in r.iter_mut().zip(row) {
                    *a -= f * b;
                }
            }
        }
        let (piv, &m) = r
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .unwrap();
        if m.abs() <= self.tol {
            return false;
        }
        for x in r.iter_mut() {
            *x /= m;
        }
        for (_, row) in self.rows.iter_mut() {
            let f = row[piv];
            if f != 0.0 {
                for (a, b) in row.iter_mut().zip(&r) {
                    *a -= f * b;
                }
            }
        }
        self.rows.push((piv, r));
        true
    }
}

/// Dimension of the Lie algebra generated by block-diagonal Hermitian
/// generators, by brute force: bracket every pair of spanning elements until
/// nothing new appears.
fn oracle_dim(qubits: usize, generators: &[Vec<CMatrix>]) -> usize {
    let o = PauliOracle { qubits };
    let blocks = generators[0].len();
    let width = o.n_strings() - 1;
    let flat = |g: &[Vec<f64>]| g.concat();
    let mut elems: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut span = Span::new(1e-9);
    for g in generators {
        let c: Vec<Vec<f64>> = g.iter().map(|h| o.coords(h)).collect();
        if span.insert(&flat(&c)) {
            elems.push(c);
        }
    }
    let mut done = 0;
    while done < elems.len() {
        let n = elems.len();
        for i in 0..n {
            for j in (done.max(i + 1))..n {
                let b: Vec<Vec<f64>> = (0..blocks)
                    .map(|k| o.bracket(&elems[i][k], &elems[j][k]))
                    .collect();
                if span.insert(&flat(&b)) {
                    elems.push(b);
                }
            }
        }
        done = n;
        assert!(span.rows.len() <= blocks * width);
    }
    span.rows.len()
}

fn point_generators(sys: &ControlSystem, params: &[f64]) -> Vec<Vec<CMatrix>> {
    let mut g = vec![vec![sys.eval_drift(params).unwrap()]];
    g.extend(sys.controls().iter().map(|c| vec![c.clone()]));
    g
}

fn params_by_name(sys: &ControlSystem, values: &[(&str, f64)]) -> Vec<f64> {
    sys.params()
        .iter()
        .map(|p| values.iter().find(|(n, _)| *n == p.name).unwrap().1)
        .collect()
}

// ---------------------------------------------------------------------------

fn ensemble_run(name: &str) -> Outcome {
    let sys = ControlSystem::named(name).map_err(err)?;
    let grid = make_grid(1.0, 2.0, 11).map_err(err)?;
    let target = named_gate("CNOT", 4).map_err(err)?;
    let cfg = OptimizerConfig {
        total_time: 32.0,
        n_segments: 128,
        metric: Metric::PhaseInsensitive,
        restarts: 20,
        ..OptimizerConfig::default()
    };
    let report = optimize(&sys, &grid.configs(), &target, &cfg).map_err(err)?;
    let spectrum = sweep(
        &sys,
        &report.schedule,
        &target,
        (1.0, 2.0),
        1001,
        grid.points(),
    )
    .map_err(err)?;
    let sweep_max = spectrum.max_phase_insensitive();
    let msg = format!(
        "converged={} max grid error {:.3e} (≤1e-3), 1001-point sweep max {:.3e} (≤5e-3), attempts {}, {:.0}s",
        report.converged, report.max_error, sweep_max, report.restarts_used, report.wall_time
    );
    check(
        report.converged && report.max_error <= 1e-3 && spectrum.len() == 1001 && sweep_max <= 5e-3,
        msg,
    )
}

fn criterion_1() -> Outcome {
    ensemble_run("A")
}

fn criterion_2() -> Outcome {
    ensemble_run("E")
}

fn criterion_3() -> Outcome {
    let mut cases: Vec<(String, Vec<f64>, usize)> = Vec::new();
    for name in ["A", "A-variant", "B", "C"] {
        for w in [1.0, 1.5, 2.0] {
            cases.push((name.into(), vec![w], 15));
        }
    }
    let d = ControlSystem::named("D").map_err(err)?;
    cases.push((
        "D".into(),
        params_by_name(&d, &[("nu", 0.5), ("omega", 1.5)]),
        15,
    ));
    cases.push(("E".into(), vec![1.5], 15));
    for name in ["1q-wX", "1q-XwY", "1q-XwZ"] {
        cases.push((name.into(), vec![1.5], 3));
    }
    let mut bad = Vec::new();
    for (name, p, want) in &cases {
        let sys = ControlSystem::named(name).map_err(err)?;
        let lib = lie_closure(
            &system_generators(&sys, p).map_err(err)?,
            DEFAULT_CLOSURE_TOL,
            DEFAULT_MAX_DEPTH,
        )
        .map_err(err)?
        .dim();
        let qubits = if sys.dim() == 4 { 2 } else { 1 };
        let oracle = oracle_dim(qubits, &point_generators(&sys, p));
        if lib != *want || oracle != *want {
            bad.push(format!(
                "{name}{p:?}: library {lib}, oracle {oracle}, expected {want}"
            ));
        }
    }
    check(
        bad.is_empty(),
        if bad.is_empty() {
            format!(
                "{} closures match the oracle and the expected dimensions",
                cases.len()
            )
        } else {
            bad.join("; ")
        },
    )
}

const SIGNED_OMEGA_X: &str = r#"{
    "name": "omega-X",
    "dim": 2,
    "params": [{"name": "omega", "min": -2, "max": 2}],
    "drift": [{"pauli": "X", "param": "omega"}],
    "controls": [[{"pauli": "Z", "coeff": 1}]]
}"#;

fn criterion_4() -> Outcome {
    let x = pauli::x();
    let z = pauli::z();
    let signed = ControlSystem::from_json(SIGNED_OMEGA_X).map_err(err)?;
    let mut notes = Vec::new();
    let mut ok = true;
    for xi in [0.5, 1.0, 2.0] {
        let fa =
            equivalence_fingerprint(&[x.scale(xi), z.clone()], DEFAULT_WORD_LEN).map_err(err)?;
        let fb =
            equivalence_fingerprint(&[x.scale(-xi), z.clone()], DEFAULT_WORD_LEN).map_err(err)?;
        let diff = fa
            .iter()
            .zip(&fb)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let grid = ParameterGrid::new(vec![-xi, xi], (-xi, xi)).map_err(err)?;
        let ext = extend(&signed, &grid).map_err(err)?;
        let dim = ext
            .closure(DEFAULT_CLOSURE_TOL, EXTENDED_MAX_DEPTH)
            .map_err(err)?
            .dim();
        let oracle = oracle_dim(
            1,
            &[vec![x.scale(-xi), x.scale(xi)], vec![z.clone(), z.clone()]],
        );
        ok &=
            fa.len() == fb.len() && diff <= 1e-10 && dim == 3 && oracle == 3 && ext.max_dim() == 6;
        notes.push(format!(
            "ξ={xi}: Δfp {diff:.1e}, dim {dim}/{}",
            ext.max_dim()
        ));
    }
    let a = ControlSystem::named("A").map_err(err)?;
    let grid = ParameterGrid::new(vec![1.0, 1.5, 2.0], (1.0, 2.0)).map_err(err)?;
    let ext = extend(&a, &grid).map_err(err)?;
    let dim = ext
        .closure(DEFAULT_CLOSURE_TOL, EXTENDED_MAX_DEPTH)
        .map_err(err)?
        .dim();
    let blocks: Vec<Vec<CMatrix>> = {
        let mut g = vec![[1.0, 1.5, 2.0]
            .iter()
            .map(|&w| a.eval_drift(&[w]).unwrap())
            .collect()];
        g.extend(a.controls().iter().map(|c| vec![c.clone(); 3]));
        g
    };
    let oracle = oracle_dim(2, &blocks);
    ok &= dim == 45 && oracle == 45;
    notes.push(format!("A on {{1,1.5,2}}: dim {dim}, oracle {oracle}"));
    check(ok, notes.join("; "))
}

fn criterion_5() -> Outcome {
    let sys = ControlSystem::named("A").map_err(err)?;
    let configs = make_grid(1.0, 2.0, 3).map_err(err)?.configs();
    let target = named_gate("CNOT", 4).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let t = rng.random_range(1.0..8.0);
        let amps: Vec<f64> = (0..16).map(|_| rng.random_range(-2.0..2.0)).collect();
        let s = PulseSchedule::new(t, vec![amps], 10.0).map_err(err)?;
        for metric in [Metric::PhaseInsensitive, Metric::Literal] {
            let g = gradient(&sys, &configs, &target, &s, metric).map_err(err)?;
            let flat = s.to_flat();
            let mut fd = Vec::with_capacity(flat.len());
            for m in 0..flat.len() {
                let mut up = flat.clone();
                up[m] += h;
                let mut dn = flat.clone();
                dn[m] -= h;
                let fu = ensemble_objective(
                    &sys,
                    &configs,
                    &target,
                    &s.with_flat(&up).map_err(err)?,
                    metric,
                )
                .map_err(err)?
                .0;
                let fdn = ensemble_objective(
                    &sys,
                    &configs,
                    &target,
                    &s.with_flat(&dn).map_err(err)?,
                    metric,
                )
                .map_err(err)?
                .0;
                fd.push((fu - fdn) / (2.0 * h));
            }
            let scale = g[0].iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let diff = g[0]
                .iter()
                .zip(&fd)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            worst = worst.max(diff / scale);
        }
    }
    check(
        worst <= 1e-6,
        format!("20 instances x 2 metrics, worst relative deviation {worst:.2e} (≤1e-6)"),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut failures = Vec::new();
    let mut total = 0;
    let mut tightest = f64::INFINITY;
    for name in CATALOG {
        let sys = ControlSystem::named(name).map_err(err)?;
        for _ in 0..100 {
            let n_seg = rng.random_range(1..=16);
            let t = rng.random_range(0.1..10.0);
            let amps = (0..sys.n_controls())
                .map(|_| (0..n_seg).map(|_| rng.random_range(-5.0..5.0)).collect())
                .collect();
            let s = PulseSchedule::new(t, amps, 10.0).map_err(err)?;
            let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
                sys.params()
                    .iter()
                    .map(|p| rng.random_range(p.min..=p.max))
                    .collect()
            };
            let a = draw(&mut rng);
            let b = draw(&mut rng);
            let c = bound_check(&sys, &s, &a, &b).map_err(err)?;
            total += 1;
            if c.rhs > 0.0 {
                tightest = tightest.min(c.rhs - c.lhs);
            }
            if !c.holds {
                failures.push(format!("{name} {a:?} {b:?}: {} > {}", c.lhs, c.rhs));
            }
        }
    }
    check(
        failures.is_empty(),
        if failures.is_empty() {
            format!(
                "{total} instances over {} systems, smallest slack {tightest:.2e}",
                CATALOG.len()
            )
        } else {
            failures.join("; ")
        },
    )
}

fn criterion_7() -> Outcome {
    let ks: Vec<usize> = (0..=40).collect();
    let pos = sup_error_table((1.0, 2.0), 1.0, &ks).map_err(err)?;
    let monotone = pos.windows(2).all(|w| w[1].1 <= w[0].1);
    let first_ok = pos.iter().find(|(_, e)| *e <= 1e-3).map(|(k, _)| *k);
    let sym = sup_error_table((-1.0, 1.0), 1.0, &ks).map_err(err)?;
    let sym_min = sym.iter().map(|(_, e)| *e).fold(f64::INFINITY, f64::min);
    let k0 = fit_odd_constant((1.0, 2.0), 0, 1.0).map_err(err)?;
    let c0 = k0.coeffs[0];
    let ok = monotone
        && first_ok.is_some()
        && sym_min >= 1.0 - 1e-12
        && (c0 - 2.0 / 3.0).abs() <= 1e-9
        && (k0.sup_error - 1.0 / 3.0).abs() <= 1e-9;
    check(
        ok,
        format!(
            "[1,2]: non-increasing={monotone}, ≤1e-3 first at K={first_ok:?}, K=40 {:.2e}; [-1,1]: min {sym_min:.15}; K=0: c0={c0:.12}, sup={:.12}",
            pos[40].1, k0.sup_error
        ),
    )
}

fn criterion_8() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_robustctl");
    let dir = tempfile::tempdir().map_err(err)?;
    let mut outputs = Vec::new();
    for (run, threads) in [(0, "1"), (1, "1"), (2, "4"), (3, "3")] {
        let out = dir.path().join(format!("run{run}"));
        let status = Command::new(bin)
            .args([
                "optimize",
                "--system",
                "A",
                "--n",
                "11",
                "--restarts",
                "2",
                "--max-iter",
                "60",
                "--seed",
                "42",
            ])
            .arg("--out")
            .arg(&out)
            .env("ROBUSTCTL_THREADS", threads)
            .output()
            .map_err(err)?;
        let code = status.status.code().unwrap_or(-1);
        if code != 0 && code != 2 {
            return Err(format!(
                "optimize exited with {code}: {}",
                String::from_utf8_lossy(&status.stderr)
            ));
        }
        outputs.push((
            std::fs::read(out.join("pulse.csv")).map_err(err)?,
            std::fs::read(out.join("report.json")).map_err(err)?,
        ));
    }
    let same = outputs.windows(2).all(|w| w[0] == w[1]);
    check(
        same,
        format!("4 runs (threads 1, 1, 4, 3): pulse CSV and report JSON identical = {same}"),
    )
}

fn criterion_9() -> Outcome {
    let target = named_gate("CNOT", 4).map_err(err)?;
    let opts = MinTimeOptions {
        interval: (1.0, 2.0),
        epsilons: vec![1e-2, 1e-3],
        n_values: vec![1, 3, 5],
        t_max: 40,
        segments_per_time: 4.0,
    };
    let cfg = OptimizerConfig::default();
    let mut ok = true;
    let mut notes = Vec::new();
    for name in ["A", "E"] {
        let sys = ControlSystem::named(name).map_err(err)?;
        let table = min_control_time(&sys, &target, "CNOT", &opts, &cfg, None).map_err(err)?;
        let all = table.rows.len() == 6 && table.rows.iter().all(|r| r.converged);
        ok &= all && table.is_monotone();
        let cells: Vec<String> = table
            .rows
            .iter()
            .map(|r| {
                format!(
                    "N={} ε={:e}: T={}{}",
                    r.n,
                    r.epsilon,
                    r.t,
                    if r.converged { "" } else { " (unreached)" }
                )
            })
            .collect();
        notes.push(format!(
            "{name} [{}] monotone={}",
            cells.join(", "),
            table.is_monotone()
        ));
    }
    check(ok, notes.join("; "))
}

fn main() {
    let criteria: [Criterion; 9] = [
        (
            1,
            "ensemble GRAPE on system A (CNOT, T=32, 128 segments, 11 points)",
            criterion_1,
        ),
        (
            2,
            "ensemble GRAPE on system E (CNOT, T=32, 128 segments, 11 points)",
            criterion_2,
        ),
        (
            3,
            "Lie closure dimensions against a Pauli-coordinate oracle",
            criterion_3,
        ),
        (
            4,
            "equivalence fingerprints and extended closures",
            criterion_4,
        ),
        (
            5,
            "analytic gradient against central differences",
            criterion_5,
        ),
        (6, "propagator perturbation bound", criterion_6),
        (7, "odd-polynomial approximation of a constant", criterion_7),
        (8, "CLI determinism across thread counts", criterion_8),
        (9, "minimum control time tables for A and E", criterion_9),
    ];
    let only: Option<Vec<usize>> = std::env::var("ROBUSTCTL_ACCEPT")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut failed = 0;
    for (id, title, f) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS {id}: {title} [{secs:.1}s] {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL {id}: {title} [{secs:.1}s] {msg}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
