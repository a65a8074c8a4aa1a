// Copyright 2026 The robustctl Authors
// SPDX-License-Identifier: Apache-2.0

//! Target gates in the computational basis. For two-qubit gates the first
//! qubit is the most significant bit, so `|10⟩` is index 2.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmat::{c64, CMatrix};

/// Unitarity tolerance for gates read from a file.
pub const GATE_UNITARITY_TOL: f64 = 1e-8;

pub const NAMED_GATES: &[&str] = &["CNOT", "CZ", "SWAP", "identity", "X", "Z", "H"];

fn real(dim: usize, rows: &[&[f64]]) -> CMatrix {
    CMatrix::from_fn(dim, dim, |i, j| c64(rows[i][j], 0.0))
}

/// A named gate. `identity` takes any dimension; `X`, `Z` and `H` are
/// single-qubit; the rest are two-qubit.
pub fn named_gate(name: &str, dim: usize) -> Result<CMatrix> {
    let want = |d: usize| {
        if d == dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "gate {name} is {d}x{d}, system dimension is {dim}"
            )))
        }
    };
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match name.to_ascii_uppercase().as_str() {
        "CNOT" | "CX" => {
            want(4)?;
            Ok(real(
                4,
                &[
                    &[1.0, 0.0, 0.0, 0.0],
                    &[0.0, 1.0, 0.0, 0.0],
                    &[0.0, 0.0, 0.0, 1.0],
                    &[0.0, 0.0, 1.0, 0.0],
                ],
            ))
        }
        "CZ" => {
            want(4)?;
            Ok(CMatrix::from_real_diagonal(&[1.0, 1.0, 1.0, -1.0]))
        }
        "SWAP" => {
            want(4)?;
            Ok(real(
                4,
                &[
                    &[1.0, 0.0, 0.0, 0.0],
                    &[0.0, 0.0, 1.0, 0.0],
                    &[0.0, 1.0, 0.0, 0.0],
                    &[0.0, 0.0, 0.0, 1.0],
                ],
            ))
        }
        "IDENTITY" | "I" => Ok(CMatrix::identity(dim)),
        "X" => {
            want(2)?;
            Ok(real(2, &[&[0.0, 1.0], &[1.0, 0.0]]))
        }
        "Z" => {
            want(2)?;
            Ok(CMatrix::from_real_diagonal(&[1.0, -1.0]))
        }
        "H" => {
            want(2)?;
            Ok(real(2, &[&[h, h], &[h, -h]]))
        }
        _ => Err(Error::UnknownGate(name.to_string())),
    }
}

/// File format for a user-supplied gate: row-major real and (optional)
/// imaginary parts.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GateFile {
    pub real: Vec<Vec<f64>>,
    #[serde(default)]
    pub imag: Option<Vec<Vec<f64>>>,
}

impl GateFile {
    pub fn to_matrix(&self) -> Result<CMatrix> {
        let n = self.real.len();
        let square = |rows: &Vec<Vec<f64>>| rows.len() == n && rows.iter().all(|r| r.len() == n);
        if n == 0 || !square(&self.real) || !self.imag.as_ref().is_none_or(square) {
            return Err(Error::Shape("gate must be a square matrix".into()));
        }
        let m = CMatrix::from_fn(n, n, |i, j| {
            c64(
                self.real[i][j],
                self.imag.as_ref().map_or(0.0, |im| im[i][j]),
            )
        });
        m.ensure_unitary(GATE_UNITARITY_TOL)?;
        Ok(m)
    }
}

/// Reads a gate from JSON (see [`GateFile`]).
pub fn load_gate(path: &Path) -> Result<CMatrix> {
    let text = std::fs::read_to_string(path)?;
    let file: GateFile = serde_json::from_str(&text)?;
    file.to_matrix()
}

/// A named gate, or a JSON file when `spec` is not a gate name.
pub fn resolve_gate(spec: &str, dim: usize) -> Result<CMatrix> {
    match named_gate(spec, dim) {
        Err(Error::UnknownGate(_)) => {
            let g = load_gate(Path::new(spec))?;
            if g.rows() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "gate in {spec} is {}x{}, system dimension is {dim}",
                    g.rows(),
                    g.rows()
                )));
            }
            Ok(g)
        }
        other => other,
    }
}
