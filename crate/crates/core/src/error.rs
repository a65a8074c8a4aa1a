// Copyright 2026 The robustctl Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("bad shape: {0}")]
    Shape(String),
    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),
    #[error("unknown Pauli label `{0}`")]
    UnknownPauli(String),
    #[error("unknown system `{0}`")]
    UnknownSystem(String),
    #[error("unknown gate `{0}`")]
    UnknownGate(String),
    #[error("expected {expected} parameter value(s), got {got}")]
    Arity { expected: usize, got: usize },
    #[error("parameter {name} = {value} outside its domain [{min}, {max}]")]
    OutOfDomain {
        name: String,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("invalid system definition: {0}")]
    SystemDefinition(String),
    #[error("Lie closure not reached after {depth} sweeps (dimension so far {dim})")]
    ClosureIncomplete { depth: usize, dim: usize },
    #[error("invalid interval [{0}, {1}]")]
    Interval(f64, f64),
    #[error("{0}")]
    InvalidArgument(String),
    #[error("extended system too large: N*d = {0} exceeds {1}")]
    SizeCap(usize, usize),
    #[error("pulse file: {0}")]
    PulseFormat(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
