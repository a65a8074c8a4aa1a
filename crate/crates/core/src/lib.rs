// Copyright 2026 The robustctl Authors
// SPDX-License-Identifier: Apache-2.0

//! Robust control of one- and two-qubit Hamiltonians with unknown drift
//! parameters.
//!
//! The crate covers three jobs:
//!
//! * controllability analysis: dynamical Lie algebra closure, span
//!   membership, trace-word fingerprints that certify two systems are not
//!   unitarily equivalent, and ε-recurrence times ([`algebra`]);
//! * discretization of the unknown parameter into a grid and the
//!   block-diagonal extended system used to decide ensemble controllability
//!   ([`ensemble`]);
//! * pulse synthesis by ensemble GRAPE with an exact gradient ([`grape`]), and
//!   robustness evaluation over the continuous interval ([`evaluate`]).
//!
//! [`polyapprox`] fits odd polynomials `ω f(ω²)` to constants, the device used
//! to argue robust controllability of single-qubit systems.

pub mod algebra;
pub mod cli;
pub mod ensemble;
pub mod error;
pub mod evaluate;
pub mod gates;
pub mod grape;
pub mod io;
pub mod models;
pub mod polyapprox;
pub mod qmat;

pub use error::{Error, Result};
pub use qmat::CMatrix;
