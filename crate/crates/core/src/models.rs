// Copyright 2026 The robustctl Authors
// SPDX-License-Identifier: Apache-2.0

//! Parametrized control systems `H(t) = H_d(p) + Σ_k v_k(t) H_k`.
//!
//! Drifts are affine in the unknown parameters:
//! `H_d(p) = H_0 + Σ_j p_j H_j`. Systems are either taken from the built-in
//! catalog ([`ControlSystem::named`]) or loaded from a JSON document of Pauli
//! terms ([`ControlSystem::from_json`]).

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::qmat::{c64, pauli, CMatrix, HERMITIAN_TOL};

/// Names accepted by [`ControlSystem::named`].
pub const CATALOG: &[&str] = &[
    "A",
    "A-variant",
    "B",
    "C",
    "D",
    "E",
    "1q-wX",
    "1q-XwY",
    "1q-XwZ",
];

/// An unknown parameter and the closed interval it is known to lie in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub min: f64,
    pub max: f64,
}

/// One drift term: a Pauli string times a constant, or times a parameter
/// (optionally scaled by `coeff`).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DriftTerm {
    pub pauli: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeff: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ControlTerm {
    pub pauli: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeff: Option<Value>,
}

/// The JSON system-definition document.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SystemDefinition {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dim: usize,
    pub params: Vec<ParamSpec>,
    pub drift: Vec<DriftTerm>,
    pub controls: Vec<Vec<ControlTerm>>,
}

/// A drift Hamiltonian affine in its parameters plus a list of controls.
#[derive(Clone, Debug)]
pub struct ControlSystem {
    name: String,
    dim: usize,
    params: Vec<ParamSpec>,
    drift_constant: CMatrix,
    drift_slopes: Vec<CMatrix>,
    controls: Vec<CMatrix>,
}

fn term(pauli: &str, coeff: f64) -> DriftTerm {
    DriftTerm {
        pauli: pauli.into(),
        coeff: Some(Value::from(coeff)),
        param: None,
    }
}

fn pterm(pauli: &str, param: &str) -> DriftTerm {
    DriftTerm {
        pauli: pauli.into(),
        coeff: None,
        param: Some(param.into()),
    }
}

fn control(pauli: &str) -> Vec<ControlTerm> {
    vec![ControlTerm {
        pauli: pauli.into(),
        coeff: None,
    }]
}

fn omega(min: f64, max: f64) -> ParamSpec {
    ParamSpec {
        name: "omega".into(),
        min,
        max,
    }
}

impl SystemDefinition {
    /// Definition of a catalog system.
    pub fn named(name: &str) -> Result<Self> {
        let key = CATALOG
            .iter()
            .find(|k| k.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::UnknownSystem(name.to_string()))?;
        let heis = |p: &str| vec![pterm("XX", p), pterm("YY", p), pterm("ZZ", p)];
        let fixed_heis = || vec![term("XX", 1.0), term("YY", 1.0), term("ZZ", 1.0)];
        let (dim, params, drift, controls) = match *key {
            "A" => {
                let mut d = vec![pterm("XI", "omega")];
                d.extend(fixed_heis());
                (4, vec![omega(1.0, 2.0)], d, vec![control("ZI")])
            }
            "A-variant" => {
                let mut d = vec![term("XI", 1.0), pterm("YI", "omega")];
                d.extend(fixed_heis());
                (4, vec![omega(1.0, 2.0)], d, vec![control("ZI")])
            }
            "B" => (
                4,
                vec![omega(1.0, 2.0)],
                vec![
                    term("XI", 1.0),
                    term("IX", 1.0),
                    pterm("XX", "omega"),
                    pterm("YY", "omega"),
                ],
                vec![control("ZI")],
            ),
            "C" => (
                4,
                vec![omega(1.0, 2.0)],
                heis("omega"),
                vec![control("XI"), control("ZI")],
            ),
            "D" => {
                let mut d = vec![pterm("XI", "nu")];
                d.extend(heis("omega"));
                let nu = ParamSpec {
                    name: "nu".into(),
                    min: -2.0,
                    max: 2.0,
                };
                (
                    4,
                    vec![nu, omega(1.0, 2.0)],
                    d,
                    vec![control("XI"), control("ZI")],
                )
            }
            "E" => {
                let mut d = vec![term("XI", 1.0)];
                d.extend(heis("omega"));
                (4, vec![omega(1.0, 2.0)], d, vec![control("ZI")])
            }
            "1q-wX" => (
                2,
                vec![omega(1.0, 2.0)],
                vec![pterm("X", "omega")],
                vec![control("Z")],
            ),
            "1q-XwY" => (
                2,
                vec![omega(1.0, 2.0)],
                vec![term("X", 1.0), pterm("Y", "omega")],
                vec![control("Z")],
            ),
            "1q-XwZ" => (
                2,
                vec![omega(1.0, 2.0)],
                vec![term("X", 1.0), pterm("Z", "omega")],
                vec![control("Z")],
            ),
            _ => unreachable!(),
        };
        Ok(SystemDefinition {
            name: Some(key.to_string()),
            dim,
            params,
            drift,
            controls,
        })
    }
}

fn real_coeff(v: Option<&Value>, context: &str) -> Result<f64> {
    match v {
        None => Ok(1.0),
        Some(Value::Number(n)) => n
            .as_f64()
            .ok_or_else(|| Error::SystemDefinition(format!("{context}: bad number"))),
        Some(Value::Array(_)) | Some(Value::Object(_)) => Err(Error::SystemDefinition(format!(
            "{context}: complex coefficient makes the term non-Hermitian"
        ))),
        Some(Value::String(s)) if s.contains('i') || s.contains('j') => {
            Err(Error::SystemDefinition(format!(
                "{context}: complex coefficient `{s}` makes the term non-Hermitian"
            )))
        }
        Some(other) => Err(Error::SystemDefinition(format!(
            "{context}: coefficient must be a real number, got {other}"
        ))),
    }
}

fn pauli_checked(label: &str, dim: usize) -> Result<CMatrix> {
    let p = pauli::string(label)?;
    if p.rows() != dim {
        return Err(Error::SystemDefinition(format!(
            "Pauli string `{label}` has dimension {}, system has {dim}",
            p.rows()
        )));
    }
    Ok(p)
}

impl ControlSystem {
    /// Builds a system from explicit matrices.
    pub fn new(
        name: impl Into<String>,
        params: Vec<ParamSpec>,
        drift_constant: CMatrix,
        drift_slopes: Vec<CMatrix>,
        controls: Vec<CMatrix>,
    ) -> Result<Self> {
        let dim = drift_constant.rows();
        if !drift_constant.is_square() || dim == 0 {
            return Err(Error::Shape("drift must be square".into()));
        }
        if drift_slopes.len() != params.len() {
            return Err(Error::Arity {
                expected: params.len(),
                got: drift_slopes.len(),
            });
        }
        for p in &params {
            if !(p.min.is_finite() && p.max.is_finite() && p.min <= p.max) {
                return Err(Error::Interval(p.min, p.max));
            }
        }
        for m in std::iter::once(&drift_constant)
            .chain(&drift_slopes)
            .chain(&controls)
        {
            if m.rows() != dim || m.cols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "expected {dim}x{dim}, got {}x{}",
                    m.rows(),
                    m.cols()
                )));
            }
            m.ensure_hermitian(HERMITIAN_TOL)?;
        }
        Ok(ControlSystem {
            name: name.into(),
            dim,
            params,
            drift_constant,
            drift_slopes,
            controls,
        })
    }

    /// One of the catalog systems; see [`CATALOG`].
    pub fn named(name: &str) -> Result<Self> {
        Self::from_definition(&SystemDefinition::named(name)?)
    }

    pub fn from_definition(def: &SystemDefinition) -> Result<Self> {
        if def.dim < 2 || !def.dim.is_power_of_two() {
            return Err(Error::SystemDefinition(format!(
                "dim must be a power of two, got {}",
                def.dim
            )));
        }
        let dim = def.dim;
        let mut constant = CMatrix::zeros(dim, dim);
        let mut slopes = vec![CMatrix::zeros(dim, dim); def.params.len()];
        for (i, t) in def.drift.iter().enumerate() {
            let context = format!("drift term {i} ({})", t.pauli);
            let c = real_coeff(t.coeff.as_ref(), &context)?;
            let p = pauli_checked(&t.pauli, dim)?;
            match &t.param {
                None => {
                    if t.coeff.is_none() {
                        return Err(Error::SystemDefinition(format!(
                            "{context}: needs `coeff` or `param`"
                        )));
                    }
                    constant.axpy(c64(c, 0.0), &p);
                }
                Some(name) => {
                    let j = def
                        .params
                        .iter()
                        .position(|q| &q.name == name)
                        .ok_or_else(|| {
                            Error::SystemDefinition(format!(
                                "{context}: unknown parameter `{name}`"
                            ))
                        })?;
                    slopes[j].axpy(c64(c, 0.0), &p);
                }
            }
        }
        let mut controls = Vec::with_capacity(def.controls.len());
        for (k, terms) in def.controls.iter().enumerate() {
            if terms.is_empty() {
                return Err(Error::SystemDefinition(format!("control {k} is empty")));
            }
            let mut h = CMatrix::zeros(dim, dim);
            for t in terms {
                let c = real_coeff(t.coeff.as_ref(), &format!("control {k} ({})", t.pauli))?;
                h.axpy(c64(c, 0.0), &pauli_checked(&t.pauli, dim)?);
            }
            controls.push(h);
        }
        let name = def.name.clone().unwrap_or_else(|| "custom".into());
        Self::new(name, def.params.clone(), constant, slopes, controls)
    }

    /// Parses a JSON system-definition document.
    pub fn from_json(text: &str) -> Result<Self> {
        let def: SystemDefinition = serde_json::from_str(text)
            .map_err(|e| Error::SystemDefinition(format!("parse failure: {e}")))?;
        Self::from_definition(&def)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &[ParamSpec] {
        &self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn controls(&self) -> &[CMatrix] {
        &self.controls
    }

    pub fn n_controls(&self) -> usize {
        self.controls.len()
    }

    /// `∂H_d/∂p_j`.
    pub fn drift_slope(&self, j: usize) -> &CMatrix {
        &self.drift_slopes[j]
    }

    /// Replaces the domain of parameter `j`.
    pub fn with_domain(mut self, j: usize, min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min <= max) {
            return Err(Error::Interval(min, max));
        }
        let p = self
            .params
            .get_mut(j)
            .ok_or_else(|| Error::InvalidArgument(format!("no parameter {j}")))?;
        p.min = min;
        p.max = max;
        Ok(self)
    }

    pub fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::Arity {
                expected: self.params.len(),
                got: params.len(),
            });
        }
        for (spec, &v) in self.params.iter().zip(params) {
            if !(v >= spec.min && v <= spec.max) {
                return Err(Error::OutOfDomain {
                    name: spec.name.clone(),
                    value: v,
                    min: spec.min,
                    max: spec.max,
                });
            }
        }
        Ok(())
    }

    /// `H_d(params)`; parameters must lie in their domains.
    pub fn eval_drift(&self, params: &[f64]) -> Result<CMatrix> {
        self.check_params(params)?;
        Ok(self.drift_at(params))
    }

    /// `H_d(params)` with an explicit switch for evaluating outside the
    /// declared domain.
    pub fn eval_drift_with(&self, params: &[f64], allow_extrapolation: bool) -> Result<CMatrix> {
        if allow_extrapolation {
            if params.len() != self.params.len() {
                return Err(Error::Arity {
                    expected: self.params.len(),
                    got: params.len(),
                });
            }
            Ok(self.drift_at(params))
        } else {
            self.eval_drift(params)
        }
    }

    /// Unchecked affine evaluation. Callers guarantee the arity.
    pub(crate) fn drift_at(&self, params: &[f64]) -> CMatrix {
        let mut h = self.drift_constant.clone();
        for (slope, &p) in self.drift_slopes.iter().zip(params) {
            if p != 0.0 {
                h.axpy(c64(p, 0.0), slope);
            }
        }
        h
    }

    /// Total Hamiltonian for one segment.
    pub(crate) fn hamiltonian(
        &self,
        drift: &CMatrix,
        amplitudes: impl Iterator<Item = f64>,
    ) -> CMatrix {
        let mut h = drift.clone();
        for (hc, a) in self.controls.iter().zip(amplitudes) {
            if a != 0.0 {
                h.axpy(c64(a, 0.0), hc);
            }
        }
        h
    }

    /// `‖H_d(a) − H_d(b)‖ / |a − b|` for a single-parameter system, i.e. the
    /// operator norm of the drift slope.
    pub fn drift_lipschitz(&self) -> Result<f64> {
        if self.params.len() != 1 {
            return Err(Error::InvalidArgument(
                "drift Lipschitz constant needs a single-parameter system".into(),
            ));
        }
        Ok(self.drift_slopes[0].op_norm())
    }
}
