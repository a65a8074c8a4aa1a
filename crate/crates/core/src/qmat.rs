// Copyright 2026 The robustctl Authors
// SPDX-License-Identifier: Apache-2.0

//! Dense complex matrices for small quantum systems.
//!
//! [`CMatrix`] is a thin wrapper over a column-major `nalgebra` matrix. The
//! operations here are the ones the rest of the crate needs: Kronecker
//! products, commutators, Hilbert–Schmidt inner products, the spectral norm
//! and `exp(-i h t)` for Hermitian `h`, computed from an eigendecomposition so
//! that segment propagators stay unitary to machine precision.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default tolerance for Hermiticity checks (max-entry norm).
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Shorthand for a complex scalar.
#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMatrix(DMatrix<Complex64>);

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix(DMatrix::zeros(rows, cols))
    }

    pub fn identity(dim: usize) -> Self {
        CMatrix(DMatrix::identity(dim, dim))
    }

    /// Builds a matrix from entries listed row by row.
    pub fn from_row_major(rows: usize, cols: usize, entries: &[Complex64]) -> Result<Self> {
        if rows == 0 || cols == 0 || rows * cols != entries.len() {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Ok(CMatrix(DMatrix::from_row_slice(rows, cols, entries)))
    }

    /// Real diagonal matrix.
    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        CMatrix(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                c64(diag[i], 0.0)
            } else {
                Complex64::ZERO
            }
        }))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        CMatrix(DMatrix::from_fn(rows, cols, f))
    }

    /// Block-diagonal direct sum of square blocks.
    pub fn direct_sum(blocks: &[CMatrix]) -> Self {
        let n: usize = blocks.iter().map(|b| b.rows()).sum();
        let m: usize = blocks.iter().map(|b| b.cols()).sum();
        let mut out = DMatrix::zeros(n, m);
        let (mut r, mut c) = (0, 0);
        for b in blocks {
            out.view_mut((r, c), (b.rows(), b.cols())).copy_from(&b.0);
            r += b.rows();
            c += b.cols();
        }
        CMatrix(out)
    }

    pub(crate) fn from_inner(m: DMatrix<Complex64>) -> Self {
        CMatrix(m)
    }

    pub(crate) fn inner(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    /// Side length of a square matrix.
    pub fn dim(&self) -> usize {
        self.rows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.0[(i, j)] = v;
    }

    /// Entries in row-major order.
    pub fn to_row_major(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    /// Raw column-major storage.
    pub fn as_slice(&self) -> &[Complex64] {
        self.0.as_slice()
    }

    pub fn adjoint(&self) -> Self {
        CMatrix(self.0.adjoint())
    }

    pub fn scale(&self, s: f64) -> Self {
        CMatrix(self.0.map(|z| z * s))
    }

    pub fn scale_c(&self, s: Complex64) -> Self {
        CMatrix(&self.0 * s)
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Frobenius norm.
    pub fn frobenius(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `self += s * other`, in place.
    pub fn axpy(&mut self, s: Complex64, other: &CMatrix) {
        self.0.zip_apply(&other.0, |a, b| *a += s * b);
    }

    fn check_same_shape(&self, other: &CMatrix, what: &str) -> Result<()> {
        if self.rows() != other.rows() || self.cols() != other.cols() {
            return Err(Error::DimensionMismatch(format!(
                "{what}: {}x{} vs {}x{}",
                self.rows(),
                self.cols(),
                other.rows(),
                other.cols()
            )));
        }
        Ok(())
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &CMatrix) -> CMatrix {
        CMatrix(self.0.kronecker(&other.0))
    }

    /// `ab - ba`.
    pub fn commutator(&self, other: &CMatrix) -> Result<CMatrix> {
        if !self.is_square() {
            return Err(Error::Shape("commutator of non-square matrix".into()));
        }
        self.check_same_shape(other, "commutator")?;
        Ok(CMatrix(&self.0 * &other.0 - &other.0 * &self.0))
    }

    /// Hilbert–Schmidt inner product `Tr(self† other)`.
    pub fn hs_inner(&self, other: &CMatrix) -> Result<Complex64> {
        self.check_same_shape(other, "hs_inner")?;
        Ok(hs_inner_unchecked(self, other))
    }

    /// Max-entry deviation from Hermiticity.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol
    }

    pub fn ensure_hermitian(&self, tol: f64) -> Result<()> {
        let defect = self.hermitian_defect();
        if defect > tol {
            return Err(Error::NotHermitian(defect));
        }
        Ok(())
    }

    /// Operator-norm distance of `U†U` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let g = CMatrix(self.0.adjoint() * &self.0) - CMatrix::identity(self.rows());
        g.op_norm()
    }

    pub fn ensure_unitary(&self, tol: f64) -> Result<()> {
        let defect = self.unitarity_defect();
        if defect > tol {
            return Err(Error::NotUnitary(defect));
        }
        Ok(())
    }

    /// Spectral norm (largest singular value).
    pub fn op_norm(&self) -> f64 {
        if self.0.iter().all(|z| *z == Complex64::ZERO) {
            return 0.0;
        }
        self.0
            .clone()
            .singular_values()
            .iter()
            .cloned()
            .fold(0.0, f64::max)
    }

    /// Eigendecomposition of a Hermitian matrix.
    pub fn eigh(&self) -> Result<HermitianEigen> {
        self.ensure_hermitian(HERMITIAN_TOL * self.max_abs().max(1.0))?;
        Ok(HermitianEigen::of_unchecked(self))
    }

    /// `exp(-i h t)` for Hermitian `h`.
    pub fn expm_unitary(&self, t: f64) -> Result<CMatrix> {
        let eig = self.eigh()?;
        Ok(eig.propagator(t))
    }
}

#[inline]
pub(crate) fn hs_inner_unchecked(a: &CMatrix, b: &CMatrix) -> Complex64 {
    a.0.iter().zip(b.0.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// `Re Tr(a† b)` without shape checks.
#[inline]
pub(crate) fn real_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.0.iter()
        .zip(b.0.iter())
        .map(|(x, y)| x.re * y.re + x.im * y.im)
        .sum()
}

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a
/// Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub(crate) fn of_unchecked(h: &CMatrix) -> Self {
        let n = h.rows();
        // Symmetrize so round-off in the input cannot leak into the solver.
        let sym = DMatrix::from_fn(n, n, |i, j| 0.5 * (h.0[(i, j)] + h.0[(j, i)].conj()));
        let eig = nalgebra::SymmetricEigen::new(sym);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        HermitianEigen {
            values,
            vectors: CMatrix(vectors),
        }
    }

    /// `V diag(f(λ)) V†`.
    pub fn apply(&self, f: impl Fn(f64) -> Complex64) -> CMatrix {
        let v = &self.vectors.0;
        let n = v.nrows();
        let mut scaled = v.clone();
        for (j, &lam) in self.values.iter().enumerate() {
            let fj = f(lam);
            for i in 0..n {
                scaled[(i, j)] *= fj;
            }
        }
        CMatrix(scaled * v.adjoint())
    }

    /// `exp(-i h t)`.
    pub fn propagator(&self, t: f64) -> CMatrix {
        if t == 0.0 {
            return CMatrix::identity(self.values.len());
        }
        self.apply(|lam| Complex64::from_polar(1.0, -lam * t))
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows(), self.cols())?;
        for i in 0..self.rows() {
            write!(f, "  ")?;
            for j in 0..self.cols() {
                let z = self.0[(i, j)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl<'a> Mul<&'a CMatrix> for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &'a CMatrix) -> CMatrix {
        CMatrix(&self.0 * &rhs.0)
    }
}

impl Mul for CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: CMatrix) -> CMatrix {
        CMatrix(self.0 * rhs.0)
    }
}

impl<'a> Add<&'a CMatrix> for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &'a CMatrix) -> CMatrix {
        CMatrix(&self.0 + &rhs.0)
    }
}

impl Add for CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: CMatrix) -> CMatrix {
        CMatrix(self.0 + rhs.0)
    }
}

impl<'a> Sub<&'a CMatrix> for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &'a CMatrix) -> CMatrix {
        CMatrix(&self.0 - &rhs.0)
    }
}

impl Sub for CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: CMatrix) -> CMatrix {
        CMatrix(self.0 - rhs.0)
    }
}

impl Neg for CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        CMatrix(-self.0)
    }
}

/// Pauli matrices and Pauli strings.
pub mod pauli {
    use super::{c64, CMatrix};
    use crate::error::{Error, Result};
    use num_complex::Complex64;

    pub fn i2() -> CMatrix {
        CMatrix::identity(2)
    }

    pub fn x() -> CMatrix {
        let o = Complex64::ZERO;
        let l = Complex64::ONE;
        CMatrix::from_row_major(2, 2, &[o, l, l, o]).unwrap()
    }

    pub fn y() -> CMatrix {
        let o = Complex64::ZERO;
        CMatrix::from_row_major(2, 2, &[o, c64(0.0, -1.0), c64(0.0, 1.0), o]).unwrap()
    }

    pub fn z() -> CMatrix {
        CMatrix::from_real_diagonal(&[1.0, -1.0])
    }

    pub fn single(label: char) -> Result<CMatrix> {
        match label.to_ascii_uppercase() {
            'I' => Ok(i2()),
            'X' => Ok(x()),
            'Y' => Ok(y()),
            'Z' => Ok(z()),
            other => Err(Error::UnknownPauli(other.to_string())),
        }
    }

    /// Tensor product of single-qubit Paulis; the first character acts on
    /// the most significant qubit, so `"XI"` is `X ⊗ I`.
    pub fn string(label: &str) -> Result<CMatrix> {
        let mut chars = label.chars();
        let first = chars
            .next()
            .ok_or_else(|| Error::UnknownPauli(String::from("(empty)")))?;
        let mut out = single(first)?;
        for c in chars {
            out = out.kron(&single(c)?);
        }
        Ok(out)
    }

    /// Hermitian matrix `Σ coeff · P` for a list of `(label, coeff)` terms.
    pub fn sum(terms: &[(&str, f64)]) -> Result<CMatrix> {
        let mut iter = terms.iter();
        let (l0, c0) = iter
            .next()
            .ok_or_else(|| Error::Shape("empty Pauli sum".into()))?;
        let mut out = string(l0)?.scale(*c0);
        for (l, c) in iter {
            let p = string(l)?;
            if p.rows() != out.rows() {
                return Err(Error::DimensionMismatch(format!(
                    "Pauli string {l} has the wrong length"
                )));
            }
            out.axpy(c64(*c, 0.0), &p);
        }
        Ok(out)
    }
}
