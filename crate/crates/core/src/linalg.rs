//! Dense complex matrices and the spectral routines built on them.
//!
//! Storage is column-major so that faer can view a [`ComplexMatrix`] without
//! copying. Qubit `0` is the most significant bit of a basis index.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use faer::linalg::matmul::matmul;
use faer::{Accum, MatMut, MatRef, Par, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Absolute slack used when checking that an input is Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Square complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for j in 0..dim {
            for i in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Builds a matrix from row-major nested rows. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim), "rows must be square");
        Self::from_fn(dim, |i, j| rows[i][j])
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Rank-one projector |psi><psi| (no normalization).
    pub fn outer(psi: &[C64]) -> Self {
        Self::from_fn(psi.len(), |i, j| psi[i] * psi[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Raw column-major storage.
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn view(&self) -> MatRef<'_, C64> {
        MatRef::from_column_major_slice(&self.data, self.dim, self.dim)
    }

    pub fn view_mut(&mut self) -> MatMut<'_, C64> {
        MatMut::from_column_major_slice_mut(&mut self.data, self.dim, self.dim)
    }

    pub fn from_faer(m: MatRef<'_, C64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "matrix must be square");
        Self::from_fn(m.nrows(), |i, j| m[(i, j)])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn scale_real_in_place(&mut self, s: f64) {
        for x in &mut self.data {
            *x *= s;
        }
    }

    /// `self += s * other`
    pub fn add_scaled(&mut self, other: &Self, s: C64) {
        assert_eq!(self.dim, other.dim);
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "matmul dimension mismatch");
        let mut out = Self::zeros(self.dim);
        matmul(out.view_mut(), Accum::Replace, self.view(), rhs.view(), ONE, Par::Seq);
        out
    }

    /// `U * self * U^dagger`
    pub fn conjugate_by(&self, u: &Self) -> Self {
        assert_eq!(self.dim, u.dim);
        let mut tmp = Self::zeros(self.dim);
        matmul(tmp.view_mut(), Accum::Replace, u.view(), self.view(), ONE, Par::Seq);
        let mut out = Self::zeros(self.dim);
        matmul(out.view_mut(), Accum::Replace, tmp.view(), u.view().adjoint(), ONE, Par::Seq);
        out
    }

    /// `[self, other] = self * other - other * self`
    pub fn commutator(&self, other: &Self) -> Self {
        let mut out = self.matmul(other);
        matmul(out.view_mut(), Accum::Add, other.view(), self.view(), -ONE, Par::Seq);
        out
    }

    pub fn kron(&self, other: &Self) -> Self {
        let (a, b) = (self.dim, other.dim);
        Self::from_fn(a * b, |i, j| self[(i / b, j / b)] * other[(i % b, j % b)])
    }

    /// Largest |A_ij - conj(A_ji)|.
    pub fn hermitian_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..self.dim {
            for i in j..self.dim {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Rejects matrices whose Hermitian deviation exceeds the tolerance,
    /// scaled by the largest entry for large-norm inputs.
    pub fn ensure_hermitian(&self) -> Result<()> {
        let deviation = self.hermitian_deviation();
        if deviation > HERMITIAN_TOL * self.max_abs().max(1.0) {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(())
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim);
        let mut out = vec![ZERO; self.dim];
        for (j, &vj) in v.iter().enumerate() {
            if vj == ZERO {
                continue;
            }
            let col = &self.data[j * self.dim..(j + 1) * self.dim];
            for (o, &a) in out.iter_mut().zip(col) {
                *o += a * vj;
            }
        }
        out
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i + j * self.dim]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i + j * self.dim]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim);
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim);
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

/// Eigenvalues (ascending) of a Hermitian matrix; only the lower triangle is read.
pub fn eigenvalues_hermitian(a: &ComplexMatrix) -> Result<Vec<f64>> {
    a.view()
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("Hermitian eigenvalue solver: {e:?}")))
}

/// Eigendecomposition `A = V diag(w) V^dagger` of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn new(a: &ComplexMatrix) -> Result<Self> {
        let evd = a
            .view()
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Numerical(format!("Hermitian eigensolver: {e:?}")))?;
        let values = evd.S().column_vector().iter().map(|x| x.re).collect();
        Ok(Self {
            values,
            vectors: ComplexMatrix::from_faer(evd.U()),
        })
    }

    /// `V diag(f(w)) V^dagger`
    pub fn map(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let n = self.vectors.dim();
        let mut scaled = self.vectors.clone();
        for (j, &w) in self.values.iter().enumerate() {
            let s = f(w);
            for x in &mut scaled.as_mut_slice()[j * n..(j + 1) * n] {
                *x *= s;
            }
        }
        let mut out = ComplexMatrix::zeros(n);
        matmul(
            out.view_mut(),
            Accum::Replace,
            scaled.view(),
            self.vectors.view().adjoint(),
            ONE,
            Par::Seq,
        );
        out
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        let n = self.vectors.dim();
        self.vectors.as_slice()[k * n..(k + 1) * n].to_vec()
    }
}

/// Unitary `exp(-i theta H)` for Hermitian `H`.
pub fn matrix_exp_hermitian(h: &ComplexMatrix, theta: f64) -> Result<ComplexMatrix> {
    h.ensure_hermitian()?;
    if theta == 0.0 {
        return Ok(ComplexMatrix::identity(h.dim()));
    }
    let eig = HermitianEigen::new(h)?;
    Ok(eig.map(|w| C64::from_polar(1.0, -theta * w)))
}

pub fn singular_values(a: &ComplexMatrix) -> Result<Vec<f64>> {
    a.view()
        .singular_values()
        .map_err(|e| Error::Numerical(format!("SVD: {e:?}")))
}

/// Schatten 1-norm: the sum of singular values.
pub fn trace_norm(a: &ComplexMatrix) -> Result<f64> {
    Ok(singular_values(a)?.iter().sum())
}

/// Trace norm of a Hermitian matrix, computed from its eigenvalues.
pub fn trace_norm_hermitian(a: &ComplexMatrix) -> Result<f64> {
    Ok(eigenvalues_hermitian(a)?.iter().map(|w| w.abs()).sum())
}

/// Largest singular value.
pub fn spectral_norm(a: &ComplexMatrix) -> Result<f64> {
    Ok(singular_values(a)?.first().copied().unwrap_or(0.0))
}

/// Spectral norm of a Hermitian matrix: the largest |eigenvalue|.
pub fn spectral_norm_hermitian(a: &ComplexMatrix) -> Result<f64> {
    let w = eigenvalues_hermitian(a)?;
    Ok(w.iter().fold(0.0f64, |m, x| m.max(x.abs())))
}

/// Spectral norm of an anti-Hermitian matrix via `i A`, which is Hermitian.
pub fn spectral_norm_anti_hermitian(a: &ComplexMatrix) -> Result<f64> {
    spectral_norm_hermitian(&a.scale(I))
}
