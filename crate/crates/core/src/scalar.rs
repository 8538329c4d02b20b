//! Amplitude scalar types.
//!
//! Every state, operator and solver in the crate is generic over [`Scalar`].
//! Field-free Heisenberg models are real symmetric, so `f64` amplitudes halve
//! the memory of the large sector computations; models with a transverse
//! `y` field need [`Complex64`]. Real parts, probabilities and energies are
//! always `f64`.
//!
//! Single precision is not provided: the normalization and orthogonality
//! tolerances used throughout (1e-10 and tighter) are below `f32` resolution.

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use faer::{Mat, Side};
use num_complex::Complex64;
use num_traits::{One, Zero};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Amplitude type of a state vector.
pub trait Scalar:
    Copy
    + Debug
    + Default
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + Sum
    + Send
    + Sync
    + 'static
{
    /// `true` when the type can carry an imaginary part.
    const IS_COMPLEX: bool;

    fn from_real(x: f64) -> Self;

    /// Converts a complex number, failing if the type is real and `z` has an
    /// imaginary part.
    fn from_complex(z: Complex64) -> Option<Self>;

    fn to_complex(self) -> Complex64;

    fn conj(self) -> Self;

    fn re(self) -> f64;

    fn norm_sqr(self) -> f64;

    fn scale(self, x: f64) -> Self;

    /// Draws a standard-normal amplitude (independent real and imaginary parts
    /// for complex types).
    fn sample_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Eigendecomposition of a dense Hermitian matrix given in row-major order.
    ///
    /// Returns eigenvalues in ascending order and the eigenvectors as
    /// columns of a row-major `dim x dim` matrix.
    fn hermitian_eigen(dim: usize, data: &[Self]) -> Result<(Vec<f64>, Vec<Self>)>;
}

impl Scalar for f64 {
    const IS_COMPLEX: bool = false;

    #[inline]
    fn from_real(x: f64) -> Self {
        x
    }

    #[inline]
    fn from_complex(z: Complex64) -> Option<Self> {
        (z.im == 0.0).then_some(z.re)
    }

    #[inline]
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }

    #[inline]
    fn conj(self) -> Self {
        self
    }

    #[inline]
    fn re(self) -> f64 {
        self
    }

    #[inline]
    fn norm_sqr(self) -> f64 {
        self * self
    }

    #[inline]
    fn scale(self, x: f64) -> Self {
        self * x
    }

    fn sample_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }

    fn hermitian_eigen(dim: usize, data: &[Self]) -> Result<(Vec<f64>, Vec<Self>)> {
        debug_assert_eq!(data.len(), dim * dim);
        let m = Mat::<f64>::from_fn(dim, dim, |i, j| data[i * dim + j]);
        let eig = m
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Numerical(format!("dense eigensolver failed: {e:?}")))?;
        let values = eig.S().column_vector().iter().copied().collect();
        let u = eig.U();
        let mut vecs = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                vecs[i * dim + j] = u[(i, j)];
            }
        }
        Ok((values, vecs))
    }
}

impl Scalar for Complex64 {
    const IS_COMPLEX: bool = true;

    #[inline]
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }

    #[inline]
    fn from_complex(z: Complex64) -> Option<Self> {
        Some(z)
    }

    #[inline]
    fn to_complex(self) -> Complex64 {
        self
    }

    #[inline]
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }

    #[inline]
    fn re(self) -> f64 {
        self.re
    }

    #[inline]
    fn norm_sqr(self) -> f64 {
        Complex64::norm_sqr(&self)
    }

    #[inline]
    fn scale(self, x: f64) -> Self {
        self * x
    }

    fn sample_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    }

    fn hermitian_eigen(dim: usize, data: &[Self]) -> Result<(Vec<f64>, Vec<Self>)> {
        debug_assert_eq!(data.len(), dim * dim);
        let m = Mat::<faer::c64>::from_fn(dim, dim, |i, j| data[i * dim + j]);
        let eig = m
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Numerical(format!("dense eigensolver failed: {e:?}")))?;
        let values = eig.S().column_vector().iter().map(|z| z.re).collect();
        let u = eig.U();
        let mut vecs = vec![Complex64::zero(); dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                vecs[i * dim + j] = u[(i, j)];
            }
        }
        Ok((values, vecs))
    }
}

/// `<a|b>` with the first argument conjugated.
#[inline]
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).map(|(x, y)| x.conj() * *y).sum()
}

#[inline]
pub fn norm_sqr<S: Scalar>(a: &[S]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// `y += alpha * x`
#[inline]
pub fn axpy<S: Scalar>(alpha: S, x: &[S], y: &mut [S]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * *xi;
    }
}
