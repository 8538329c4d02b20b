use std::sync::Arc;

use num_complex::Complex64;

use super::basis::{SpinBasis, MAX_SITES};
use super::state::StateVector;
use crate::error::{capacity, invalid, Error, Result};
use crate::scalar::Scalar;

/// Operations that need full spectra or explicit 2^N x 2^N objects are
/// limited to this many sites.
pub const DENSE_CAP_SITES: usize = 14;

/// Explicit matrices (reduced states, `to_dense`) are limited to this many sites.
pub const MATRIX_CAP_SITES: usize = 12;

const NEGATIVE_EIGENVALUE_TOL: f64 = 1e-10;

/// Small dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<S> {
    dim: usize,
    data: Vec<S>,
}

impl<S: Scalar> DenseMatrix<S> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![S::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = S::one();
        }
        m
    }

    pub fn from_row_major(dim: usize, data: Vec<S>) -> Result<Self> {
        if data.len() != dim * dim {
            return invalid(format!(
                "expected {} entries, got {}",
                dim * dim,
                data.len()
            ));
        }
        Ok(Self { dim, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> S {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn get_mut(&mut self, row: usize, col: usize) -> &mut S {
        &mut self.data[row * self.dim + col]
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i).re()).sum()
    }

    pub fn scale(&mut self, x: f64) {
        for v in &mut self.data {
            *v = v.scale(x);
        }
    }

    /// Largest `|A_ij - conj(A_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let d = self.get(i, j) - self.get(j, i).conj();
                worst = worst.max(d.norm_sqr().sqrt());
            }
        }
        worst
    }

    /// Ascending eigenvalues and eigenvectors (columns, row-major storage).
    pub fn eigh(&self) -> Result<(Vec<f64>, Vec<S>)> {
        S::hermitian_eigen(self.dim, &self.data)
    }

    pub fn to_complex(&self) -> DenseMatrix<Complex64> {
        DenseMatrix {
            dim: self.dim,
            data: self.data.iter().map(|x| x.to_complex()).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (*a - *b).norm_sqr().sqrt())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
enum Repr<S> {
    Spectral(Vec<(f64, StateVector<S>)>),
    /// Identity / 2^N, kept implicit.
    MaximallyMixed,
}

/// Mixed state in spectral form: weighted orthonormal pure states.
///
/// Component vectors may live in different magnetization sectors of the same
/// chain (thermal states are assembled sector by sector).
#[derive(Debug, Clone)]
pub struct DensityOp<S> {
    n_sites: usize,
    repr: Repr<S>,
}

/// Borrowed view of either a pure or a mixed state.
#[derive(Debug, Clone, Copy)]
pub enum StateRef<'a, S> {
    Pure(&'a StateVector<S>),
    Mixed(&'a DensityOp<S>),
}

impl<'a, S> From<&'a StateVector<S>> for StateRef<'a, S> {
    fn from(s: &'a StateVector<S>) -> Self {
        StateRef::Pure(s)
    }
}

impl<'a, S> From<&'a DensityOp<S>> for StateRef<'a, S> {
    fn from(r: &'a DensityOp<S>) -> Self {
        StateRef::Mixed(r)
    }
}

/// Flattened view used by measurement routines.
pub(crate) enum Ensemble<'a, S> {
    Vectors(Vec<(f64, &'a StateVector<S>)>),
    MaximallyMixed,
}

impl<'a, S: Scalar> StateRef<'a, S> {
    pub fn n_sites(&self) -> usize {
        match self {
            StateRef::Pure(s) => s.n_sites(),
            StateRef::Mixed(r) => r.n_sites(),
        }
    }

    pub(crate) fn ensemble(&self) -> Ensemble<'a, S> {
        match *self {
            StateRef::Pure(s) => Ensemble::Vectors(vec![(1.0, s)]),
            StateRef::Mixed(r) => match &r.repr {
                Repr::Spectral(c) => Ensemble::Vectors(c.iter().map(|(w, v)| (*w, v)).collect()),
                Repr::MaximallyMixed => Ensemble::MaximallyMixed,
            },
        }
    }
}

impl<S: Scalar> DensityOp<S> {
    pub fn pure(state: StateVector<S>) -> Self {
        Self {
            n_sites: state.n_sites(),
            repr: Repr::Spectral(vec![(1.0, state)]),
        }
    }

    /// Builds a mixed state from weights and mutually orthogonal vectors.
    ///
    /// Weights must be nonnegative and sum to one within 1e-10. Orthogonality
    /// is the caller's responsibility; see [`DensityOp::orthonormality_defect`].
    pub fn from_spectral(components: Vec<(f64, StateVector<S>)>) -> Result<Self> {
        let Some(first) = components.first() else {
            return invalid("a density operator needs at least one component");
        };
        let n_sites = first.1.n_sites();
        if components.iter().any(|(_, v)| v.n_sites() != n_sites) {
            return invalid("components have different numbers of sites");
        }
        if components.iter().any(|(w, _)| !(*w >= 0.0)) {
            return invalid("weights must be nonnegative");
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-10 {
            return invalid(format!("weights sum to {total}, expected 1"));
        }
        Ok(Self {
            n_sites,
            repr: Repr::Spectral(components),
        })
    }

    pub(crate) fn from_spectral_unchecked(
        n_sites: usize,
        components: Vec<(f64, StateVector<S>)>,
    ) -> Self {
        Self {
            n_sites,
            repr: Repr::Spectral(components),
        }
    }

    /// The infinite-temperature state 1/2^N, held implicitly.
    ///
    /// Nothing of size 2^N is stored, so any `N` up to [`MAX_SITES`] is
    /// accepted; operations that need the explicit matrix keep their own caps.
    pub fn maximally_mixed(n_sites: usize) -> Result<Self> {
        if n_sites == 0 || n_sites > MAX_SITES {
            return invalid(format!("n_sites must be in 1..={MAX_SITES}, got {n_sites}"));
        }
        Ok(Self {
            n_sites,
            repr: Repr::MaximallyMixed,
        })
    }

    /// Spectral form of a dense Hermitian PSD matrix on `n_sites` qubits.
    ///
    /// Eigenvalues down to -1e-10 are clamped to zero; more negative ones are
    /// an error. Zero-weight components are dropped and the result is
    /// normalized to unit trace.
    pub fn from_dense(n_sites: usize, matrix: &DenseMatrix<S>) -> Result<Self> {
        let dim = 1usize << n_sites;
        if matrix.dim() != dim {
            return invalid(format!(
                "matrix dimension {} is not 2^{n_sites}",
                matrix.dim()
            ));
        }
        let trace = matrix.trace();
        if !(trace > 0.0) {
            return Err(Error::Numerical(format!(
                "matrix trace {trace} is not positive"
            )));
        }
        let (vals, vecs) = matrix.eigh()?;
        let basis = SpinBasis::full(n_sites)?;
        let mut components = Vec::new();
        for (k, &lam) in vals.iter().enumerate() {
            let lam = lam / trace;
            if lam < -NEGATIVE_EIGENVALUE_TOL {
                return Err(Error::Numerical(format!(
                    "matrix is not positive semidefinite (eigenvalue {lam:.3e})"
                )));
            }
            if lam <= 0.0 {
                continue;
            }
            let col: Vec<S> = (0..dim).map(|i| vecs[i * dim + k]).collect();
            components.push((lam, StateVector::new(basis.clone(), col)?));
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        for (w, _) in &mut components {
            *w /= total;
        }
        // largest weight first
        components.reverse();
        Ok(Self {
            n_sites,
            repr: Repr::Spectral(components),
        })
    }

    #[inline]
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn is_maximally_mixed(&self) -> bool {
        matches!(self.repr, Repr::MaximallyMixed)
    }

    /// Weighted components, or `None` for the implicit maximally mixed state.
    pub fn components(&self) -> Option<&[(f64, StateVector<S>)]> {
        match &self.repr {
            Repr::Spectral(c) => Some(c),
            Repr::MaximallyMixed => None,
        }
    }

    pub fn into_components(self) -> Option<Vec<(f64, StateVector<S>)>> {
        match self.repr {
            Repr::Spectral(c) => Some(c),
            Repr::MaximallyMixed => None,
        }
    }

    /// Spectral weights; for the maximally mixed state, `2^N` copies of `2^-N`.
    pub fn weights(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Spectral(c) => c.iter().map(|(w, _)| *w).collect(),
            Repr::MaximallyMixed => {
                let d = 1usize << self.n_sites;
                vec![1.0 / d as f64; d]
            }
        }
    }

    pub fn trace(&self) -> f64 {
        match &self.repr {
            Repr::Spectral(c) => c.iter().map(|(w, v)| w * v.norm_sqr()).sum(),
            Repr::MaximallyMixed => 1.0,
        }
    }

    pub fn rank(&self) -> usize {
        match &self.repr {
            Repr::Spectral(c) => c.len(),
            Repr::MaximallyMixed => 1 << self.n_sites,
        }
    }

    /// Largest deviation of the component Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let Repr::Spectral(c) = &self.repr else {
            return 0.0;
        };
        let mut worst: f64 = 0.0;
        for (i, (_, a)) in c.iter().enumerate() {
            for (j, (_, b)) in c.iter().enumerate().skip(i) {
                let g = a.inner(b).map(|z| z.to_complex()).unwrap_or_default();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    /// Explicit 2^N x 2^N matrix in the full computational basis.
    pub fn to_dense(&self) -> Result<DenseMatrix<S>> {
        if self.n_sites > MATRIX_CAP_SITES {
            return capacity(format!(
                "explicit density matrix limited to N <= {MATRIX_CAP_SITES}, got {}",
                self.n_sites
            ));
        }
        let dim = 1usize << self.n_sites;
        match &self.repr {
            Repr::MaximallyMixed => {
                let mut m = DenseMatrix::identity(dim);
                m.scale(1.0 / dim as f64);
                Ok(m)
            }
            Repr::Spectral(c) => {
                let mut m = DenseMatrix::zeros(dim);
                for (w, v) in c {
                    let codes = v.basis().states();
                    let amps = v.amplitudes();
                    for (ia, &ca) in codes.iter().enumerate() {
                        let wa = amps[ia].scale(*w);
                        if wa == S::zero() {
                            continue;
                        }
                        for (ib, &cb) in codes.iter().enumerate() {
                            *m.get_mut(ca as usize, cb as usize) += wa * amps[ib].conj();
                        }
                    }
                }
                Ok(m)
            }
        }
    }
}

fn validate_keep(n_sites: usize, keep: &[usize]) -> Result<()> {
    if keep.is_empty() {
        return invalid("keep list is empty");
    }
    if keep.len() > MATRIX_CAP_SITES {
        return capacity(format!(
            "reduced state on {} sites exceeds the cap of {MATRIX_CAP_SITES}",
            keep.len()
        ));
    }
    let mut seen = vec![false; n_sites + 1];
    for &s in keep {
        if s == 0 || s > n_sites {
            return invalid(format!("site {s} outside 1..={n_sites}"));
        }
        if seen[s] {
            return invalid(format!("site {s} listed twice"));
        }
        seen[s] = true;
    }
    Ok(())
}

/// Adds `weight * Tr_env |psi><psi|` (psi unnormalized) into `out`.
///
/// Local bit `k` of the reduced basis is site `keep[k]`.
pub(crate) fn accumulate_reduced<S: Scalar>(
    basis: &SpinBasis,
    amps: &[S],
    keep: &[usize],
    weight: f64,
    out: &mut DenseMatrix<S>,
) {
    let k = keep.len();
    let ldim = 1usize << k;
    let scatter: Vec<u32> = (0..ldim)
        .map(|b| {
            keep.iter()
                .enumerate()
                .filter(|(bit, _)| b >> bit & 1 == 1)
                .fold(0u32, |acc, (_, &site)| acc | 1 << (site - 1))
        })
        .collect();
    let keep_mask = scatter[ldim - 1];
    for (i, &c) in basis.states().iter().enumerate() {
        let psi_i = amps[i];
        if psi_i == S::zero() {
            continue;
        }
        let a = keep.iter().enumerate().fold(0usize, |acc, (bit, &site)| {
            acc | ((c >> (site - 1) & 1) as usize) << bit
        });
        let env = c & !keep_mask;
        let wpsi = psi_i.scale(weight);
        for (b, &sb) in scatter.iter().enumerate() {
            if let Some(j) = basis.index_of(env | sb) {
                *out.get_mut(a, b) += wpsi * amps[j].conj();
            }
        }
    }
}

/// Dense reduced density matrix on `keep`, in the order given.
pub fn reduced_matrix<'a, S: Scalar>(
    state: impl Into<StateRef<'a, S>>,
    keep: &[usize],
) -> Result<DenseMatrix<S>> {
    let state = state.into();
    validate_keep(state.n_sites(), keep)?;
    let ldim = 1usize << keep.len();
    match state.ensemble() {
        Ensemble::MaximallyMixed => {
            let mut m = DenseMatrix::identity(ldim);
            m.scale(1.0 / ldim as f64);
            Ok(m)
        }
        Ensemble::Vectors(vs) => {
            let mut m = DenseMatrix::zeros(ldim);
            for (w, v) in vs {
                accumulate_reduced(v.basis(), v.amplitudes(), keep, w, &mut m);
            }
            Ok(m)
        }
    }
}

/// Reduced density operator on the sites in `keep`.
pub fn partial_trace<'a, S: Scalar>(
    state: impl Into<StateRef<'a, S>>,
    keep: &[usize],
) -> Result<DensityOp<S>> {
    let m = reduced_matrix(state, keep)?;
    DensityOp::from_dense(keep.len(), &m)
}

/// A pure state on two qubits from its four amplitudes in code order.
pub fn two_qubit_state<S: Scalar>(amps: [S; 4]) -> Result<StateVector<S>> {
    let basis: Arc<SpinBasis> = SpinBasis::full(2)?;
    StateVector::new(basis, amps.to_vec())
}
