//! Bit-coded spin-1/2 Hilbert spaces, pure and mixed states, partial traces.

mod basis;
mod density;
pub mod io;
mod state;

pub use basis::{binomial, SpinBasis, MAX_DIM, MAX_SITES};
pub(crate) use density::{accumulate_reduced, Ensemble};
pub use density::{
    partial_trace, reduced_matrix, two_qubit_state, DenseMatrix, DensityOp, StateRef,
    DENSE_CAP_SITES, MATRIX_CAP_SITES,
};
pub use state::{neel_state, singlet_covering, StateVector};

use crate::error::Result;
use crate::scalar::Scalar;

/// Builds a basis; see [`SpinBasis::new`].
pub fn build_basis(n_sites: usize, sector: Option<usize>) -> Result<SpinBasis> {
    SpinBasis::new(n_sites, sector)
}

/// The maximally mixed state on `n_sites` qubits.
pub fn maximally_mixed<S: Scalar>(n_sites: usize) -> Result<DensityOp<S>> {
    DensityOp::maximally_mixed(n_sites)
}
