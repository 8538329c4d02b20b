//! Heisenberg-family Hamiltonians as coupling graphs, applied matrix-free.

mod model;
mod operator;

pub use model::{build_model, Bond, ModelParams, ModelSpec, ModelVariant};
pub use operator::{energy, matvec, HamiltonianOp, LinearOperator};

use crate::error::Result;

/// Copy of `model` with per-site field vectors `fields` (one per site).
pub fn with_random_fields(model: &ModelSpec, fields: Vec<[f64; 3]>) -> Result<ModelSpec> {
    model.with_fields(fields)
}

/// Copy of `model` with Gaussian coupling disorder of width `sigma_j`.
pub fn with_random_couplings<R: rand::Rng + ?Sized>(
    model: &ModelSpec,
    sigma_j: f64,
    rng: &mut R,
) -> Result<ModelSpec> {
    model.with_random_couplings(sigma_j, rng)
}
