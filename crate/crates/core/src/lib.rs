//! Spin-chain simulator characterized through singlet-triplet pair
//! measurements.
//!
//! States, operators and solvers are generic over the amplitude type
//! ([`Scalar`], implemented for `f64` and [`Complex64`]); the aliases below
//! fix the common choices.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod eigen;
pub mod error;
pub mod hamiltonians;
pub mod noisekit;
pub mod scalar;
pub mod spinspace;
pub mod stmeasure;

pub use num_complex::Complex64;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type RealState = spinspace::StateVector<f64>;
pub type ComplexState = spinspace::StateVector<Complex64>;
pub type RealDensity = spinspace::DensityOp<f64>;
pub type ComplexDensity = spinspace::DensityOp<Complex64>;
pub type RealEigenPair = eigen::EigenPair<f64>;
pub type ComplexEigenPair = eigen::EigenPair<Complex64>;
