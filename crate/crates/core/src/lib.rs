//! Simulation and verification toolkit for dissipatively coupled qubit-laser lattices.
//!
//! The steady state of the lattice reduces to a classical XY model whose long-range
//! correlations drive the `N²` growth of the Fisher information for a weak coherent drive.
//! The crate provides the closed-form ring solution, a Metropolis sampler, semiclassical
//! Langevin dynamics, mean-field Maxwell–Bloch integration, a small truncated-Fock Lindblad
//! solver and a seeded experiment harness.
//!
//! All kernels are generic over [`Real`] (`f32` or `f64`); the aliases below fix `f64`.

pub mod error;
pub mod exact;
pub mod fisher;
pub mod harness;
pub mod langevin;
pub mod lattice;
pub mod meanfield;
pub mod model;
pub mod observables;
pub mod quantum;
pub mod rng;
pub mod sampler;
pub mod scalar;
pub mod state;
pub mod stats;

pub use error::{Error, Result};
pub use lattice::LatticeSpec;
pub use model::{derive_coeffs, CouplingSign, DerivedCoeffs, DrivePattern, ModelParams};
pub use scalar::Real;

pub type Params = ModelParams<f64>;
pub type Coeffs = DerivedCoeffs<f64>;
pub type Params32 = ModelParams<f32>;
pub type Coeffs32 = DerivedCoeffs<f32>;
