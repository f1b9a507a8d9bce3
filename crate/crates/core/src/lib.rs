//! Numerical laboratory for two-species Bose mixtures in the mean-field regime.
//!
//! The crate couples three layers:
//!
//! * [`lattice`] and [`interaction`]: a periodic grid, the single-particle
//!   kinetic operators (magnetic Peierls Laplacian and `sqrt(m^2 - Laplacian)`),
//!   and regularized Yukawa kernels.
//! * [`meanfield`] and [`fock`]: the coupled Hartree system and the exact
//!   N-body Schrödinger dynamics under the mean-field-scaled Hamiltonian.
//! * [`fidelity`] and [`harness`]: reduced density matrices, Pickl counting
//!   functionals, Sobolev-weighted trace norms, inequality checks, sweeps over
//!   particle numbers and rate fits.

pub mod error;
pub mod fidelity;
pub mod fock;
pub mod harness;
pub mod interaction;
pub mod krylov;
pub mod lattice;
pub mod linalg;
pub mod meanfield;
mod par;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
