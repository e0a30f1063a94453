//! Numerical machinery for the ground-state energy of dilute Bose gases with
//! three-body interactions: scattering energies, Dyson and Temple bound
//! constructions, upper-bound trial states and lattice exact diagonalization.

pub mod diag;
pub mod dyson;
pub mod error;
pub mod linalg;
pub mod lowerbound;
pub mod potentials;
pub mod quadrature;
pub mod scattering;
pub mod upperbound;

pub use error::{Error, Result};
