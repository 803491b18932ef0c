//! Numerical toolkit for singular one-dimensional Schroedinger operators:
//! endpoint classification (limit point vs limit circle), boundary
//! parametrization of self-adjoint realizations, channel spectra by shooting,
//! and the partial-wave assembly of the three-dimensional Aharonov-Bohm
//! Hamiltonian.

pub mod ab;
pub mod ext;
pub mod sl;
pub mod special;
pub mod spectral;
pub mod weyl;
