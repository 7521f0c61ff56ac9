//! Bound bosonic particles on finite Bose-Hubbard chains.
//!
//! The crate is organised bottom-up:
//!
//! * [`fock`] enumerates fixed-particle-number sectors and builds sector operators.
//! * [`lattice`] assembles the site-dependent Bose-Hubbard Hamiltonian and the
//!   impurity / coupling-engineering schemes.
//! * [`effective`] reduces a sector Hamiltonian to the tridiagonal bound-particle
//!   chain via a Sylvester equation solved by a Dyson series.
//! * [`dynamics`] evolves pure states by spectral decomposition and extracts
//!   joint-occupation probabilities and transfer times.
//! * [`open`] integrates the dephasing master equation, either through the dense
//!   vectorised Liouvillian or matrix-free.
//! * [`protocols`] strings the above together into transfer, edge unlocking,
//!   NOON generation, interferometric detection and Fisher-information runs.
//!
//! Energies are plain `f64` in whatever unit the caller picks; the CLI fixes the
//! bare hopping `J = 1`. Times are in the inverse unit.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` rejects NaN on purpose

pub mod dynamics;
pub mod effective;
mod error;
pub mod fock;
pub mod lattice;
pub mod open;
pub mod optimize;
pub mod protocols;

pub use error::{Error, Result};

pub use num_complex::Complex64;

/// Dense complex matrix used for every operator in the crate.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<Complex64>;
