//! Exact steady states of two-photon driven, lossy bosonic lattices with a
//! global Hubbard interaction.
//!
//! The steady state of
//! `H = u N^2 - Δ N + Σ (M_ij a†_i a†_j + h.c.)` with single-photon loss on every
//! site is a mixed state whose purification is known in closed form. This crate
//! evaluates its observables through form-factor series, and cross-checks them
//! against a brute-force Fock-space Lindblad solver.

// `!(x > 0.0)` guards are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod formfactors;
pub mod meanfield;
pub mod model;
pub mod moments;
pub mod oracle;
pub mod semiclassics;
pub mod specialfn;
pub mod wigner;

pub use error::{Error, Result};
pub use model::{Boundary, DerivedScalars, ModelSpec, PairingSpectrum};
pub use num_complex::Complex64;
pub use specialfn::{LogComplex, SeriesOptions, SeriesResult};
