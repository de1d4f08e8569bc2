//! Boundary-element computation of the acoustic scattering matrix `S`, its
//! wavenumber derivative `S'`, and the Wigner-Smith time delay matrix
//! `Q = j S^H S'` for sound-soft and sound-hard scatterers.
//!
//! `Q` is produced by two independent routes that must agree:
//!
//! - the *direct* route evaluates surface-integral expressions for the
//!   renormalized field energy ([`wsm::ws_matrix_direct`]);
//! - the *indirect* route forms `S` and `S'` from the surface densities and
//!   multiplies them ([`wsm::ws_matrix_indirect`]).
//!
//! Analytic sphere solutions in [`oracle`] serve as ground truth.
//!
//! Conventions: time dependence `e^{+jωt}`, so outgoing waves behave like
//! `e^{-jkr}`; modes are ordered by `(l ascending, m ascending)`.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod export;
pub mod mesh;
pub mod operators;
pub mod oracle;
pub mod pipeline;
pub mod solver;
pub mod specfun;
pub mod waves;
pub mod wsm;

pub use error::{Error, Result};

/// Dense complex matrix used for every BEM and port-space quantity.
pub type CMatrix = nalgebra::DMatrix<num_complex::Complex64>;

pub use num_complex::Complex64;
