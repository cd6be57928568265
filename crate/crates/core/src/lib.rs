//! Coherent backscattering of laser light by two driven `J = 0 -> 1` atoms:
//! stationary double-scattering intensities, the enhancement factor and the
//! inelastic backscattering spectrum, computed from the two-atom master
//! equation at order `|g|^2` in the dipole-dipole coupling and checked
//! against exact closed forms.

pub mod analysis;
pub mod average;
pub mod cli;
pub mod error;
pub mod liouvillian;
pub mod model;
pub mod oracle;
pub mod quadrature;
pub mod resolvent;
pub mod spectrum;
pub mod steady;
pub mod validate;

pub use error::{Error, Result};
