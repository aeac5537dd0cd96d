//! Spectral invariants of flat conical metrics on hyperelliptic Riemann surfaces.

pub mod cli;
pub mod curve;
pub mod error;
pub mod harmonic;
pub mod integrals;
pub mod kernels;
pub mod lattice;
pub mod linalg;
pub mod smatrix;
pub mod quad;
pub mod series;

pub use error::{Error, Result};
