//! Thin wrappers over faer's dense decompositions.

use faer::{Mat, Side};
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub(crate) fn to_faer(m: &DMatrix<Complex64>) -> Mat<Complex64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Singular values, largest first.
pub fn singular_values(m: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    to_faer(m).singular_values().map_err(|e| Error::EigensolverFailure(format!("{e:?}")))
}

/// Eigenvalues of a Hermitian matrix (lower triangle read), ascending.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    to_faer(m).self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::EigensolverFailure(format!("{e:?}")))
}

/// `max |m - m^H|`.
pub fn hermitian_defect(m: &DMatrix<Complex64>) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub(crate) fn rows(m: &DMatrix<Complex64>) -> Vec<Vec<Complex64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}
