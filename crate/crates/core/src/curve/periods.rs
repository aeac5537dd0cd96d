//! Periods of the holomorphic differentials and the Riemann matrix.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{c64, path_integral, BasisScheme, HomologyBasis, HyperellipticCurve, SheetPath, Tolerances};
use crate::error::{Error, Result};
use crate::quad::QuadOptions;

/// Quadrature settings derived from the period tolerance.
pub fn quad_options(tol: &Tolerances) -> QuadOptions {
    let t = (0.1 * tol.period).max(1e-14);
    QuadOptions { abs_tol: t, rel_tol: t, max_intervals: 4000 }
}

/// Normalised holomorphic differentials and the Riemann matrix for one marking.
///
/// Raw differentials are `omega_j = x^j dx / y`, `j = 0..g`; the normalised
/// ones are `v_k = sum_j coeffs[(k, j)] omega_j` with `a`-periods `delta`.
#[derive(Debug, Clone)]
pub struct PeriodData {
    pub genus: usize,
    pub scheme: BasisScheme,
    /// `a[(i, j)]`: integral of `omega_j` over `a_i`.
    pub a: DMatrix<Complex64>,
    pub b_raw: DMatrix<Complex64>,
    pub coeffs: DMatrix<Complex64>,
    pub riemann: DMatrix<Complex64>,
    /// `(Im B)^{-1}`.
    pub im_inv: DMatrix<f64>,
    /// Summed quadrature error estimate over all chain integrals.
    pub error: f64,
}

fn raw_integrals(
    curve: &HyperellipticCurve,
    chain: &SheetPath,
    opts: QuadOptions,
) -> Result<(Vec<Complex64>, f64)> {
    let g = curve.genus();
    let r = path_integral(curve, chain, g, opts, |x, y, out| {
        let inv = y.inv();
        let mut p = c64(1.0, 0.0);
        for o in out.iter_mut() {
            *o = p * inv;
            p *= x;
        }
    })?;
    Ok((r.values, r.error))
}

/// Integral of `sum_j coeffs[j] x^j dx / y` along a path, with its error estimate.
pub fn abelian_integral(
    curve: &HyperellipticCurve,
    coeffs: &[Complex64],
    path: &SheetPath,
    opts: QuadOptions,
) -> Result<(Complex64, f64)> {
    if coeffs.iter().all(|c| c.norm() == 0.0) {
        return Ok((c64(0.0, 0.0), 0.0));
    }
    let r = path_integral(curve, path, 1, opts, |x, y, out| {
        out[0] = super::horner(coeffs, x) / y;
    })?;
    Ok((r.values[0], r.error))
}

/// Compute `A`, the normalised coefficients and the Riemann matrix.
pub fn period_matrix(curve: &HyperellipticCurve, basis: &HomologyBasis) -> Result<PeriodData> {
    period_matrix_with(curve, basis, quad_options(&curve.tolerances()))
}

pub fn period_matrix_with(curve: &HyperellipticCurve, basis: &HomologyBasis, opts: QuadOptions) -> Result<PeriodData> {
    let g = curve.genus();
    let mut per_chain = Vec::with_capacity(basis.chains.len());
    let mut error = 0.0;
    for ch in &basis.chains {
        let (v, e) = raw_integrals(curve, ch, opts)?;
        per_chain.push(v);
        error += e;
    }
    let mut a = DMatrix::<Complex64>::zeros(g, g);
    let mut b_raw = DMatrix::<Complex64>::zeros(g, g);
    for j in 0..g {
        let col: Vec<Complex64> = per_chain.iter().map(|v| v[j]).collect();
        let (pa, pb) = basis.combine(&col);
        for i in 0..g {
            a[(i, j)] = pa[i];
            b_raw[(i, j)] = pb[i];
        }
    }
    let sv = a.clone().singular_values();
    let cond = sv.max() / sv.min();
    if !cond.is_finite() || cond > 1e12 {
        return Err(Error::SingularPeriodMatrix(cond));
    }
    let a_inv = a.clone().try_inverse().ok_or(Error::SingularPeriodMatrix(cond))?;
    let coeffs = a_inv.transpose();
    let riemann = &b_raw * &a_inv;
    let pd = finish(g, basis.scheme, a, b_raw, coeffs, riemann, error)?;
    let asym = pd.symmetry_defect();
    if asym > 1e-6_f64.max(1e3 * curve.tolerances().period) {
        return Err(Error::PeriodCheckFailed(format!("Riemann matrix asymmetric by {asym:e}")));
    }
    if pd.im_min_eigenvalue() <= 0.0 {
        return Err(Error::PeriodCheckFailed("Im B is not positive definite".into()));
    }
    Ok(pd)
}

fn finish(
    g: usize,
    scheme: BasisScheme,
    a: DMatrix<Complex64>,
    b_raw: DMatrix<Complex64>,
    coeffs: DMatrix<Complex64>,
    riemann: DMatrix<Complex64>,
    error: f64,
) -> Result<PeriodData> {
    let im = riemann.map(|z| z.im);
    let im_sym = (&im + im.transpose()) * 0.5;
    let im_inv = im_sym
        .try_inverse()
        .ok_or_else(|| Error::PeriodCheckFailed("Im B is singular".into()))?;
    Ok(PeriodData { genus: g, scheme, a, b_raw, coeffs, riemann, im_inv, error })
}

impl PeriodData {
    /// `max |B - B^T|`.
    pub fn symmetry_defect(&self) -> f64 {
        let m = &self.riemann - self.riemann.transpose();
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn im_min_eigenvalue(&self) -> f64 {
        let im = self.riemann.map(|z| z.im);
        let sym = (&im + im.transpose()) * 0.5;
        SymmetricEigen::new(sym).eigenvalues.min()
    }

    /// Values of the raw differentials `x^j r` for a chart factor `r = (dx/dz) / y`.
    pub fn raw_values(&self, x: Complex64, r: Complex64) -> Vec<Complex64> {
        let mut p = r;
        (0..self.genus)
            .map(|_| {
                let v = p;
                p *= x;
                v
            })
            .collect()
    }

    /// Normalised differentials `v_k` at a point, for chart factor `r`.
    pub fn v_values(&self, x: Complex64, r: Complex64) -> Vec<Complex64> {
        let raw = self.raw_values(x, r);
        (0..self.genus)
            .map(|k| (0..self.genus).fold(c64(0.0, 0.0), |acc, j| acc + self.coeffs[(k, j)] * raw[j]))
            .collect()
    }

    /// Raw-basis coefficients of `v_k`, lowest power first.
    pub fn v_coeffs(&self, k: usize) -> Vec<Complex64> {
        (0..self.genus).map(|j| self.coeffs[(k, j)]).collect()
    }

    /// Re-integrate each `v_k` over each `a_i` and return `max |int - delta|`.
    pub fn normalization_defect(
        &self,
        curve: &HyperellipticCurve,
        basis: &HomologyBasis,
        opts: QuadOptions,
    ) -> Result<f64> {
        let g = self.genus;
        let mut worst = 0.0f64;
        for k in 0..g {
            let coeffs = self.v_coeffs(k);
            let mut per_chain = Vec::with_capacity(basis.chains.len());
            for ch in &basis.chains {
                per_chain.push(abelian_integral(curve, &coeffs, ch, opts)?.0);
            }
            let (pa, _) = basis.combine(&per_chain);
            for (i, v) in pa.iter().enumerate() {
                worst = worst.max((v - c64(if i == k { 1.0 } else { 0.0 }, 0.0)).norm());
            }
        }
        Ok(worst)
    }

    pub fn export(&self, curve: &HyperellipticCurve) -> PeriodExport {
        let rows = |m: &DMatrix<Complex64>| (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
        PeriodExport {
            genus: self.genus,
            scheme: self.scheme,
            branch_points: curve.branch_points().to_vec(),
            a: rows(&self.a),
            b_raw: rows(&self.b_raw),
            coeffs: rows(&self.coeffs),
            riemann: rows(&self.riemann),
            error: self.error,
            symmetry_defect: self.symmetry_defect(),
            im_min_eigenvalue: self.im_min_eigenvalue(),
        }
    }
}

/// JSON form of [`PeriodData`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodExport {
    pub genus: usize,
    pub scheme: BasisScheme,
    pub branch_points: Vec<Complex64>,
    pub a: Vec<Vec<Complex64>>,
    pub b_raw: Vec<Vec<Complex64>>,
    pub coeffs: Vec<Vec<Complex64>>,
    pub riemann: Vec<Vec<Complex64>>,
    pub error: f64,
    pub symmetry_defect: f64,
    pub im_min_eigenvalue: f64,
}

impl PeriodExport {
    pub fn to_period_data(&self) -> Result<PeriodData> {
        let g = self.genus;
        let mat = |r: &Vec<Vec<Complex64>>| DMatrix::from_fn(g, g, |i, j| r[i][j]);
        finish(g, self.scheme, mat(&self.a), mat(&self.b_raw), mat(&self.coeffs), mat(&self.riemann), self.error)
    }
}
