//! Tensor Gauss–Legendre nodes on the fan mesh, weighted for `dS = |omega|^2`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mesh::{build_mesh, Mesh};
use crate::curve::{c64, horner, polynomial_roots, HyperellipticCurve, PeriodData};
use crate::error::{Error, Result};
use crate::quad::gauss_legendre;

/// Refinement level, Gauss–Legendre order per cell direction, and a hard cell cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureBudget {
    pub level: usize,
    pub order: usize,
    pub max_cells: usize,
}

impl Default for QuadratureBudget {
    fn default() -> Self {
        QuadratureBudget { level: 0, order: 8, max_cells: 200_000 }
    }
}

impl QuadratureBudget {
    pub fn coarser(&self) -> Option<Self> {
        (self.level > 0).then(|| QuadratureBudget { level: self.level - 1, ..*self })
    }
}

/// One node over `x`; it stands for both sheets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub x: Complex64,
    /// Euclidean area weight in the x-plane.
    pub area: f64,
    /// `area * |o(x)|^2 / |f(x)|`, the `dS` weight on one sheet.
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurfaceQuadrature {
    pub omega: Vec<Complex64>,
    pub budget: QuadratureBudget,
    /// Branch points and zeros of `o`, the apexes the mesh is refined around.
    pub specials: Vec<Complex64>,
    pub mesh: Mesh,
    /// `order^2` nodes per leaf cell, indexed `cell * order^2 + i * order + j`
    /// with `i` along the fan radius and `j` along the edge.
    pub nodes: Vec<Node>,
    /// Total area over both sheets.
    pub area: f64,
}

/// Area of the surface in `|omega|^2` from the bilinear relations.
pub fn area_from_periods(periods: &PeriodData, omega: &[Complex64]) -> f64 {
    let g = periods.genus;
    let o: Vec<Complex64> = (0..g).map(|j| omega.get(j).copied().unwrap_or(c64(0.0, 0.0))).collect();
    let mut s = c64(0.0, 0.0);
    for i in 0..g {
        let alpha: Complex64 = (0..g).map(|j| periods.a[(i, j)] * o[j]).sum();
        let beta: Complex64 = (0..g).map(|j| periods.b_raw[(i, j)] * o[j]).sum();
        s += alpha.conj() * beta;
    }
    s.im.abs()
}

fn check_omega(curve: &HyperellipticCurve, omega: &[Complex64]) -> Result<()> {
    let g = curve.genus();
    if omega.len() > g || omega.iter().all(|c| c.norm() == 0.0) {
        return Err(Error::Unsupported(format!("omega needs 1..={g} coefficients, not all zero")));
    }
    Ok(())
}

pub fn build_quadrature(curve: &HyperellipticCurve, omega: &[Complex64], budget: QuadratureBudget) -> Result<SurfaceQuadrature> {
    check_omega(curve, omega)?;
    if budget.order == 0 {
        return Err(Error::Unsupported("quadrature order must be positive".into()));
    }
    let mut specials = curve.branch_points().to_vec();
    for r in polynomial_roots(omega)? {
        if specials.iter().all(|s| (s - r).norm() > 1e-10 * s.norm().max(1.0)) {
            specials.push(r);
        }
    }
    let mesh = build_mesh(&specials, budget.level, budget.max_cells)?;
    let q = budget.order;
    let (gx, gw) = gauss_legendre(q);
    let mut nodes = Vec::with_capacity(mesh.cells.len() * q * q);
    for (_, cell) in &mesh.cells {
        for i in 0..q {
            for j in 0..q {
                let (z, jac) = cell.graded(gx[i], gx[j]);
                let x = cell.plane.to_x(z);
                let area = gw[i] * gw[j] * jac * cell.plane.jac(z).norm_sqr();
                nodes.push(Node { x, area, weight: area * density(curve, omega, x) });
            }
        }
    }
    let area = 2.0 * nodes.iter().map(|n| n.weight).sum::<f64>();
    Ok(SurfaceQuadrature { omega: omega.to_vec(), budget, specials, mesh, nodes, area })
}

/// `|o(x)|^2 / |f(x)|`.
fn density(curve: &HyperellipticCurve, omega: &[Complex64], x: Complex64) -> f64 {
    horner(omega, x).norm_sqr() / curve.f(x).norm()
}

impl SurfaceQuadrature {
    pub fn order(&self) -> usize {
        self.budget.order
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `int |p(x) dx / y|^2` over both sheets. This is also the squared
    /// `L^2(dS)` norm of the function `(p dx / y) / omega`.
    pub fn form_norm(&self, curve: &HyperellipticCurve, p: &[Complex64]) -> f64 {
        2.0 * self.nodes.iter().map(|n| n.area * density(curve, p, n.x)).sum::<f64>()
    }

    /// `int phi dS` over both sheets; `phi(node, sheet)` with sheet `0` for `+y`.
    pub fn integrate<F: Fn(usize, usize) -> Complex64>(&self, phi: F) -> Complex64 {
        let mut s = c64(0.0, 0.0);
        for (i, n) in self.nodes.iter().enumerate() {
            s += (phi(i, 0) + phi(i, 1)) * n.weight;
        }
        s
    }

    /// Jittered stratified Monte Carlo estimate of the area with `strata^2`
    /// samples per leaf cell; returns the estimate and its standard error.
    pub fn monte_carlo_area(&self, curve: &HyperellipticCurve, seed: u64, strata: usize) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = strata.max(1);
        let inv = 1.0 / m as f64;
        let (mut total, mut var) = (0.0, 0.0);
        for (_, cell) in &self.mesh.cells {
            let mut vals = Vec::with_capacity(m * m);
            for i in 0..m {
                for j in 0..m {
                    let a = (i as f64 + rng.random::<f64>()) * inv;
                    let b = (j as f64 + rng.random::<f64>()) * inv;
                    let (z, jac) = cell.graded(a, b);
                    let x = cell.plane.to_x(z);
                    vals.push(2.0 * jac * cell.plane.jac(z).norm_sqr() * density(curve, &self.omega, x) * inv * inv);
                }
            }
            total += vals.iter().sum::<f64>();
            // neighbouring strata differences bound the per-stratum variance
            if vals.len() > 1 {
                let d: f64 = vals.windows(2).map(|w| (w[0] - w[1]).powi(2)).sum::<f64>() / (2.0 * (vals.len() - 1) as f64);
                var += d * vals.len() as f64;
            }
        }
        (total, var.sqrt())
    }
}
