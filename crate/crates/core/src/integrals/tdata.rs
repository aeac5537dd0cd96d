//! Mean-removed harmonic functions, `T'(0)` and the genus-two constant.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::{harmonic_field, HarmonicField};
use super::quadrature::{area_from_periods, build_quadrature, QuadratureBudget, SurfaceQuadrature};
use crate::curve::c64;
use crate::error::{Error, Result};
use crate::harmonic::{build_pair, HarmonicPair};
use crate::kernels::KernelContext;
use crate::linalg::{hermitian_defect, hermitian_eigenvalues, rows};
use crate::smatrix::{s_zero, ConicalDivisor, Holonomy};

/// `G_xi = H / (2 sqrt(pi))` at `lambda = 0`.
pub const TWO_SQRT_PI: f64 = 3.544_907_701_811_032;

/// `calH_k = (H_k - mean) / (2 sqrt(pi))` at every node on both sheets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalH {
    pub values: Vec<Vec<[Complex64; 2]>>,
    /// `(1 / A) int H_k dS`.
    pub means: Vec<Complex64>,
    /// `|mean(calH_k)| / rms(calH_k)` after the removal.
    pub residual_mean: Vec<f64>,
    /// `int |calH_k|^2 dS`.
    pub norms: Vec<f64>,
}

pub fn cal_h(field: &HarmonicField, quad: &SurfaceQuadrature) -> CalH {
    let a = quad.area;
    let mut out = CalH { values: Vec::new(), means: Vec::new(), residual_mean: Vec::new(), norms: Vec::new() };
    for h in &field.values {
        let mean = quad.integrate(|i, s| h[i][s]) / a;
        let vals: Vec<[Complex64; 2]> =
            h.iter().map(|v| [(v[0] - mean) / TWO_SQRT_PI, (v[1] - mean) / TWO_SQRT_PI]).collect();
        let new_mean = quad.integrate(|i, s| vals[i][s]) / a;
        let norm = quad.integrate(|i, s| c64(vals[i][s].norm_sqr(), 0.0)).re;
        out.residual_mean.push(new_mean.norm() / (norm / a).sqrt().max(f64::MIN_POSITIVE));
        out.means.push(mean);
        out.norms.push(norm);
        out.values.push(vals);
    }
    out
}

/// `T'(0)_kj = int calH_k conj(calH_j) dS`.
pub fn t_prime(cal: &CalH, quad: &SurfaceQuadrature) -> DMatrix<Complex64> {
    let n = cal.values.len();
    DMatrix::from_fn(n, n, |k, j| quad.integrate(|i, s| cal.values[k][i][s] * cal.values[j][i][s].conj()))
}

/// `d/d lambda det T` at `0` for a 2x2 `T` from `T(0)` and `T'(0)`.
pub fn det_derivative(t0: &[Vec<Complex64>], tp: &[Vec<Complex64>]) -> Complex64 {
    tp[0][0] * t0[1][1] + t0[0][0] * tp[1][1] - tp[0][1] * t0[1][0] - t0[0][1] * tp[1][0]
}

/// `T(0)` and `T'(0)` with their diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TData {
    pub t0: Vec<Vec<Complex64>>,
    pub t_prime: Vec<Vec<Complex64>>,
    /// Entrywise difference to the coarser quadrature.
    pub t_prime_error: Vec<Vec<f64>>,
    /// `max |T'_kj - conj T'_jk| / max |T'|`.
    pub hermitian_defect: f64,
    /// Smallest eigenvalue of the Hermitian part of `T'` over `max |T'|`.
    pub min_eigenvalue: f64,
    pub det_t0: Complex64,
    /// `|det T(0)| / max |T(0)|^2`.
    pub det_t0_relative: f64,
}

/// One pass at a fixed budget.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadraturePass {
    pub budget: QuadratureBudget,
    pub nodes: usize,
    pub area: f64,
    pub cal_h: CalH,
    pub t_prime: Vec<Vec<Complex64>>,
    pub field_error: f64,
}

/// The C2 estimate from two budgets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct C2Estimate {
    pub c2: Complex64,
    /// Difference to the coarser pass.
    pub error: f64,
    pub coarse_c2: Complex64,
    pub area: f64,
    pub area_from_periods: f64,
    pub t: TData,
    pub fine: QuadraturePass,
    pub coarse: QuadraturePass,
}

impl C2Estimate {
    pub fn relative_error(&self) -> f64 {
        self.error / self.c2.norm().max(f64::MIN_POSITIVE)
    }
}

fn pass(ctx: &KernelContext, pairs: &[HarmonicPair], omega: &[Complex64], budget: QuadratureBudget) -> Result<QuadraturePass> {
    let quad = build_quadrature(&ctx.curve, omega, budget)?;
    let field = harmonic_field(ctx, pairs, &quad)?;
    let cal = cal_h(&field, &quad);
    let tp = rows(&t_prime(&cal, &quad));
    Ok(QuadraturePass { budget, nodes: quad.len(), area: quad.area, cal_h: cal, t_prime: tp, field_error: field.error })
}

/// The budget used for error bars: one level down, or a lower order at level 0.
pub fn coarser_budget(b: QuadratureBudget) -> QuadratureBudget {
    b.coarser().unwrap_or(QuadratureBudget { order: b.order.saturating_sub(2).max(2), ..b })
}

/// `T(0)`, `T'(0)` for the zero divisor of `omega`, and `C2 = d/dlambda det T(0)`.
pub fn universal_c2(ctx: &KernelContext, omega: &[Complex64], budget: QuadratureBudget) -> Result<C2Estimate> {
    if ctx.genus() != 2 {
        return Err(Error::GenusNotTwo(ctx.genus()));
    }
    c2_for_divisor(ctx, &ConicalDivisor::from_omega(&ctx.curve, omega, None)?, budget)
}

/// As [`universal_c2`], for a divisor already carrying distinguished frames.
pub fn c2_for_divisor(ctx: &KernelContext, divisor: &ConicalDivisor, budget: QuadratureBudget) -> Result<C2Estimate> {
    if ctx.genus() != 2 {
        return Err(Error::GenusNotTwo(ctx.genus()));
    }
    let omega = match &divisor.holonomy {
        Holonomy::Trivial { omega } => omega.as_slice(),
        Holonomy::External => return Err(Error::DivisorNotCanonical("no one-form attached to the divisor".into())),
    };
    let pairs: Vec<HarmonicPair> = (0..divisor.len()).map(|k| build_pair(k, divisor, ctx)).collect::<Result<_>>()?;
    let t0 = s_zero(divisor, ctx)?.s_ah;

    let fine = pass(ctx, &pairs, omega, budget)?;
    let coarse = pass(ctx, &pairs, omega, coarser_budget(budget))?;
    let tp = fine.t_prime.clone();
    let tpm = DMatrix::from_fn(2, 2, |i, j| tp[i][j]);
    let scale = tpm.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let herm = DMatrix::from_fn(2, 2, |i, j| (tp[i][j] + tp[j][i].conj()) * 0.5);
    let min_eigenvalue = hermitian_eigenvalues(&herm)?.first().copied().unwrap_or(0.0) / scale;
    let det_t0 = t0[0][0] * t0[1][1] - t0[0][1] * t0[1][0];
    let t0_scale = t0.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let t = TData {
        t_prime_error: (0..2).map(|i| (0..2).map(|j| (tp[i][j] - coarse.t_prime[i][j]).norm()).collect()).collect(),
        hermitian_defect: hermitian_defect(&tpm) / scale,
        min_eigenvalue,
        det_t0,
        det_t0_relative: det_t0.norm() / (t0_scale * t0_scale),
        t0,
        t_prime: tp,
    };
    let c2 = det_derivative(&t.t0, &t.t_prime);
    let coarse_c2 = det_derivative(&t.t0, &coarse.t_prime);
    Ok(C2Estimate {
        c2,
        error: (c2 - coarse_c2).norm(),
        coarse_c2,
        area: fine.area,
        area_from_periods: area_from_periods(&ctx.periods, omega),
        t,
        fine,
        coarse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{quintic_test_curve, sextic_test_curve, BasisScheme, Tolerances};

    const QUICK: QuadratureBudget = QuadratureBudget { level: 0, order: 6, max_cells: 100_000 };

    fn ctx(quintic: bool) -> KernelContext {
        let spec = if quintic { quintic_test_curve() } else { sextic_test_curve() };
        KernelContext::new(spec.build(Tolerances::default()).unwrap(), BasisScheme::Lexicographic).unwrap()
    }

    #[test]
    fn gram_structure_and_degenerate_t0() {
        let ctx = ctx(true);
        let e = universal_c2(&ctx, &[c64(0.2, 0.35), c64(1.0, 0.0)], QUICK).unwrap();
        for r in &e.fine.cal_h.residual_mean {
            assert!(*r < 1e-4, "{r}");
        }
        assert!(e.t.hermitian_defect < 1e-3);
        assert!(e.t.min_eigenvalue > -1e-3);
        assert!(e.t.t_prime[0][0].re > 0.0 && e.t.t_prime[1][1].re > 0.0);
        assert!(e.t.det_t0_relative < 1e-8, "{}", e.t.det_t0_relative);
        assert!((e.area / e.area_from_periods - 1.0).abs() < 1e-4);
        // refinement stability of the norms
        for k in 0..2 {
            let (a, b) = (e.fine.cal_h.norms[k], e.coarse.cal_h.norms[k]);
            assert!((a - b).abs() < 1e-3 * a, "{a} {b}");
        }
    }

    #[test]
    fn cal_h_scales_with_omega() {
        let ctx = ctx(false);
        let omega = [c64(-0.3, -0.2), c64(1.0, 0.0)];
        let run = |om: &[Complex64]| {
            let div = ConicalDivisor::from_omega(&ctx.curve, om, None).unwrap();
            let pairs: Vec<HarmonicPair> = (0..2).map(|k| build_pair(k, &div, &ctx).unwrap()).collect();
            let quad = build_quadrature(&ctx.curve, om, QuadratureBudget { order: 4, ..QUICK }).unwrap();
            let field = harmonic_field(&ctx, &pairs, &quad).unwrap();
            cal_h(&field, &quad)
        };
        let one = run(&omega);
        let four = run(&[omega[0] * 4.0, omega[1] * 4.0]);
        // xi -> 2 xi, so H -> H / 2 at the same nodes
        for &n in &[17usize, 900] {
            for k in 0..2 {
                for s in 0..2 {
                    let (a, b) = (one.values[k][n][s], four.values[k][n][s]);
                    assert!((a - b * 2.0).norm() < 1e-7 * a.norm().max(1.0), "{a} {b}");
                }
            }
        }
    }

    #[test]
    fn c2_ignores_branch_choice() {
        let ctx = ctx(false);
        let omega = [c64(0.4, -0.5), c64(1.0, 0.0)];
        let plain = universal_c2(&ctx, &omega, QUICK).unwrap();
        let flipped = ConicalDivisor::from_omega(&ctx.curve, &omega, Some(&[-1, 1])).unwrap();
        let other = c2_for_divisor(&ctx, &flipped, QUICK).unwrap();
        assert!((plain.c2 - other.c2).norm() < 1e-9, "{} {}", plain.c2, other.c2);
        assert!((plain.t.t_prime[0][1] + other.t.t_prime[0][1]).norm() < 1e-9);
    }

    #[test]
    fn needs_genus_two_and_a_one_form() {
        let curve = crate::curve::CurveSpec::from_real(&[0.3, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]).build(Tolerances::default()).unwrap();
        let ctx3 = KernelContext::new(curve, BasisScheme::Lexicographic).unwrap();
        assert_eq!(universal_c2(&ctx3, &[c64(1.0, 0.0)], QUICK).unwrap_err(), Error::GenusNotTwo(3));
    }
}
