//! The single-valued harmonic functions `H_k` with a simple pole at `P_k`, built
//! from the canonical bidifferential, and their expansions at the divisor.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::f64::consts::PI;

use crate::curve::{c64, path_integral, SheetPath};
use crate::error::{Error, Result};
use crate::kernels::{ChartPoint, FrameJet, KernelContext};
use crate::quad::{integrate, QuadOptions};
use crate::smatrix::{s_zero, ConicalDivisor, SZeroData};

pub const FIT_SAMPLES: usize = 64;
pub const FIT_RADII: [f64; 2] = [1e-2, 5e-3];

/// `Omega_k = -W(., P_k) + 2 pi i sum N Im v(P_k) v` and
/// `Sigma_k = -i W(., P_k) + 2 pi i sum N Re v(P_k) v`, with `N = (Im B)^{-1}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HarmonicPair {
    pub k: usize,
    pub pole: ChartPoint,
    pub omega_coef: Vec<Complex64>,
    pub sigma_coef: Vec<Complex64>,
    /// Largest `|Re|` over all a- and b-periods of both differentials.
    pub period_real_part: f64,
}

impl HarmonicPair {
    /// `(Omega_k, Sigma_k)` at `q`, relative to the coordinate of `q`.
    pub fn values(&self, ctx: &KernelContext, q: &ChartPoint) -> Result<[Complex64; 2]> {
        let w = ctx.w(q, &self.pole)?;
        let v = ctx.v(q);
        let (mut om, mut si) = (-w, -w * Complex64::i());
        for (a, va) in v.iter().enumerate() {
            om += self.omega_coef[a] * va;
            si += self.sigma_coef[a] * va;
        }
        Ok([om, si])
    }

    /// `H_k(end) - H_k(start)` along a path on the curve.
    pub fn h_along(&self, ctx: &KernelContext, path: &SheetPath) -> Result<Complex64> {
        let failed = RefCell::new(None);
        let r = path_integral(&ctx.curve, path, 2, ctx.quad_options(), |x, y, out| {
            match self.values(ctx, &ChartPoint::in_x(x, y)) {
                Ok(v) => out.copy_from_slice(&v),
                Err(e) => {
                    failed.borrow_mut().get_or_insert(e);
                    out.fill(c64(f64::NAN, f64::NAN));
                }
            }
        })?;
        if failed.borrow().is_some() || r.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::PathThroughSingularity);
        }
        Ok(combine(r.values[0], r.values[1]))
    }
}

/// `H = Re int Omega - i Re int Sigma`.
pub fn combine(int_omega: Complex64, int_sigma: Complex64) -> Complex64 {
    c64(int_omega.re, -int_sigma.re)
}

/// Build `Omega_k, Sigma_k` for the `k`-th divisor point and verify that
/// all their periods are imaginary.
pub fn build_pair(k: usize, divisor: &ConicalDivisor, ctx: &KernelContext) -> Result<HarmonicPair> {
    let pole = divisor.frames[k].centre_point(&ctx.curve)?;
    let vk = ctx.v(&pole);
    let g = ctx.genus();
    let n = &ctx.periods.im_inv;
    let two_pi_i = c64(0.0, 2.0 * PI);
    let omega_coef = (0..g).map(|a| two_pi_i * (0..g).map(|b| n[(a, b)] * vk[b].im).sum::<f64>()).collect();
    let sigma_coef = (0..g).map(|a| two_pi_i * (0..g).map(|b| n[(a, b)] * vk[b].re).sum::<f64>()).collect();
    let mut pair = HarmonicPair { k, pole, omega_coef, sigma_coef, period_real_part: 0.0 };

    let mut per_chain = Vec::with_capacity(ctx.basis.chains.len());
    for ch in &ctx.basis.chains {
        let clearance = crate::kernels::distance_to_paths(pole.x, std::slice::from_ref(ch));
        if clearance < 1e-3 * ctx.curve.min_separation() {
            return Err(Error::PathThroughSingularity);
        }
        let failed = RefCell::new(false);
        let r = path_integral(&ctx.curve, ch, 2, ctx.quad_options(), |x, y, out| {
            match pair.values(ctx, &ChartPoint::in_x(x, y)) {
                Ok(v) => out.copy_from_slice(&v),
                Err(_) => {
                    *failed.borrow_mut() = true;
                    out.fill(c64(0.0, 0.0));
                }
            }
        })?;
        if *failed.borrow() {
            return Err(Error::PathThroughSingularity);
        }
        per_chain.push([r.values[0], r.values[1]]);
    }
    let mut worst = 0.0f64;
    for comp in 0..2 {
        let vals: Vec<Complex64> = per_chain.iter().map(|v| v[comp]).collect();
        let (a, b) = ctx.basis.combine(&vals);
        worst = a.iter().chain(b.iter()).map(|z| z.re.abs()).fold(worst, f64::max);
    }
    pair.period_real_part = worst;
    if worst > 1e-6 {
        return Err(Error::PeriodsNotImaginary(worst));
    }
    Ok(pair)
}

/// `H_k = a + b xi + c conj(xi) + o(|xi|)` at one divisor point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionCoefficients {
    pub k: usize,
    pub j: usize,
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    /// Quadrature error plus loop closure defect, in coefficient units.
    pub residual: f64,
    /// `max(|b(r) - b(r/2)|, |c(r) - c(r/2)|)`.
    pub radius_difference: f64,
    pub radius: f64,
}

struct CircleFit {
    a: Complex64,
    b: Complex64,
    c: Complex64,
    residual: f64,
}

fn fit_circle(ctx: &KernelContext, pair: &HarmonicPair, frame: &FrameJet, self_term: bool, rho: f64) -> Result<CircleFit> {
    let n = FIT_SAMPLES;
    let opts = QuadOptions { abs_tol: 1e-13 * rho.recip(), rel_tol: 1e-13, max_intervals: 200 };
    let step = 2.0 * PI / n as f64;
    let arcs: Vec<Result<(Complex64, Complex64, f64)>> = (0..n)
        .into_par_iter()
        .map(|m| {
            let failed = RefCell::new(None);
            let r = integrate(2, m as f64 * step, (m + 1) as f64 * step, opts, |t, out| {
                let xi = Complex64::from_polar(rho, t);
                let dxi = xi * Complex64::i();
                match frame.point(&ctx.curve, xi).and_then(|q| pair.values(ctx, &q)) {
                    Ok(v) => {
                        out[0] = v[0] * dxi;
                        out[1] = v[1] * dxi;
                    }
                    Err(e) => {
                        failed.borrow_mut().get_or_insert(e);
                        out.fill(c64(0.0, 0.0));
                    }
                }
            })?;
            if let Some(e) = failed.into_inner() {
                return Err(e);
            }
            Ok((r.values[0], r.values[1], r.error))
        })
        .collect();
    let mut f = c64(0.0, 0.0);
    let mut s = c64(0.0, 0.0);
    let mut err = 0.0;
    let mut h = Vec::with_capacity(n);
    for (m, arc) in arcs.into_iter().enumerate() {
        let xi = Complex64::from_polar(rho, m as f64 * step);
        let mut val = combine(f, s);
        if self_term {
            val -= xi.inv();
        }
        h.push((xi, val));
        let (df, ds, e) = arc?;
        f += df;
        s += ds;
        err += e;
    }
    let closure = f.norm() + s.norm();
    let inv_n = 1.0 / n as f64;
    let a = h.iter().map(|(_, v)| v).sum::<Complex64>() * inv_n;
    let b = h.iter().map(|(xi, v)| v * xi.conj()).sum::<Complex64>() * (inv_n / (rho * rho));
    let c = h.iter().map(|(xi, v)| v * xi).sum::<Complex64>() * (inv_n / (rho * rho));
    Ok(CircleFit { a, b, c, residual: (err + closure) / rho })
}

/// Fit the expansion of `H_k` at `P_j` on circles `|xi_j| = r, r/2`.
pub fn fit_expansion(
    ctx: &KernelContext,
    pair: &HarmonicPair,
    j: usize,
    frame: &FrameJet,
    r: f64,
    tolerance: f64,
) -> Result<ExpansionCoefficients> {
    let self_term = pair.k == j;
    let f1 = fit_circle(ctx, pair, frame, self_term, r)?;
    let f2 = fit_circle(ctx, pair, frame, self_term, r / 2.0)?;
    let residual = f1.residual.max(f2.residual);
    let scale = (f2.b.norm() + f2.c.norm()).max(1.0);
    if residual > tolerance * scale {
        return Err(Error::FitResidualTooLarge { residual, tolerance: tolerance * scale });
    }
    let radius_difference = (f1.b - f2.b).norm().max((f1.c - f2.c).norm());
    Ok(ExpansionCoefficients {
        k: pair.k,
        j,
        a: f2.a,
        b: f2.b * 2.0 - f1.b,
        c: f2.c * 2.0 - f1.c,
        residual,
        radius_difference,
        radius: r,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coefficient {
    /// `b_kj` against `-S(P_k, P_j)`.
    B,
    /// `c_kj` against `-pi B(P_k, P_j)`.
    C,
    /// `b_kk` against `-S_Sch(xi_k) / 6`.
    BSelf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub k: usize,
    pub j: usize,
    pub coefficient: Coefficient,
    pub kernel_value: Complex64,
    pub fitted_value: Complex64,
    pub abs_diff: f64,
    pub rel_diff: f64,
    pub scale: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HarmonicCheck {
    pub fits: Vec<ExpansionCoefficients>,
    pub rows: Vec<ComparisonRow>,
    pub period_real_parts: Vec<f64>,
    pub s_zero: SZeroData,
}

impl HarmonicCheck {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

fn row(k: usize, j: usize, coefficient: Coefficient, kernel: Complex64, fitted: Complex64, tol: f64) -> ComparisonRow {
    let scale = kernel.norm().max(1.0);
    let abs_diff = (kernel - fitted).norm();
    ComparisonRow {
        k,
        j,
        coefficient,
        kernel_value: kernel,
        fitted_value: fitted,
        abs_diff,
        rel_diff: abs_diff / kernel.norm().max(f64::MIN_POSITIVE),
        scale,
        tolerance: tol * scale,
        pass: abs_diff < tol * scale,
    }
}

/// Fit every `H_k` at every `P_j` and compare with the kernel formulas.
pub fn harmonic_check(divisor: &ConicalDivisor, ctx: &KernelContext) -> Result<HarmonicCheck> {
    let n = divisor.len();
    let s0 = s_zero(divisor, ctx)?;
    let pairs = (0..n).map(|k| build_pair(k, divisor, ctx)).collect::<Result<Vec<_>>>()?;
    let mut fits = Vec::with_capacity(n * n);
    let mut rows = Vec::with_capacity(2 * n * n);
    for k in 0..n {
        for j in 0..n {
            let fit = fit_expansion(ctx, &pairs[k], j, &divisor.frames[j], FIT_RADII[0], 1e-6)
                .map_err(|e| Error::PairFailed { k, j, source: Box::new(e) })?;
            let (coef, tol) = if k == j { (Coefficient::BSelf, 1e-3) } else { (Coefficient::B, 1e-4) };
            rows.push(row(k, j, coef, s0.s_aa[k][j], fit.b, tol));
            rows.push(row(k, j, Coefficient::C, s0.s_ah[k][j], fit.c, 1e-4));
            fits.push(fit);
        }
    }
    Ok(HarmonicCheck { fits, rows, period_real_parts: pairs.iter().map(|p| p.period_real_part).collect(), s_zero: s0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{continue_y, quintic_test_curve, sextic_test_curve, BasisScheme, Tolerances};

    fn setup(spec: crate::curve::CurveSpec, a: Complex64) -> (KernelContext, ConicalDivisor) {
        let k = KernelContext::new(spec.build(Tolerances::default()).unwrap(), BasisScheme::Lexicographic).unwrap();
        let d = ConicalDivisor::from_omega(&k.curve, &[-a, c64(1.0, 0.0)], None).unwrap();
        (k, d)
    }

    #[test]
    fn periods_imaginary_and_pole_dominates() {
        let (k, d) = setup(quintic_test_curve(), c64(0.4, -0.5));
        let pair = build_pair(0, &d, &k).unwrap();
        assert!(pair.period_real_part < 1e-6);
        // on a small circle H ~ 1/xi
        let fit = fit_expansion(&k, &pair, 0, &d.frames[0], 1e-2, 1e-6).unwrap();
        let r = 1e-2;
        let h = fit.a + 1.0 / r + fit.b * r + fit.c * r;
        assert!((h.norm() * r - 1.0).abs() < 0.5);
    }

    #[test]
    fn path_independence() {
        let (k, d) = setup(sextic_test_curve(), c64(0.3, 0.2));
        let pair = build_pair(0, &d, &k).unwrap();
        // a loop around the two branch points 1 and exp(i pi/3) is a nontrivial cycle
        let centre = c64(0.75, 0.25 * 3f64.sqrt());
        let rad = 0.75;
        let q = centre + c64(0.0, -rad);
        let p0 = c64(-0.2, -0.6);
        let y0 = k.curve.y_principal(p0);
        let direct = continue_y(&k.curve, &[p0, q], y0).unwrap();
        let mut around = vec![p0];
        around.extend((0..=48).map(|i| centre + Complex64::from_polar(rad, -PI / 2.0 + 2.0 * PI * i as f64 / 48.0)));
        let twice = continue_y(&k.curve, &around, y0).unwrap();
        assert!((twice.end().1 - direct.end().1).norm() < 1e-8);
        let h1 = pair.h_along(&k, &direct).unwrap();
        let h2 = pair.h_along(&k, &twice).unwrap();
        assert!((h1 - h2).norm() < 1e-6, "{h1} {h2}");
    }

    #[test]
    fn base_point_shifts_by_constant() {
        let (k, d) = setup(sextic_test_curve(), c64(0.3, 0.2));
        let pair = build_pair(1, &d, &k).unwrap();
        let (b0, b1) = (c64(-0.5, -0.5), c64(-0.3, 0.4));
        let (q1, q2) = (c64(0.5, -0.4), c64(0.1, -0.6));
        let y0 = k.curve.y_principal(b0);
        let to_b1 = continue_y(&k.curve, &[b0, b1], y0).unwrap();
        let y1 = to_b1.end().1;
        let h = |base: Complex64, yb: Complex64, q: Complex64| {
            pair.h_along(&k, &continue_y(&k.curve, &[base, q], yb).unwrap()).unwrap()
        };
        let d1 = h(b0, y0, q1) - h(b1, y1, q1);
        let d2 = h(b0, y0, q2) - h(b1, y1, q2);
        assert!((d1 - d2).norm() < 1e-8);
    }

    #[test]
    fn coefficients_match_kernels_sextic() {
        let (k, d) = setup(sextic_test_curve(), c64(0.3, 0.2));
        let chk = harmonic_check(&d, &k).unwrap();
        for r in &chk.rows {
            assert!(r.pass, "{r:?}");
        }
    }
}
