//! Canonical bidifferential, Bergman and Schiffer kernels, projective
//! connections and distinguished frames.

mod chart;
mod frame;
mod klein;

pub use chart::{Chart, ChartKind, ChartPoint};
pub use frame::{distinguished_frame, FrameJet};
pub use klein::KleinForm;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::curve::{
    build_homology_basis, c64, path_integral, period_matrix, quad_options, BasisScheme, HomologyBasis,
    HyperellipticCurve, PeriodData, SheetPath, SurfacePoint,
};
use crate::error::{Error, Result};
use crate::quad::QuadOptions;

const PROBE_SEED: u64 = 0x5eed_0b5e;

/// Holomorphic correction `c` in `W = W0 + sum c_jk v_j(P) v_k(Q)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrectionMatrix {
    pub c: Vec<Vec<Complex64>>,
    pub probes: Vec<SurfacePoint>,
    /// `max |c - c^T|`.
    pub symmetry_defect: f64,
    pub error: f64,
}

/// Everything needed to evaluate kernels on one curve with one marking.
#[derive(Debug, Clone)]
pub struct KernelContext {
    pub curve: HyperellipticCurve,
    pub basis: HomologyBasis,
    pub periods: PeriodData,
    pub klein: KleinForm,
    pub correction: CorrectionMatrix,
    c: DMatrix<Complex64>,
    opts: QuadOptions,
}

/// A kernel value together with a frame description for each argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiDiffValue {
    pub value: Complex64,
    /// Derivatives `d xi / d z` of the two frames at their centres, or 1 for raw chart points.
    pub frame_p1: [Complex64; 2],
}

fn point_segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    if d.norm() == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0);
    (p - (a + d * t)).norm()
}

/// Distance from `x` to the projection of a set of paths.
pub fn distance_to_paths(x: Complex64, paths: &[SheetPath]) -> f64 {
    paths
        .iter()
        .flat_map(|p| p.vertices.windows(2).map(move |w| point_segment_distance(x, w[0], w[1])))
        .fold(f64::INFINITY, f64::min)
}

impl KernelContext {
    pub fn new(curve: HyperellipticCurve, scheme: BasisScheme) -> Result<Self> {
        let basis = build_homology_basis(&curve, scheme)?;
        let periods = period_matrix(&curve, &basis)?;
        Self::from_parts(curve, basis, periods)
    }

    pub fn from_parts(curve: HyperellipticCurve, basis: HomologyBasis, periods: PeriodData) -> Result<Self> {
        let klein = KleinForm::new(&curve);
        let opts = quad_options(&curve.tolerances());
        let g = curve.genus();
        let mut ctx = KernelContext {
            curve,
            basis,
            periods,
            klein,
            correction: CorrectionMatrix { c: vec![], probes: vec![], symmetry_defect: 0.0, error: 0.0 },
            c: DMatrix::zeros(g, g),
            opts,
        };
        ctx.normalize_w()?;
        Ok(ctx)
    }

    pub fn genus(&self) -> usize {
        self.curve.genus()
    }

    pub fn quad_options(&self) -> QuadOptions {
        self.opts
    }

    /// Deterministic generic points away from branch points and basis cycles.
    pub fn generic_points(&self, n: usize, seed: u64) -> Vec<SurfacePoint> {
        let e = self.curve.branch_points();
        let sep = self.curve.min_separation();
        let (mut lo, mut hi) = (c64(f64::INFINITY, f64::INFINITY), c64(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for z in e {
            lo = c64(lo.re.min(z.re), lo.im.min(z.im));
            hi = c64(hi.re.max(z.re), hi.im.max(z.im));
        }
        let pad = 0.25 * sep;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out: Vec<SurfacePoint> = Vec::with_capacity(n);
        // mutual clearance; halved whenever the box looks full so large n terminates
        let mut gap = 0.1 * sep;
        let mut misses = 0usize;
        while out.len() < n {
            let x = c64(
                lo.re - pad + (hi.re - lo.re + 2.0 * pad) * rng.random::<f64>(),
                lo.im - pad + (hi.im - lo.im + 2.0 * pad) * rng.random::<f64>(),
            );
            let sheet = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let clear_b = self.curve.nearest_branch_point(x).1 > 0.15 * sep;
            let clear_c = distance_to_paths(x, &self.basis.chains) > 0.1 * sep;
            let clear_p = out.iter().all(|p| (p.x - x).norm() > gap);
            if clear_b && clear_c && clear_p {
                out.push(SurfacePoint::finite(x, self.curve.y_principal(x) * sheet));
                misses = 0;
            } else {
                misses += 1;
                if misses == 5000 {
                    gap *= 0.5;
                    misses = 0;
                }
            }
        }
        out
    }

    /// Integrate `W0(., Q_m)` over every chain cycle, for several `Q_m` at once.
    fn w0_chain_integrals(&self, qs: &[ChartPoint]) -> Result<(Vec<Vec<Complex64>>, f64)> {
        let mut per_chain = Vec::with_capacity(self.basis.chains.len());
        let mut err = 0.0;
        for ch in &self.basis.chains {
            let r = path_integral(&self.curve, ch, qs.len(), self.opts, |x, y, out| {
                let p = ChartPoint::in_x(x, y);
                for (o, q) in out.iter_mut().zip(qs) {
                    *o = self.klein.w0(&p, q).unwrap_or(c64(f64::NAN, f64::NAN));
                }
            })?;
            if r.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::PathThroughSingularity);
            }
            err += r.error;
            per_chain.push(r.values);
        }
        Ok((per_chain, err))
    }

    /// Solve for the correction that kills the a-periods of `W`.
    fn normalize_w(&mut self) -> Result<()> {
        let g = self.genus();
        for attempt in 0..20u64 {
            let probes = self.generic_points(g, PROBE_SEED + attempt);
            let qs: Vec<ChartPoint> = probes.iter().map(|p| ChartPoint::in_x(p.x, p.y)).collect();
            let v = DMatrix::from_fn(g, g, |l, m| self.periods.v_values(qs[m].x, qs[m].r)[l]);
            let sv = v.clone().singular_values();
            if sv.min() < 1e-8 * sv.max() {
                continue;
            }
            let (per_chain, err) = self.w0_chain_integrals(&qs)?;
            let mut ia = DMatrix::<Complex64>::zeros(g, g);
            for m in 0..g {
                let col: Vec<Complex64> = per_chain.iter().map(|v| v[m]).collect();
                let (pa, _) = self.basis.combine(&col);
                for i in 0..g {
                    ia[(i, m)] = pa[i];
                }
            }
            let v_inv = v.try_inverse().ok_or(Error::ProbePointsDegenerate)?;
            let c = -(ia * v_inv);
            let defect = (&c - c.transpose()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            // the symmetric part is the exact answer; the antisymmetric part is quadrature noise
            let c_sym = (&c + c.transpose()) * c64(0.5, 0.0);
            self.correction = CorrectionMatrix {
                c: (0..g).map(|i| c.row(i).iter().copied().collect()).collect(),
                probes,
                symmetry_defect: defect,
                error: err,
            };
            self.c = c_sym;
            return Ok(());
        }
        Err(Error::ProbePointsDegenerate)
    }

    /// Normalised differentials at a chart point.
    pub fn v(&self, p: &ChartPoint) -> Vec<Complex64> {
        self.periods.v_values(p.x, p.r)
    }

    /// The algebraic candidate `W0`.
    pub fn raw_bidifferential(&self, p: &ChartPoint, q: &ChartPoint) -> Result<Complex64> {
        self.klein.w0(p, q)
    }

    /// The normalised canonical bidifferential.
    pub fn w(&self, p: &ChartPoint, q: &ChartPoint) -> Result<Complex64> {
        let w0 = self.klein.w0(p, q)?;
        let (vp, vq) = (self.v(p), self.v(q));
        Ok(w0 + self.quadratic(&self.c, &vp, &vq))
    }

    fn quadratic(&self, m: &DMatrix<Complex64>, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        let g = a.len();
        let mut s = c64(0.0, 0.0);
        for i in 0..g {
            for j in 0..g {
                s += m[(i, j)] * a[i] * b[j];
            }
        }
        s
    }

    fn im_inv_form(&self, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        let n = &self.periods.im_inv;
        let mut s = c64(0.0, 0.0);
        for i in 0..a.len() {
            for j in 0..b.len() {
                s += a[i] * b[j] * n[(i, j)];
            }
        }
        s
    }

    /// `B(P, conj Q) = sum (Im B)^{-1}_ij v_i(P) conj(v_j(Q))`.
    pub fn bergman_kernel(&self, p: &ChartPoint, q: &ChartPoint) -> Complex64 {
        let vq: Vec<Complex64> = self.v(q).iter().map(|z| z.conj()).collect();
        self.im_inv_form(&self.v(p), &vq)
    }

    /// `S(P, Q) = W(P, Q) - pi sum (Im B)^{-1}_ij v_i(P) v_j(Q)`.
    pub fn schiffer_kernel(&self, p: &ChartPoint, q: &ChartPoint) -> Result<Complex64> {
        Ok(self.w(p, q)? - self.im_inv_form(&self.v(p), &self.v(q)) * PI)
    }

    /// Integrals of `W(., Q)` over `a_i` and `b_i`.
    pub fn w_periods(&self, q: &ChartPoint) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        let vq = self.v(q);
        let mut per_chain = Vec::with_capacity(self.basis.chains.len());
        for ch in &self.basis.chains {
            let r = path_integral(&self.curve, ch, 1, self.opts, |x, y, out| {
                let p = ChartPoint::in_x(x, y);
                let vp = self.v(&p);
                out[0] = self.klein.w0(&p, q).unwrap_or(c64(f64::NAN, f64::NAN)) + self.quadratic(&self.c, &vp, &vq);
            })?;
            if !r.values[0].is_finite() {
                return Err(Error::PathThroughSingularity);
            }
            per_chain.push(r.values[0]);
        }
        Ok(self.basis.combine(&per_chain))
    }

    /// `lim [K(z1, z2) - (z1 - z2)^{-2}]` on the diagonal of a frame, by
    /// Richardson extrapolation of the even function `h(eps) = K(-eps, eps) - 1/(2 eps)^2`.
    fn diagonal_limit<K>(&self, frame: &FrameJet, kernel: K) -> Result<Complex64>
    where
        K: Fn(&ChartPoint, &ChartPoint) -> Result<Complex64>,
    {
        let scale = frame.chart.scale() * frame.p1().norm();
        // large enough that rounding in x1 - x2 stays far below the O(eps^6) remainder
        let eps = 2e-2 * scale;
        let h = |e: f64| -> Result<Complex64> {
            let p = frame.point(&self.curve, c64(-e, 0.0))?;
            let q = frame.point(&self.curve, c64(e, 0.0))?;
            Ok(kernel(&p, &q)? - 1.0 / (4.0 * e * e))
        };
        let (h0, h1, h2) = (h(eps)?, h(eps / 2.0)?, h(eps / 4.0)?);
        let r1 = (h1 * 4.0 - h0) / 3.0;
        let r2 = (h2 * 4.0 - h1) / 3.0;
        if (r1 - r2).norm() > 1e-4 * r2.norm().max(1.0) {
            return Err(Error::ExtrapolationUnstable(r1.norm(), r2.norm()));
        }
        Ok((r2 * 16.0 - r1) / 15.0)
    }

    /// Bergman projective connection in the frame coordinate.
    pub fn bergman_proj_connection(&self, frame: &FrameJet) -> Result<Complex64> {
        Ok(self.diagonal_limit(frame, |p, q| self.w(p, q))? * 6.0)
    }

    /// Schiffer projective connection `S_B - 6 pi v^T (Im B)^{-1} v` in the frame coordinate.
    pub fn schiffer_proj_connection(&self, frame: &FrameJet) -> Result<Complex64> {
        let sb = self.bergman_proj_connection(frame)?;
        let v = self.v(&frame.centre_point(&self.curve)?);
        Ok(sb - self.im_inv_form(&v, &v) * (6.0 * PI))
    }

    /// Diagonal limit of the Schiffer kernel itself; an independent route to `S_Sch`.
    pub fn schiffer_diagonal_limit(&self, frame: &FrameJet) -> Result<Complex64> {
        Ok(self.diagonal_limit(frame, |p, q| self.schiffer_kernel(p, q))? * 6.0)
    }

    pub fn value_in_frames(&self, value: Complex64, a: &FrameJet, b: &FrameJet) -> BiDiffValue {
        BiDiffValue { value, frame_p1: [a.p1(), b.p1()] }
    }

    /// Points over `x` on the principal sheet as chart points.
    pub fn x_point(&self, x: Complex64, sheet: f64) -> ChartPoint {
        ChartPoint::in_x(x, self.curve.y_principal(x) * sheet)
    }
}
