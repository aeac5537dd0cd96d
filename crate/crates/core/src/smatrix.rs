//! The S-matrix blocks at zero spectral parameter, the Bergman matrix of a
//! divisor and the canonical / special divisor tests.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::curve::{c64, continue_y, lex_cmp, polynomial_roots, HyperellipticCurve, PeriodData, SurfacePoint};
use crate::error::{Error, Result};
use crate::kernels::{distinguished_frame, ChartPoint, FrameJet, KernelContext};
use crate::linalg::{hermitian_defect, hermitian_eigenvalues, rows, singular_values};

pub const DEFAULT_RANK_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Holonomy {
    /// Frames are distinguished parameters of `|omega|^2`; raw coefficients of `omega = o(x) dx / y`.
    Trivial { omega: Vec<Complex64> },
    /// Frames supplied by the caller (chart coordinates by default).
    External,
}

/// A positive divisor `P_1 + ... + P_{2g-2}` with a frame at each point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConicalDivisor {
    pub points: Vec<SurfacePoint>,
    pub frames: Vec<FrameJet>,
    pub holonomy: Holonomy,
}

fn same_point(a: &SurfacePoint, b: &SurfacePoint) -> bool {
    let s = a.x.norm().max(1.0);
    (a.x - b.x).norm() <= 1e-8 * s && (a.y - b.y).norm() <= 1e-8 * a.y.norm().max(1.0)
}

fn check_distinct(points: &[SurfacePoint]) -> Result<()> {
    for i in 0..points.len() {
        for j in 0..i {
            if same_point(&points[i], &points[j]) {
                return Err(Error::InvalidDivisor(format!("points {j} and {i} coincide")));
            }
        }
    }
    Ok(())
}

impl ConicalDivisor {
    /// The zero divisor of `omega = o(x) dx / y`, with distinguished frames.
    ///
    /// Zeros are ordered by `x` (lexicographically), principal sheet first.
    pub fn from_omega(curve: &HyperellipticCurve, omega: &[Complex64], branch_signs: Option<&[i8]>) -> Result<Self> {
        let g = curve.genus();
        if omega.len() > g || omega.iter().all(|c| c.norm() == 0.0) {
            return Err(Error::DivisorNotCanonical(format!("expected at most {g} coefficients, not all zero")));
        }
        let mut roots = polynomial_roots(omega)?;
        if roots.len() != g - 1 {
            return Err(Error::DivisorNotCanonical("omega vanishes at infinity".into()));
        }
        roots.sort_by(lex_cmp);
        let mut points = Vec::with_capacity(2 * g - 2);
        for (i, r) in roots.iter().enumerate() {
            if roots[..i].iter().any(|s| (s - r).norm() < 1e-8 * r.norm().max(1.0)) {
                return Err(Error::DivisorNotCanonical("repeated zero".into()));
            }
            if curve.branch_index(*r).is_some() {
                return Err(Error::DivisorNotCanonical("zero at a branch point is not simple".into()));
            }
            let y = curve.y_principal(*r);
            points.push(SurfacePoint::finite(*r, y));
            points.push(SurfacePoint::finite(*r, -y));
        }
        let frames = points
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let s = branch_signs.and_then(|b| b.get(k).copied()).unwrap_or(1);
                distinguished_frame(curve, omega, p, s).map_err(|e| match e {
                    Error::NotASimpleZero => Error::DivisorNotCanonical(format!("point {k} is not a simple zero")),
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ConicalDivisor { points, frames, holonomy: Holonomy::Trivial { omega: omega.to_vec() } })
    }

    /// Arbitrary points, each framed by its chart coordinate.
    pub fn with_chart_frames(curve: &HyperellipticCurve, points: Vec<SurfacePoint>) -> Result<Self> {
        let frames = points.iter().map(|p| FrameJet::at_point(curve, p)).collect::<Result<Vec<_>>>()?;
        Self::with_frames(curve, points, frames)
    }

    pub fn with_frames(curve: &HyperellipticCurve, points: Vec<SurfacePoint>, frames: Vec<FrameJet>) -> Result<Self> {
        let g = curve.genus();
        if points.len() != 2 * g - 2 || frames.len() != points.len() {
            return Err(Error::InvalidDivisor(format!("need {} points with frames, got {}", 2 * g - 2, points.len())));
        }
        for p in &points {
            if curve.branch_index(p.x).is_none() {
                curve.check_point(p)?;
            }
        }
        check_distinct(&points)?;
        Ok(ConicalDivisor { points, frames, holonomy: Holonomy::External })
    }

    /// `xi_k -> c_k xi_k`.
    pub fn rescaled(&self, factors: &[Complex64]) -> Self {
        let mut out = self.clone();
        for (f, c) in out.frames.iter_mut().zip(factors) {
            *f = f.scaled(*c);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Frame centres as chart points.
    pub fn chart_points(&self, curve: &HyperellipticCurve) -> Result<Vec<ChartPoint>> {
        self.frames.iter().map(|f| f.centre_point(curve)).collect()
    }
}

/// `S_aa(0)` and `S_ah(0)`; the conjugate blocks follow by conjugation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SZeroData {
    /// `S^{xi_k xi_j}(0)`.
    pub s_aa: Vec<Vec<Complex64>>,
    /// `S^{xi_k conj(xi_j)}(0)`.
    pub s_ah: Vec<Vec<Complex64>>,
}

impl SZeroData {
    pub fn s_hh(&self) -> Vec<Vec<Complex64>> {
        self.s_aa.iter().map(|r| r.iter().map(|z| z.conj()).collect()).collect()
    }

    pub fn s_ha(&self) -> Vec<Vec<Complex64>> {
        self.s_ah.iter().map(|r| r.iter().map(|z| z.conj()).collect()).collect()
    }
}

fn pair_err(k: usize, j: usize) -> impl Fn(Error) -> Error {
    move |e| Error::PairFailed { k, j, source: Box::new(e) }
}

/// Fill `S(0)` from the kernel relations.
pub fn s_zero(divisor: &ConicalDivisor, ctx: &KernelContext) -> Result<SZeroData> {
    let n = divisor.len();
    let pts = divisor.chart_points(&ctx.curve)?;
    let entries: Vec<(usize, usize, Complex64, Complex64)> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (k, j) = (idx / n, idx % n);
            let aa = if k == j {
                -ctx.schiffer_proj_connection(&divisor.frames[k]).map_err(pair_err(k, j))? / 6.0
            } else {
                -ctx.schiffer_kernel(&pts[k], &pts[j]).map_err(pair_err(k, j))?
            };
            let ah = -ctx.bergman_kernel(&pts[k], &pts[j]) * PI;
            Ok((k, j, aa, ah))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut s_aa = vec![vec![c64(0.0, 0.0); n]; n];
    let mut s_ah = s_aa.clone();
    for (k, j, aa, ah) in entries {
        s_aa[k][j] = aa;
        s_ah[k][j] = ah;
    }
    Ok(SZeroData { s_aa, s_ah })
}

/// `[B(P_j, conj P_k)]` with its singular values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BergmanMatrix {
    pub matrix: Vec<Vec<Complex64>>,
    /// Largest first.
    pub singular_values: Vec<f64>,
    pub min_eigenvalue: f64,
    pub hermitian_defect: f64,
    pub genus: usize,
}

impl BergmanMatrix {
    pub fn numerical_rank(&self, threshold: f64) -> usize {
        let top = self.singular_values.first().copied().unwrap_or(0.0);
        self.singular_values.iter().filter(|&&s| s > threshold * top).count()
    }
}

pub fn bergman_matrix_at(periods: &PeriodData, pts: &[ChartPoint]) -> Result<BergmanMatrix> {
    let vs: Vec<Vec<Complex64>> = pts.iter().map(|p| periods.v_values(p.x, p.r)).collect();
    let n = pts.len();
    let g = periods.genus;
    let m = DMatrix::from_fn(n, n, |j, k| {
        let mut s = c64(0.0, 0.0);
        for a in 0..g {
            for b in 0..g {
                s += vs[j][a] * vs[k][b].conj() * periods.im_inv[(a, b)];
            }
        }
        s
    });
    let sv = singular_values(&m)?;
    let ev = hermitian_eigenvalues(&m)?;
    Ok(BergmanMatrix {
        matrix: rows(&m),
        singular_values: sv,
        min_eigenvalue: ev.first().copied().unwrap_or(0.0),
        hermitian_defect: hermitian_defect(&m),
        genus: g,
    })
}

pub fn bergman_matrix(divisor: &ConicalDivisor, ctx: &KernelContext) -> Result<BergmanMatrix> {
    bergman_matrix_at(&ctx.periods, &divisor.chart_points(&ctx.curve)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalVerdict {
    pub canonical: bool,
    /// `sigma_g / sigma_1`.
    pub margin: f64,
    pub threshold: f64,
}

/// Rank test: the divisor is canonical iff `rank < g`.
pub fn canonical_divisor_test(b: &BergmanMatrix, threshold: f64) -> CanonicalVerdict {
    let top = b.singular_values.first().copied().unwrap_or(0.0);
    let sg = b.singular_values.get(b.genus - 1).copied().unwrap_or(0.0);
    let margin = if top > 0.0 { sg / top } else { 0.0 };
    CanonicalVerdict { canonical: margin < threshold, margin, threshold }
}

/// On a genus 2 curve a degree 2 divisor is canonical iff it is a fibre of `x`.
pub fn genus2_canonical_oracle(curve: &HyperellipticCurve, p1: &SurfacePoint, p2: &SurfacePoint) -> Result<bool> {
    if curve.genus() != 2 {
        return Err(Error::GenusNotTwo(curve.genus()));
    }
    let s = p1.x.norm().max(1.0);
    let ys = p1.y.norm().max(1.0);
    Ok((p1.x - p2.x).norm() <= 1e-8 * s && (p1.y + p2.y).norm() <= 1e-8 * ys)
}

/// `det [v_j(Q_k)]` in the frames carried by the chart points.
pub fn special_divisor_det(periods: &PeriodData, pts: &[ChartPoint]) -> Result<Complex64> {
    let g = periods.genus;
    if pts.len() != g {
        return Err(Error::InvalidDivisor(format!("need {g} points, got {}", pts.len())));
    }
    let m = DMatrix::from_fn(g, g, |k, j| periods.v_values(pts[k].x, pts[k].r)[j]);
    Ok(m.determinant())
}

/// Start of an approach path to `sigma(p1)` heading in from `toward`: the
/// point at half the distance to the nearest branch point, so the segment
/// stays in a branch-free disk where the margin shrinks like |x - x(p1)|.
pub fn approach_start(curve: &HyperellipticCurve, p1: &SurfacePoint, toward: Complex64) -> Complex64 {
    let x1 = p1.x;
    let r = curve.branch_points().iter().map(|e| (e - x1).norm()).fold(f64::INFINITY, f64::min).min(1.0) * 0.5;
    let d = toward - x1;
    let dir = if d.norm() > 0.0 { d / d.norm() } else { c64(1.0, 0.0) };
    x1 + dir * r
}

/// Margins along the straight segment from `p2` to the involution image of `p1`,
/// at `steps` equally spaced points (the last one being `sigma(p1)` itself).
pub fn approach_margins(
    ctx: &KernelContext,
    p1: &SurfacePoint,
    x2: Complex64,
    steps: usize,
) -> Result<Vec<(SurfacePoint, CanonicalVerdict)>> {
    let target = p1.involution();
    // continue backwards from the target so that the path ends on the right sheet
    let back = continue_y(&ctx.curve, &[target.x, x2], target.y)?;
    let start_y = back.end().1;
    let c1 = FrameJet::at_point(&ctx.curve, p1)?.centre_point(&ctx.curve)?;
    let mut out = Vec::with_capacity(steps);
    for i in 1..=steps {
        let t = i as f64 / steps as f64;
        let x = x2 + (target.x - x2) * t;
        let y = if i == steps { target.y } else { continue_y(&ctx.curve, &[x2, x], start_y)?.end().1 };
        let p = SurfacePoint::finite(x, y);
        let c2 = FrameJet::at_point(&ctx.curve, &p)?.centre_point(&ctx.curve)?;
        let b = bergman_matrix_at(&ctx.periods, &[c1, c2])?;
        out.push((p, canonical_divisor_test(&b, DEFAULT_RANK_THRESHOLD)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{quintic_test_curve, sextic_test_curve, BasisScheme, Tolerances};

    fn ctx(spec: crate::curve::CurveSpec) -> KernelContext {
        KernelContext::new(spec.build(Tolerances::default()).unwrap(), BasisScheme::Lexicographic).unwrap()
    }

    #[test]
    fn omega_divisor_is_canonical_and_blocks_consistent() {
        let k = ctx(sextic_test_curve());
        let a = c64(0.3, 0.2);
        let d = ConicalDivisor::from_omega(&k.curve, &[-a, c64(1.0, 0.0)], None).unwrap();
        let b = bergman_matrix(&d, &k).unwrap();
        assert!(b.hermitian_defect < 1e-12 && b.min_eigenvalue > -1e-10);
        assert!(canonical_divisor_test(&b, DEFAULT_RANK_THRESHOLD).canonical);
        let s = s_zero(&d, &k).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((s.s_ah[i][j] + b.matrix[i][j] * PI).norm() < 1e-12);
            }
        }
        assert!((s.s_aa[0][1] - s.s_aa[1][0]).norm() < 1e-8);
    }

    #[test]
    fn generic_pair_is_not_canonical_and_rank_survives_rescaling() {
        let k = ctx(quintic_test_curve());
        let pts = k.generic_points(2, 5);
        let d = ConicalDivisor::with_chart_frames(&k.curve, pts.clone()).unwrap();
        let b = bergman_matrix(&d, &k).unwrap();
        let v = canonical_divisor_test(&b, DEFAULT_RANK_THRESHOLD);
        assert!(!v.canonical);
        assert!(!genus2_canonical_oracle(&k.curve, &pts[0], &pts[1]).unwrap());
        let r = bergman_matrix(&d.rescaled(&[c64(2.0, 0.0), c64(0.0, -3.0)]), &k).unwrap();
        assert_eq!(r.numerical_rank(1e-6), b.numerical_rank(1e-6));
        assert!((r.singular_values[0] - b.singular_values[0]).abs() > 1e-6);
    }

    #[test]
    fn oracle_cases() {
        let k = ctx(quintic_test_curve());
        let p = k.generic_points(1, 1)[0];
        assert!(genus2_canonical_oracle(&k.curve, &p, &p.involution()).unwrap());
        assert!(!genus2_canonical_oracle(&k.curve, &p, &p).unwrap());
        let e = k.curve.branch_points();
        let (a, b) = (SurfacePoint::finite(e[0], c64(0.0, 0.0)), SurfacePoint::finite(e[1], c64(0.0, 0.0)));
        assert!(!genus2_canonical_oracle(&k.curve, &a, &b).unwrap());
    }

    #[test]
    fn special_divisor_det_vanishes_on_fibres() {
        let k = ctx(sextic_test_curve());
        let p = k.generic_points(2, 8);
        let cp = |s: &SurfacePoint| ChartPoint::in_x(s.x, s.y);
        let zero = special_divisor_det(&k.periods, &[cp(&p[0]), cp(&p[0].involution())]).unwrap();
        assert!(zero.norm() < 1e-8);
        let generic = special_divisor_det(&k.periods, &[cp(&p[0]), cp(&p[1])]).unwrap();
        assert!(generic.norm() > 1e-6);
        let scaled = ChartPoint { jac: c64(0.5, 0.0), r: cp(&p[1]).r * 0.5, ..cp(&p[1]) };
        let half = special_divisor_det(&k.periods, &[cp(&p[0]), scaled]).unwrap();
        assert!((half - generic * 0.5).norm() < 1e-12 * generic.norm());
    }

    #[test]
    fn margin_falls_along_approach() {
        for spec in [quintic_test_curve(), sextic_test_curve()] {
            let k = ctx(spec);
            let p = k.generic_points(24, 21);
            for pair in p.chunks(2) {
                let start = approach_start(&k.curve, &pair[0], pair[1].x);
                let m = approach_margins(&k, &pair[0], start, 10).unwrap();
                for w in m.windows(2) {
                    assert!(w[1].1.margin < w[0].1.margin, "{:?}", pair[0].x);
                }
                assert!(m.last().unwrap().1.canonical);
            }
        }
    }
}
