//! Hyperelliptic curves `y^2 = f(x)`, points on them, and their period data.

mod homology;
mod path;
mod periods;

pub use homology::{build_homology_basis, BasisScheme, HomologyBasis};
pub use path::{continue_y, path_integral, SheetPath};
pub(crate) use path::track;
pub use periods::{abelian_integral, period_matrix, period_matrix_with, quad_options, PeriodData, PeriodExport};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Numerical tolerances shared by the curve pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Target accuracy of period integrals.
    pub period: f64,
    /// `|f(e)|` threshold for accepted branch points.
    pub root: f64,
    /// Minimum pairwise distance between branch points.
    pub separation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { period: 1e-10, root: 1e-12, separation: 1e-8 }
    }
}

impl Tolerances {
    pub fn scaled(self, s: f64) -> Self {
        Tolerances { period: self.period * s, root: self.root * s, separation: self.separation * s }
    }
}

/// The curve `y^2 = f(x)` with `deg f` in `{2g+1, 2g+2}` and simple roots.
#[derive(Debug, Clone)]
pub struct HyperellipticCurve {
    coeffs: Vec<Complex64>,
    branch_points: Vec<Complex64>,
    // f(x) / (x - e_i), one per finite branch point
    deflated: Vec<Vec<Complex64>>,
    genus: usize,
    tol: Tolerances,
}

/// Chart in which a surface point is described.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChartTag {
    Finite,
    /// Local coordinate `s = 1/x`.
    Infinity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub x: Complex64,
    pub y: Complex64,
    pub chart: ChartTag,
}

impl SurfacePoint {
    pub fn finite(x: Complex64, y: Complex64) -> Self {
        SurfacePoint { x, y, chart: ChartTag::Finite }
    }

    /// Image under the hyperelliptic involution.
    pub fn involution(&self) -> Self {
        SurfacePoint { x: self.x, y: -self.y, chart: self.chart }
    }
}

pub(crate) fn horner(coeffs: &[Complex64], x: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(c64(0.0, 0.0), |acc, &c| acc * x + c)
}

pub(crate) fn derivative_coeffs(coeffs: &[Complex64]) -> Vec<Complex64> {
    coeffs.iter().enumerate().skip(1).map(|(k, &c)| c * k as f64).collect()
}

/// Divide by `(x - r)`, dropping the remainder.
pub(crate) fn deflate(coeffs: &[Complex64], r: Complex64) -> Vec<Complex64> {
    let d = coeffs.len() - 1;
    let mut q = vec![c64(0.0, 0.0); d];
    let mut acc = c64(0.0, 0.0);
    for i in (1..=d).rev() {
        acc = acc * r + coeffs[i];
        q[i - 1] = acc;
    }
    q
}

fn companion_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let d = coeffs.len() - 1;
    let lead = coeffs[d];
    let m = faer::Mat::<Complex64>::from_fn(d, d, |i, j| {
        if j == d - 1 {
            -coeffs[i] / lead
        } else if i == j + 1 {
            c64(1.0, 0.0)
        } else {
            c64(0.0, 0.0)
        }
    });
    m.eigenvalues().map_err(|_| Error::RootFindingFailed)
}

/// Roots of a polynomial given lowest power first; trailing zero coefficients are dropped.
pub(crate) fn polynomial_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut c = coeffs.to_vec();
    while c.len() > 1 && c.last().unwrap().norm() <= 1e-14 * scale {
        c.pop();
    }
    if c.len() < 2 {
        return Ok(vec![]);
    }
    let dc = derivative_coeffs(&c);
    Ok(companion_roots(&c)?.into_iter().map(|r| snap(newton_polish(&c, &dc, r))).collect())
}

fn newton_polish(coeffs: &[Complex64], dcoeffs: &[Complex64], mut r: Complex64) -> Complex64 {
    for _ in 0..60 {
        let fv = horner(coeffs, r);
        let dv = horner(dcoeffs, r);
        if dv.norm() == 0.0 {
            break;
        }
        let step = fv / dv;
        r -= step;
        if step.norm() <= 1e-15 * r.norm().max(1.0) {
            break;
        }
    }
    r
}

fn snap(z: Complex64) -> Complex64 {
    let s = z.norm().max(1.0) * 1e-14;
    c64(if z.re.abs() < s { 0.0 } else { z.re }, if z.im.abs() < s { 0.0 } else { z.im })
}

/// Lexicographic (re, im) order with a small tie tolerance on the real part.
pub(crate) fn lex_cmp(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    if (a.re - b.re).abs() > 1e-9 {
        a.re.partial_cmp(&b.re).unwrap()
    } else {
        a.im.partial_cmp(&b.im).unwrap()
    }
}

/// Build a curve from the coefficients of `f`, constant term first.
pub fn validate_curve(coefficients: &[Complex64], tol: Tolerances) -> Result<HyperellipticCurve> {
    let mut coeffs = coefficients.to_vec();
    while coeffs.last().is_some_and(|c| c.norm() == 0.0) {
        coeffs.pop();
    }
    let degree = coeffs.len().saturating_sub(1);
    if degree < 5 {
        return Err(Error::DegreeTooLow(degree));
    }
    let dcoeffs = derivative_coeffs(&coeffs);
    let raw = companion_roots(&coeffs)?;
    let mut roots = Vec::with_capacity(degree);
    for r0 in raw {
        let r = snap(newton_polish(&coeffs, &dcoeffs, r0));
        // |f'(r)| small against its own term magnitudes flags a multiple root
        let scale: f64 = dcoeffs.iter().enumerate().map(|(k, c)| c.norm() * r.norm().powi(k as i32)).sum();
        if horner(&dcoeffs, r).norm() <= 1e-8 * scale {
            return Err(Error::RepeatedRoot(format!("{r}")));
        }
        let fscale: f64 = coeffs.iter().enumerate().map(|(k, c)| c.norm() * r.norm().powi(k as i32)).sum();
        if horner(&coeffs, r).norm() > tol.root * fscale.max(1.0) {
            return Err(Error::RootFindingFailed);
        }
        roots.push(r);
    }
    for i in 0..roots.len() {
        for j in 0..i {
            if (roots[i] - roots[j]).norm() < tol.separation {
                return Err(Error::RepeatedRoot(format!("{}", roots[i])));
            }
        }
    }
    roots.sort_by(lex_cmp);
    let deflated = roots.iter().map(|&e| deflate(&coeffs, e)).collect();
    Ok(HyperellipticCurve { coeffs, branch_points: roots, deflated, genus: (degree - 1) / 2, tol })
}

impl HyperellipticCurve {
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    /// Finite branch points in lexicographic order.
    pub fn branch_points(&self) -> &[Complex64] {
        &self.branch_points
    }

    /// Odd degree curves branch over infinity.
    pub fn branched_at_infinity(&self) -> bool {
        self.degree() % 2 == 1
    }

    /// Coefficient `lambda_i` of `x^i` in `f`, zero beyond the degree.
    pub fn lambda(&self, i: usize) -> Complex64 {
        self.coeffs.get(i).copied().unwrap_or(c64(0.0, 0.0))
    }

    pub fn f(&self, x: Complex64) -> Complex64 {
        horner(&self.coeffs, x)
    }

    pub fn df(&self, x: Complex64) -> Complex64 {
        let mut acc = c64(0.0, 0.0);
        for k in (1..self.coeffs.len()).rev() {
            acc = acc * x + self.coeffs[k] * k as f64;
        }
        acc
    }

    pub fn d2f(&self, x: Complex64) -> Complex64 {
        let mut acc = c64(0.0, 0.0);
        for k in (2..self.coeffs.len()).rev() {
            acc = acc * x + self.coeffs[k] * (k * (k - 1)) as f64;
        }
        acc
    }

    /// `f(x) / (x - e_i)` evaluated without cancellation near `e_i`.
    pub fn deflated(&self, i: usize, x: Complex64) -> Complex64 {
        horner(&self.deflated[i], x)
    }

    pub(crate) fn deflated_coeffs(&self, i: usize) -> &[Complex64] {
        &self.deflated[i]
    }

    /// Index and distance of the nearest finite branch point.
    pub fn nearest_branch_point(&self, x: Complex64) -> (usize, f64) {
        self.branch_points
            .iter()
            .enumerate()
            .map(|(i, e)| (i, (x - e).norm()))
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
    }

    /// Nearest branch point distance, ignoring index `skip`.
    pub(crate) fn branch_distance_except(&self, x: Complex64, skip: Option<usize>) -> f64 {
        self.branch_points
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != skip)
            .map(|(_, e)| (x - e).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Branch point index if `x` lies within the root tolerance of one.
    pub fn branch_index(&self, x: Complex64) -> Option<usize> {
        let (i, d) = self.nearest_branch_point(x);
        (d <= self.tol.root * x.norm().max(1.0)).then_some(i)
    }

    /// A `y` with `y^2 = f(x)`; the principal root.
    pub fn y_principal(&self, x: Complex64) -> Complex64 {
        self.f(x).sqrt()
    }

    /// Point over `x` on the sheet whose `y` is nearest to `hint`.
    pub fn point_near(&self, x: Complex64, hint: Complex64) -> SurfacePoint {
        let y = self.y_principal(x);
        SurfacePoint::finite(x, if (y - hint).norm() <= (y + hint).norm() { y } else { -y })
    }

    pub fn check_point(&self, p: &SurfacePoint) -> Result<()> {
        if p.chart == ChartTag::Infinity {
            return Ok(());
        }
        let fx = self.f(p.x);
        let scale: f64 = self.coeffs.iter().enumerate().map(|(k, c)| c.norm() * p.x.norm().powi(k as i32)).sum();
        if (p.y * p.y - fx).norm() > 1e-8 * scale.max(1.0) {
            return Err(Error::NotOnCurve { x: format!("{}", p.x), y: format!("{}", p.y) });
        }
        Ok(())
    }

    /// Smallest pairwise branch point distance.
    pub fn min_separation(&self) -> f64 {
        let e = &self.branch_points;
        let mut m = f64::INFINITY;
        for i in 0..e.len() {
            for j in 0..i {
                m = m.min((e[i] - e[j]).norm());
            }
        }
        m
    }
}

/// Curve input as read from JSON: `{"f": [[re, im], ...]}`, constant term first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub f: Vec<[f64; 2]>,
}

impl CurveSpec {
    pub fn coefficients(&self) -> Vec<Complex64> {
        self.f.iter().map(|c| c64(c[0], c[1])).collect()
    }

    pub fn from_real(c: &[f64]) -> Self {
        CurveSpec { f: c.iter().map(|&r| [r, 0.0]).collect() }
    }

    pub fn build(&self, tol: Tolerances) -> Result<HyperellipticCurve> {
        validate_curve(&self.coefficients(), tol)
    }
}

/// `y^2 = x^5 - x`.
pub fn quintic_test_curve() -> CurveSpec {
    CurveSpec::from_real(&[0.0, -1.0, 0.0, 0.0, 0.0, 1.0])
}

/// `y^2 = x^6 - 1`.
pub fn sextic_test_curve() -> CurveSpec {
    CurveSpec::from_real(&[-1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0])
}
