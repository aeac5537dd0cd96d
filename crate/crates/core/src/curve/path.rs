//! Analytic continuation of `y` along polylines and line integrals of
//! differentials `phi(x, y) dx` over them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{c64, HyperellipticCurve};
use crate::error::{Error, Result};
use crate::quad::{integrate, QuadOptions, QuadResult};

const MAX_GRID: usize = 200_000;
// fraction of the branch point distance allowed per tracking step
const STEP_FRACTION: f64 = 0.25;

/// Square root branch tracked along `s in [0, 1]`.
///
/// The grid is fine enough that the nearer of the two roots to a grid value
/// is always the analytic continuation at any point within half a step.
#[derive(Debug, Clone)]
struct Tracker {
    s: Vec<f64>,
    v: Vec<Complex64>,
}

impl Tracker {
    /// `square(s)` is the function whose root is tracked, `step(s)` the
    /// admissible parameter step, and the anchor fixes the branch at `s0`.
    fn build<G, H>(square: G, step: H, forward: bool, anchor: Complex64) -> Result<Tracker>
    where
        G: Fn(f64) -> Complex64,
        H: Fn(f64) -> Result<f64>,
    {
        let mut s = if forward { 0.0 } else { 1.0 };
        let mut prev = anchor;
        let mut ss = vec![s];
        let mut vs = vec![anchor];
        loop {
            let h = step(s)?.min(0.05);
            let next = if forward { (s + h).min(1.0) } else { (s - h).max(0.0) };
            let r = square(next).sqrt();
            let v = if (r - prev).norm() <= (r + prev).norm() { r } else { -r };
            ss.push(next);
            vs.push(v);
            prev = v;
            s = next;
            if s == 0.0 || s == 1.0 {
                break;
            }
            if ss.len() > MAX_GRID {
                return Err(Error::PathHitsBranchPoint("tracking grid exceeded".into()));
            }
        }
        if !forward {
            ss.reverse();
            vs.reverse();
        }
        Ok(Tracker { s: ss, v: vs })
    }

    fn at(&self, s: f64, square: Complex64) -> Complex64 {
        let i = self.s.partition_point(|&t| t < s);
        let j = if i == 0 {
            0
        } else if i >= self.s.len() {
            self.s.len() - 1
        } else if s - self.s[i - 1] < self.s[i] - s {
            i - 1
        } else {
            i
        };
        let r = square.sqrt();
        let g = self.v[j];
        if (r - g).norm() <= (r + g).norm() {
            r
        } else {
            -r
        }
    }

    fn end(&self) -> Complex64 {
        *self.v.last().unwrap()
    }
}

fn clearance(curve: &HyperellipticCurve, d: f64) -> Result<f64> {
    if d < curve.tolerances().separation {
        return Err(Error::PathHitsBranchPoint(format!("distance {d:e}")));
    }
    Ok(d)
}

/// Straight segment between two regular points.
#[derive(Debug, Clone)]
struct Regular {
    a: Complex64,
    d: Complex64,
    tracker: Tracker,
}

impl Regular {
    fn new(curve: &HyperellipticCurve, a: Complex64, ya: Complex64, b: Complex64) -> Result<Self> {
        let d = b - a;
        let len = d.norm().max(f64::MIN_POSITIVE);
        let tracker = Tracker::build(
            |s| curve.f(a + d * s),
            |s| {
                let dist = clearance(curve, curve.nearest_branch_point(a + d * s).1)?;
                Ok(STEP_FRACTION * dist / len)
            },
            true,
            ya,
        )?;
        Ok(Regular { a, d, tracker })
    }

    fn eval(&self, curve: &HyperellipticCurve, s: f64) -> (Complex64, Complex64, Complex64) {
        let x = self.a + self.d * s;
        (x, self.tracker.at(s, curve.f(x)), self.d)
    }
}

/// Segment leaving branch point `e_i` towards a regular point `b`,
/// parametrised by `x = e + d s^2`, `y = s w(s)` with `w^2 = d q_i(x)`.
#[derive(Debug, Clone)]
struct Leaving {
    i: usize,
    e: Complex64,
    d: Complex64,
    tracker: Tracker,
}

impl Leaving {
    fn new(curve: &HyperellipticCurve, i: usize, b: Complex64, yb: Complex64) -> Result<Self> {
        let e = curve.branch_points()[i];
        let d = b - e;
        let len = d.norm().max(f64::MIN_POSITIVE);
        let tracker = Tracker::build(
            |s| d * curve.deflated(i, e + d * (s * s)),
            |s| {
                let x = e + d * (s * s);
                let dist = clearance(curve, curve.branch_distance_except(x, Some(i)))?;
                Ok(STEP_FRACTION * dist / (len * (2.0 * s + 0.05)))
            },
            false,
            yb,
        )?;
        Ok(Leaving { i, e, d, tracker })
    }

    fn eval(&self, curve: &HyperellipticCurve, s: f64) -> (Complex64, Complex64, Complex64) {
        let x = self.e + self.d * (s * s);
        let w = self.tracker.at(s, self.d * curve.deflated(self.i, x));
        (x, w * s, self.d * (2.0 * s))
    }
}

#[derive(Debug, Clone)]
enum Segment {
    Regular(Regular),
    Leaving(Leaving),
    /// Reverse of a leaving segment; its integral is negated.
    Arriving(Leaving),
}

/// Polyline in the x-plane with the continued `y` at every vertex.
/// Vertices at branch points carry `y = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SheetPath {
    pub vertices: Vec<Complex64>,
    pub ys: Vec<Complex64>,
}

impl SheetPath {
    pub fn new(vertices: Vec<Complex64>, ys: Vec<Complex64>) -> Self {
        assert_eq!(vertices.len(), ys.len());
        SheetPath { vertices, ys }
    }

    pub fn start(&self) -> (Complex64, Complex64) {
        (self.vertices[0], self.ys[0])
    }

    pub fn end(&self) -> (Complex64, Complex64) {
        (*self.vertices.last().unwrap(), *self.ys.last().unwrap())
    }

    /// Same point and same sheet at both ends.
    pub fn is_closed(&self, tol: f64) -> bool {
        let (x0, y0) = self.start();
        let (x1, y1) = self.end();
        (x0 - x1).norm() <= tol && (y0 - y1).norm() <= tol * y0.norm().max(1.0)
    }

    pub fn reversed(&self) -> SheetPath {
        let mut v = self.vertices.clone();
        let mut y = self.ys.clone();
        v.reverse();
        y.reverse();
        SheetPath { vertices: v, ys: y }
    }

    /// Append `other`, which must start where `self` ends.
    pub fn concat(&self, other: &SheetPath) -> SheetPath {
        let mut out = self.clone();
        out.vertices.extend_from_slice(&other.vertices[1..]);
        out.ys.extend_from_slice(&other.ys[1..]);
        out
    }

    fn segments(&self, curve: &HyperellipticCurve) -> Result<Vec<Segment>> {
        let mut segs = Vec::with_capacity(self.vertices.len().saturating_sub(1));
        for k in 0..self.vertices.len().saturating_sub(1) {
            let (a, b) = (self.vertices[k], self.vertices[k + 1]);
            if (a - b).norm() == 0.0 {
                continue;
            }
            let seg = match (curve.branch_index(a), curve.branch_index(b)) {
                (None, None) => Segment::Regular(Regular::new(curve, a, self.ys[k], b)?),
                (Some(i), None) => Segment::Leaving(Leaving::new(curve, i, b, self.ys[k + 1])?),
                (None, Some(i)) => Segment::Arriving(Leaving::new(curve, i, a, self.ys[k])?),
                (Some(_), Some(_)) => {
                    return Err(Error::PathHitsBranchPoint("segment joins two branch points".into()))
                }
            };
            segs.push(seg);
        }
        Ok(segs)
    }
}

/// `sqrt(f(x) / (x - e_i))` continued along the ray from `e_i`, starting from the principal root.
pub(crate) fn w_hat(curve: &HyperellipticCurve, i: usize, x: Complex64) -> Result<Complex64> {
    let e = curve.branch_points()[i];
    let d = x - e;
    let len = d.norm().max(f64::MIN_POSITIVE);
    let tr = Tracker::build(
        |s| curve.deflated(i, e + d * s),
        |s| {
            let dist = clearance(curve, curve.branch_distance_except(e + d * s, Some(i)))?;
            Ok(STEP_FRACTION * dist / len)
        },
        true,
        curve.deflated(i, e).sqrt(),
    )?;
    Ok(tr.end())
}

/// Value of `y` at `b` continued along the straight segment from `(a, ya)`.
pub(crate) fn track(curve: &HyperellipticCurve, a: Complex64, ya: Complex64, b: Complex64) -> Result<Complex64> {
    Ok(Regular::new(curve, a, ya, b)?.tracker.end())
}

/// Continue `y` along the polyline. Passing through a branch point picks
/// the outgoing sheet that turns least in the local uniformiser; a straight
/// turn-back switches sheets.
pub fn continue_y(curve: &HyperellipticCurve, polyline: &[Complex64], y_start: Complex64) -> Result<SheetPath> {
    if polyline.is_empty() {
        return Err(Error::InvalidDivisor("empty path".into()));
    }
    let mut ys = Vec::with_capacity(polyline.len());
    let x0 = polyline[0];
    if curve.branch_index(x0).is_some() {
        ys.push(c64(0.0, 0.0));
    } else {
        curve.check_point(&super::SurfacePoint::finite(x0, y_start))?;
        ys.push(y_start);
    }
    for k in 1..polyline.len() {
        let (a, b) = (polyline[k - 1], polyline[k]);
        if curve.branch_index(b).is_some() {
            ys.push(c64(0.0, 0.0));
            continue;
        }
        let y = match curve.branch_index(a) {
            None => track(curve, a, ys[k - 1], b)?,
            Some(i) => {
                let wb = w_hat(curve, i, b)?;
                let yb = wb * (b - curve.branch_points()[i]).sqrt();
                if k == 1 {
                    yb
                } else {
                    let p = polyline[k - 2];
                    let t_in = ys[k - 2] / w_hat(curve, i, p)?;
                    let t_out = yb / wb;
                    let turn = (t_in.conj() * -1.0 * t_out).re;
                    if turn.abs() <= 1e-12 * t_in.norm() * t_out.norm() {
                        -track(curve, p, ys[k - 2], b)?
                    } else if turn > 0.0 {
                        yb
                    } else {
                        -yb
                    }
                }
            }
        };
        ys.push(y);
    }
    Ok(SheetPath { vertices: polyline.to_vec(), ys })
}

/// Integrate the differential `phi(x, y) dx` along the path. `phi` writes
/// `m` components at once.
pub fn path_integral<F>(
    curve: &HyperellipticCurve,
    path: &SheetPath,
    m: usize,
    opts: QuadOptions,
    mut phi: F,
) -> Result<QuadResult>
where
    F: FnMut(Complex64, Complex64, &mut [Complex64]),
{
    let mut total = QuadResult { values: vec![c64(0.0, 0.0); m], error: 0.0, evaluations: 0 };
    for seg in path.segments(curve)? {
        let (r, sign) = match &seg {
            Segment::Regular(r) => (
                integrate(m, 0.0, 1.0, opts, |s, out| {
                    let (x, y, dx) = r.eval(curve, s);
                    phi(x, y, out);
                    out.iter_mut().for_each(|o| *o *= dx);
                })?,
                1.0,
            ),
            Segment::Leaving(l) | Segment::Arriving(l) => (
                integrate(m, 0.0, 1.0, opts, |s, out| {
                    let (x, y, dx) = l.eval(curve, s);
                    phi(x, y, out);
                    out.iter_mut().for_each(|o| *o *= dx);
                })?,
                if matches!(seg, Segment::Leaving(_)) { 1.0 } else { -1.0 },
            ),
        };
        for i in 0..m {
            total.values[i] += r.values[i] * sign;
        }
        total.error += r.error;
        total.evaluations += r.evaluations;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{quintic_test_curve, sextic_test_curve, Tolerances};
    use std::f64::consts::PI;

    fn circle(center: Complex64, radius: f64, n: usize) -> Vec<Complex64> {
        (0..=n).map(|k| center + Complex64::from_polar(radius, 2.0 * PI * k as f64 / n as f64)).collect()
    }

    #[test]
    fn monodromy_around_one_branch_point() {
        let c = sextic_test_curve().build(Tolerances::default()).unwrap();
        let e = c.branch_points()[0];
        let loop_ = circle(e, 0.3, 16);
        let y0 = c.y_principal(loop_[0]);
        let p = continue_y(&c, &loop_, y0).unwrap();
        assert!((p.end().1 + y0).norm() < 1e-12);
    }

    #[test]
    fn monodromy_around_two_and_zero_branch_points() {
        let c = sextic_test_curve().build(Tolerances::default()).unwrap();
        let (e0, e1) = (c.branch_points()[0], c.branch_points()[1]);
        let loop2: Vec<_> = circle((e0 + e1) * 0.5, 0.5 * (e0 - e1).norm() + 0.2, 24);
        let y0 = c.y_principal(loop2[0]);
        assert!((continue_y(&c, &loop2, y0).unwrap().end().1 - y0).norm() < 1e-12);
        let loop0 = circle(c64(0.0, 0.0), 0.4, 12);
        let y0 = c.y_principal(loop0[0]);
        assert!((continue_y(&c, &loop0, y0).unwrap().end().1 - y0).norm() < 1e-12);
    }

    #[test]
    fn reversed_path_negates_integral() {
        let c = quintic_test_curve().build(Tolerances::default()).unwrap();
        let poly = [c64(0.5, 0.5), c64(0.3, -0.4), c64(-0.6, 0.2)];
        let p = continue_y(&c, &poly, c.y_principal(poly[0])).unwrap();
        let opts = QuadOptions::default();
        let phi = |x: Complex64, y: Complex64, out: &mut [Complex64]| out[0] = x / y;
        let fwd = path_integral(&c, &p, 1, opts, phi).unwrap().values[0];
        let bwd = path_integral(&c, &p.reversed(), 1, opts, phi).unwrap().values[0];
        assert!((fwd + bwd).norm() < 1e-12);
    }

    #[test]
    fn refinement_does_not_change_integral() {
        let c = sextic_test_curve().build(Tolerances::default()).unwrap();
        let e = c.branch_points()[3];
        let b = c64(0.1, 0.1);
        let yb = c.y_principal(b);
        let coarse = SheetPath::new(vec![e, b], vec![c64(0.0, 0.0), yb]);
        let mid = (e + b) * 0.5;
        let ymid = track(&c, b, yb, mid).unwrap();
        let fine = SheetPath::new(vec![e, mid, b], vec![c64(0.0, 0.0), ymid, yb]);
        let opts = QuadOptions::default();
        let phi = |_x: Complex64, y: Complex64, out: &mut [Complex64]| out[0] = y.inv();
        let a = path_integral(&c, &coarse, 1, opts, phi).unwrap();
        let b = path_integral(&c, &fine, 1, opts, phi).unwrap();
        assert!((a.values[0] - b.values[0]).norm() < 2e-12 + 2.0 * (a.error + b.error));
    }

    #[test]
    fn turn_back_switches_sheet() {
        let c = quintic_test_curve().build(Tolerances::default()).unwrap();
        let e = c.branch_points()[2];
        let a = c64(0.3, 0.2);
        let ya = c.y_principal(a);
        let p = continue_y(&c, &[a, e, a], ya).unwrap();
        assert!((p.end().1 + ya).norm() < 1e-12);
    }

    #[test]
    fn zero_differential_integrates_to_zero() {
        let c = quintic_test_curve().build(Tolerances::default()).unwrap();
        let poly = [c64(0.5, 0.5), c64(-0.5, 0.5)];
        let p = continue_y(&c, &poly, c.y_principal(poly[0])).unwrap();
        let r = path_integral(&c, &p, 1, QuadOptions::default(), |_, _, o| o[0] = c64(0.0, 0.0)).unwrap();
        assert_eq!(r.values[0], c64(0.0, 0.0));
    }
}
