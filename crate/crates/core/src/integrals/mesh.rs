//! Cell decomposition of the x-sphere for integrals over both sheets.
//!
//! Every cell is a fan `z(s, t) = apex + s (gamma(t) - apex)` over an edge
//! `gamma`, in either the `x` plane or the `u = 1/x` plane. Singular points
//! (branch points, divisor points, infinity) only ever sit at an apex, where
//! the factor `s` in the area element absorbs the `1/|z - apex|` behaviour.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::curve::c64;
use crate::error::{Error, Result};

/// A special point must be this many cell diameters away from any cell it is not the apex of.
const ETA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Plane {
    X,
    /// `x = 1 / u`.
    U,
}

impl Plane {
    pub fn to_x(self, z: Complex64) -> Complex64 {
        match self {
            Plane::X => z,
            Plane::U => z.inv(),
        }
    }

    /// `dx / dz`.
    pub fn jac(self, z: Complex64) -> Complex64 {
        match self {
            Plane::X => c64(1.0, 0.0),
            Plane::U => -(z * z).inv(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Edge {
    Line(Complex64, Complex64),
    /// Circle about the origin, angle from `t0` to `t1`.
    Arc { radius: f64, t0: f64, t1: f64 },
}

impl Edge {
    fn at(&self, t: f64) -> (Complex64, Complex64) {
        match *self {
            Edge::Line(a, b) => (a + (b - a) * t, b - a),
            Edge::Arc { radius, t0, t1 } => {
                let th = t0 + (t1 - t0) * t;
                let p = Complex64::from_polar(radius, th);
                (p, p * Complex64::i() * (t1 - t0))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub plane: Plane,
    pub apex: Complex64,
    pub edge: Edge,
    pub s: (f64, f64),
    pub t: (f64, f64),
}

impl Cell {
    /// Point and area element `|dz/ds x dz/dt|` at parameters `(s, t)` in `[0, 1]^2` of the full fan.
    pub fn map(&self, s: f64, t: f64) -> (Complex64, f64) {
        let (g, dg) = self.edge.at(t);
        let d = g - self.apex;
        let z = self.apex + d * s;
        (z, s * (d.conj() * dg).im.abs())
    }

    /// Point at local coordinates `(a, b)` in `[0, 1]^2` of this cell.
    pub fn local(&self, a: f64, b: f64) -> (Complex64, f64) {
        let s = self.s.0 + (self.s.1 - self.s.0) * a;
        let t = self.t.0 + (self.t.1 - self.t.0) * b;
        let (z, j) = self.map(s, t);
        (z, j * (self.s.1 - self.s.0) * (self.t.1 - self.t.0))
    }

    pub fn children(&self) -> [Cell; 4] {
        let sm = 0.5 * (self.s.0 + self.s.1);
        let tm = 0.5 * (self.t.0 + self.t.1);
        let mk = |s: (f64, f64), t: (f64, f64)| Cell { s, t, ..*self };
        [
            mk((self.s.0, sm), (self.t.0, tm)),
            mk((self.s.0, sm), (tm, self.t.1)),
            mk((sm, self.s.1), (self.t.0, tm)),
            mk((sm, self.s.1), (tm, self.t.1)),
        ]
    }

    /// Point and weight at `(a, b)` in `[0, 1]^2`, graded quadratically towards
    /// the apex when the cell touches it, so `sqrt` behaviour there becomes smooth.
    pub fn graded(&self, a: f64, b: f64) -> (Complex64, f64) {
        if self.s.0 == 0.0 {
            let (z, j) = self.local(a * a, b);
            (z, j * 2.0 * a)
        } else {
            self.local(a, b)
        }
    }

    /// Split along the longer parameter direction only, unless both are comparable.
    fn split(&self) -> Vec<Cell> {
        let (a, _) = self.local(0.5, 0.0);
        let (b, _) = self.local(0.5, 1.0);
        let (c, _) = self.local(0.0, 0.5);
        let (d, _) = self.local(1.0, 0.5);
        let (lt, ls) = ((b - a).norm(), (d - c).norm());
        let sm = 0.5 * (self.s.0 + self.s.1);
        let tm = 0.5 * (self.t.0 + self.t.1);
        if lt > 2.0 * ls {
            vec![Cell { t: (self.t.0, tm), ..*self }, Cell { t: (tm, self.t.1), ..*self }]
        } else if ls > 2.0 * lt {
            vec![Cell { s: (self.s.0, sm), ..*self }, Cell { s: (sm, self.s.1), ..*self }]
        } else {
            self.children().to_vec()
        }
    }

    /// Length of the edge piece and its distance from the apex, from a few samples.
    fn edge_piece(&self) -> (f64, f64) {
        let pts: Vec<Complex64> = (0..=8).map(|i| self.edge.at(self.t.0 + (self.t.1 - self.t.0) * i as f64 / 8.0).0).collect();
        let len: f64 = pts.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
        let mut dist = f64::INFINITY;
        for w in pts.windows(2) {
            let e = w[1] - w[0];
            let t = (((self.apex - w[0]) * e.conj()).re / e.norm_sqr()).clamp(0.0, 1.0);
            dist = dist.min((self.apex - (w[0] + e * t)).norm());
        }
        (len, dist)
    }

    /// Split the fan along its edge until every piece is short compared with
    /// its distance from the apex; a near-degenerate fan gets geometrically
    /// graded pieces.
    fn edge_pieces(&self) -> Vec<Cell> {
        let (len, dist) = self.edge_piece();
        if len <= 0.5 * dist || len < 1e-12 {
            return vec![*self];
        }
        let tm = 0.5 * (self.t.0 + self.t.1);
        let mut out = Cell { t: (self.t.0, tm), ..*self }.edge_pieces();
        out.extend(Cell { t: (tm, self.t.1), ..*self }.edge_pieces());
        out
    }

    fn outline(&self) -> Vec<Complex64> {
        let n = 4;
        let mut pts = Vec::with_capacity(4 * n);
        for i in 0..n {
            let u = i as f64 / n as f64;
            pts.push(self.local(u, 0.0).0);
            pts.push(self.local(1.0, u).0);
            pts.push(self.local(1.0 - u, 1.0).0);
            pts.push(self.local(0.0, 1.0 - u).0);
        }
        pts
    }

    pub fn diameter(&self) -> f64 {
        let o = self.outline();
        let mut d = 0.0f64;
        for i in 0..o.len() {
            for j in 0..i {
                d = d.max((o[i] - o[j]).norm());
            }
        }
        d
    }

    /// Rough distance from `p` to the cell (zero inside).
    pub fn distance(&self, p: Complex64) -> f64 {
        let o = self.outline();
        let n = o.len();
        let mut winding = 0.0;
        let mut d = f64::INFINITY;
        for i in 0..n {
            let (a, b) = (o[i], o[(i + 1) % n]);
            winding += ((b - p) / (a - p)).arg();
            let e = b - a;
            let t = if e.norm() > 0.0 { (((p - a) * e.conj()).re / e.norm_sqr()).clamp(0.0, 1.0) } else { 0.0 };
            d = d.min((p - (a + e * t)).norm());
        }
        if winding.abs() > PI {
            0.0
        } else {
            d
        }
    }
}

/// A triangle `[p0, p1, p2]`; when `arc` is set the edge `p1 -> p2` is the outer circle.
#[derive(Debug, Clone, Copy)]
struct Tri {
    v: [Complex64; 3],
    arc: bool,
}

fn bary(t: &Tri, p: Complex64) -> [f64; 3] {
    let [a, b, c] = t.v;
    let cross = |u: Complex64, w: Complex64| (u.conj() * w).im;
    let area = cross(b - a, c - a);
    [cross(b - p, c - p) / area, cross(c - p, a - p) / area, cross(a - p, b - p) / area]
}

fn is_special(p: Complex64, specials: &[Complex64]) -> bool {
    specials.iter().any(|s| (s - p).norm() < 1e-12 * s.norm().max(1.0))
}

/// The fan mesh before any admissibility refinement.
fn base_mesh(specials: &[Complex64], radius: f64, arcs: usize) -> Result<Vec<Cell>> {
    let offset = 0.1234;
    let bnd: Vec<Complex64> =
        (0..arcs).map(|m| Complex64::from_polar(radius, offset + 2.0 * PI * m as f64 / arcs as f64)).collect();
    // fan centre as far from the special points as a coarse grid allows
    let mut centre = c64(0.0, 0.0);
    let mut best = -1.0;
    for i in 0..=20 {
        for j in 0..=20 {
            let z = c64(-0.5 + 0.05 * i as f64 + 0.0013, -0.5 + 0.05 * j as f64 + 0.0021) * radius;
            let d = specials.iter().map(|s| (s - z).norm()).fold(f64::INFINITY, f64::min) - 0.01 * z.norm();
            if d > best {
                best = d;
                centre = z;
            }
        }
    }
    let mut tris: Vec<Tri> = (0..arcs).map(|m| Tri { v: [centre, bnd[m], bnd[(m + 1) % arcs]], arc: true }).collect();

    for &p in specials {
        let (idx, b) = tris
            .iter()
            .enumerate()
            .map(|(i, t)| (i, bary(t, p)))
            .max_by(|x, y| {
                let mx = x.1.iter().copied().fold(f64::INFINITY, f64::min);
                let my = y.1.iter().copied().fold(f64::INFINITY, f64::min);
                mx.total_cmp(&my)
            })
            .ok_or(Error::NumericallyDegenerate)?;
        let t = tris[idx];
        let on_edge = b.iter().position(|&w| w.abs() < 1e-9);
        match on_edge {
            None => {
                tris.swap_remove(idx);
                let [p0, p1, p2] = t.v;
                tris.push(Tri { v: [p, p1, p2], arc: t.arc });
                tris.push(Tri { v: [p, p2, p0], arc: false });
                tris.push(Tri { v: [p, p0, p1], arc: false });
            }
            Some(opp) => {
                let (a, c) = (t.v[(opp + 1) % 3], t.v[(opp + 2) % 3]);
                let mut next = Vec::with_capacity(tris.len() + 2);
                for tr in tris.drain(..) {
                    let has = |q: Complex64| tr.v.iter().any(|&w| (w - q).norm() < 1e-14 * radius);
                    if has(a) && has(c) && tr.arc {
                        // split edge runs from the apex to one arc end
                        let [p0, p1, p2] = tr.v;
                        let p1_on_edge = (a - p1).norm() < 1e-14 * radius || (c - p1).norm() < 1e-14 * radius;
                        let far = if p1_on_edge { p2 } else { p1 };
                        next.push(Tri { v: [p, p1, p2], arc: true });
                        next.push(Tri { v: [p, far, p0], arc: false });
                    } else if has(a) && has(c) {
                        let w = *tr.v.iter().find(|&&w| (w - a).norm() > 1e-14 * radius && (w - c).norm() > 1e-14 * radius).unwrap();
                        next.push(Tri { v: [w, a, p], arc: false });
                        next.push(Tri { v: [w, p, c], arc: false });
                    } else {
                        next.push(tr);
                    }
                }
                tris = next;
            }
        }
    }

    let mut cells = Vec::new();
    let push_tri = |t: &Tri, cells: &mut Vec<Cell>| {
        let sp: Vec<usize> = (0..3).filter(|&i| is_special(t.v[i], specials)).collect();
        let apex_i = if t.arc { 0 } else { sp.first().copied().unwrap_or(0) };
        let (a, b, c) = (t.v[apex_i], t.v[(apex_i + 1) % 3], t.v[(apex_i + 2) % 3]);
        let edge = if t.arc {
            let t0 = b.arg();
            let mut t1 = c.arg();
            if t1 < t0 {
                t1 += 2.0 * PI;
            }
            Edge::Arc { radius, t0, t1 }
        } else {
            Edge::Line(b, c)
        };
        cells.extend(Cell { plane: Plane::X, apex: a, edge, s: (0.0, 1.0), t: (0.0, 1.0) }.edge_pieces());
    };
    for t in &tris {
        let n_special = (0..3).filter(|&i| is_special(t.v[i], specials)).count();
        if n_special >= 2 && !t.arc {
            let [a, b, c] = t.v;
            let (ab, bc, ca) = ((a + b) * 0.5, (b + c) * 0.5, (c + a) * 0.5);
            for sub in [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]] {
                push_tri(&Tri { v: sub, arc: false }, &mut cells);
            }
        } else {
            push_tri(t, &mut cells);
        }
    }
    // outside |x| = radius, as the disc |u| < 1/radius
    for m in 0..arcs {
        let t0 = -(offset + 2.0 * PI * (m + 1) as f64 / arcs as f64);
        let t1 = t0 + 2.0 * PI / arcs as f64;
        cells.push(Cell { plane: Plane::U, apex: c64(0.0, 0.0), edge: Edge::Arc { radius: radius.recip(), t0, t1 }, s: (0.0, 1.0), t: (0.0, 1.0) });
    }
    Ok(cells)
}

/// Refine until every special point is either the apex of a cell or
/// at least `eta` cell diameters away.
fn admissible(cells: Vec<Cell>, specials: &[Complex64], eta: f64, max_cells: usize) -> Result<Vec<Cell>> {
    let mut out = Vec::new();
    let mut work = cells;
    while let Some(c) = work.pop() {
        let diam = c.diameter();
        let bad = specials.iter().any(|&s| {
            let sz = match c.plane {
                Plane::X => s,
                Plane::U => s.inv(),
            };
            let is_apex = (sz - c.apex).norm() < 1e-12 * sz.norm().max(1.0);
            !is_apex && c.distance(sz) < eta * diam
        });
        if bad {
            if diam < 1e-9 {
                return Err(Error::NumericallyDegenerate);
            }
            work.extend(c.split());
        } else {
            out.push(c);
        }
        if out.len() + work.len() > max_cells {
            return Err(Error::BudgetExhausted(format!("more than {max_cells} cells")));
        }
    }
    // deterministic order independent of the work stack
    out.sort_by(|a, b| {
        let ka = (a.plane == Plane::U, a.apex.re, a.apex.im, a.s.0, a.t.0, edge_key(&a.edge));
        let kb = (b.plane == Plane::U, b.apex.re, b.apex.im, b.s.0, b.t.0, edge_key(&b.edge));
        ka.partial_cmp(&kb).unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(out)
}

fn edge_key(e: &Edge) -> (f64, f64) {
    match *e {
        Edge::Line(a, b) => (a.re + 2.0 * b.re, a.im + 2.0 * b.im),
        Edge::Arc { t0, t1, .. } => (t0, t1),
    }
}

/// Admissible base cells and their uniform refinements.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mesh {
    pub radius: f64,
    pub base: Vec<Cell>,
    /// Leaf cells with the index of the base cell containing them.
    pub cells: Vec<(usize, Cell)>,
}

/// Fan mesh of the x-sphere: admissible base cells refined `levels` more times uniformly.
pub fn build_mesh(specials: &[Complex64], levels: usize, max_cells: usize) -> Result<Mesh> {
    let rmax = specials.iter().map(|s| s.norm()).fold(0.0, f64::max);
    let radius = 2.0 * rmax.max(1.0);
    let base = admissible(base_mesh(specials, radius, 16)?, specials, ETA, max_cells)?;
    let mut cells: Vec<(usize, Cell)> = base.iter().copied().enumerate().collect();
    for _ in 0..levels {
        if cells.len() * 4 > max_cells {
            return Err(Error::BudgetExhausted(format!("more than {max_cells} cells")));
        }
        cells = cells.iter().flat_map(|&(i, c)| c.children().map(|ch| (i, ch))).collect();
    }
    Ok(Mesh { radius, base, cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::gauss_legendre;

    fn area(mesh: &Mesh, f: impl Fn(Plane, Complex64) -> f64) -> f64 {
        let (x, w) = gauss_legendre(8);
        let mut s = 0.0;
        for (_, c) in &mesh.cells {
            for i in 0..8 {
                for j in 0..8 {
                    let (z, jac) = c.graded(x[i], x[j]);
                    s += w[i] * w[j] * jac * f(c.plane, z);
                }
            }
        }
        s
    }

    #[test]
    fn disc_area_and_gaussian() {
        let sp = [c64(0.0, 0.0), c64(1.0, 0.0), c64(-1.0, 0.0), c64(0.0, 1.0), c64(0.0, -1.0)];
        let cells = build_mesh(&sp, 1, 100_000).unwrap();
        let inner = area(&cells, |p, _| if p == Plane::X { 1.0 } else { 0.0 });
        assert!((inner - PI * 4.0).abs() < 1e-6, "{inner}");
        // a Gaussian over the whole plane, with the exterior in u
        let g = area(&cells, |p, z| {
            let x = p.to_x(z);
            let j = p.jac(z).norm_sqr();
            (-x.norm_sqr()).exp() * j
        });
        assert!((g - PI).abs() < 1e-6, "{g}");
    }

    #[test]
    fn inverse_distance_singularities_integrate() {
        let sp = [c64(0.3, 0.1), c64(-0.5, 0.4)];
        let cells = build_mesh(&sp, 1, 100_000).unwrap();
        // 1/|x - a| over |x - a| < rho is 2 pi rho; use an exterior-decaying weight
        let f = |p: Plane, z: Complex64| {
            let x = p.to_x(z);
            let j = p.jac(z).norm_sqr();
            j / ((x - sp[0]).norm() * (1.0 + x.norm_sqr()).powf(1.5))
        };
        let coarse = area(&build_mesh(&sp, 0, 100_000).unwrap(), f);
        let fine = area(&cells, f);
        assert!((coarse - fine).abs() < 1e-6 * fine, "{coarse} {fine}");
    }
}
