//! `H_k` at every quadrature node on both sheets.
//!
//! Base cell centres are joined by a spanning tree of straight segments that
//! keep clear of the special points. Inside each leaf cell the nodes are
//! reached by a comb: one segment from the base centre to the outer corner
//! node, a run along the outer row, then inward along each fan ray. The
//! second sheet is reached from the root through a branch point.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::quadrature::SurfaceQuadrature;
use crate::curve::{c64, continue_y, path_integral, track, SheetPath};
use crate::error::{Error, Result};
use crate::harmonic::{combine, HarmonicPair};
use crate::kernels::{ChartPoint, KernelContext};
use crate::quad::QuadOptions;

const FIELD_QUAD: QuadOptions = QuadOptions { abs_tol: 1e-11, rel_tol: 1e-10, max_intervals: 4000 };

/// Tree edges are accepted only with this clearance, relative to their length.
const CLEARANCE: f64 = 0.25;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HarmonicField {
    /// `values[k][node] = [H_k(x, y), H_k(x, -y)]`.
    pub values: Vec<Vec<[Complex64; 2]>>,
    /// The `y` of sheet `0` at each node.
    pub ys: Vec<Complex64>,
    /// Summed quadrature error estimate of all segment integrals.
    pub error: f64,
}

fn segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let e = b - a;
    let t = if e.norm_sqr() > 0.0 { (((p - a) * e.conj()).re / e.norm_sqr()).clamp(0.0, 1.0) } else { 0.0 };
    (p - (a + e * t)).norm()
}

fn clear(specials: &[Complex64], a: Complex64, b: Complex64) -> bool {
    let len = (b - a).norm();
    specials.iter().all(|&s| segment_distance(s, a, b) >= CLEARANCE * len)
}

/// Increments of every `H_k` on both sheets along the straight segment `a -> b`
/// starting on the sheet of `ya`; returns the end `y` as well.
fn segment(
    ctx: &KernelContext,
    pairs: &[HarmonicPair],
    a: Complex64,
    ya: Complex64,
    b: Complex64,
) -> Result<(Complex64, Vec<[Complex64; 2]>, f64)> {
    let yb = track(&ctx.curve, a, ya, b)?;
    let path = SheetPath::new(vec![a, b], vec![ya, yb]);
    let (inc, err) = integrate_pairs(ctx, pairs, &path)?;
    Ok((yb, inc, err))
}

fn integrate_pairs(ctx: &KernelContext, pairs: &[HarmonicPair], path: &SheetPath) -> Result<(Vec<[Complex64; 2]>, f64)> {
    let m = pairs.len();
    let mut bad = false;
    let r = path_integral(&ctx.curve, path, 4 * m, FIELD_QUAD, |x, y, out| {
        for (k, p) in pairs.iter().enumerate() {
            for (s, yy) in [y, -y].into_iter().enumerate() {
                match p.values(ctx, &ChartPoint::in_x(x, yy)) {
                    Ok([om, si]) => {
                        out[4 * k + 2 * s] = om;
                        out[4 * k + 2 * s + 1] = si;
                    }
                    Err(_) => {
                        bad = true;
                        out[4 * k + 2 * s] = c64(f64::NAN, f64::NAN);
                        out[4 * k + 2 * s + 1] = c64(f64::NAN, f64::NAN);
                    }
                }
            }
        }
    })?;
    if bad || r.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::PathThroughSingularity);
    }
    let inc = (0..m)
        .map(|k| {
            let v = &r.values[4 * k..4 * k + 4];
            [combine(v[0], v[1]), combine(v[2], v[3])]
        })
        .collect();
    Ok((inc, r.error))
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Spanning tree over `points` from the shortest clear segments, as a
/// breadth-first list of `(parent, child)` edges from point `0`.
fn spanning_tree(points: &[Complex64], specials: &[Complex64]) -> Result<Vec<(usize, usize)>> {
    let n = points.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if clear(specials, points[i], points[j]) {
                edges.push(((points[i] - points[j]).norm(), i, j));
            }
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut parent: Vec<usize> = (0..n).collect();
    let mut adj = vec![Vec::new(); n];
    let mut joined = 0;
    for (_, i, j) in edges {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj {
            parent[ri] = rj;
            adj[i].push(j);
            adj[j].push(i);
            joined += 1;
        }
    }
    if joined + 1 != n {
        return Err(Error::NumericallyDegenerate);
    }
    let mut order = Vec::with_capacity(n - 1);
    let mut seen = vec![false; n];
    let mut queue = std::collections::VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(i) = queue.pop_front() {
        let mut next = adj[i].clone();
        next.sort_unstable();
        for j in next {
            if !seen[j] {
                seen[j] = true;
                order.push((i, j));
                queue.push_back(j);
            }
        }
    }
    Ok(order)
}

/// `H_k` for every pair at every node of `quad`, with a common base point.
pub fn harmonic_field(ctx: &KernelContext, pairs: &[HarmonicPair], quad: &SurfaceQuadrature) -> Result<HarmonicField> {
    let specials = &quad.specials;
    for p in pairs {
        if specials.iter().all(|s| (s - p.pole.x).norm() > 1e-8 * s.norm().max(1.0)) {
            return Err(Error::InvalidDivisor("pole is not a refinement point of the quadrature".into()));
        }
    }
    let m = pairs.len();
    let anchors: Vec<Complex64> = quad.mesh.base.iter().map(|c| c.plane.to_x(c.local(0.5, 0.5).0)).collect();
    let tree = spanning_tree(&anchors, specials)?;

    let mut ys = vec![c64(0.0, 0.0); anchors.len()];
    ys[0] = ctx.curve.y_principal(anchors[0]);
    for &(p, c) in &tree {
        ys[c] = track(&ctx.curve, anchors[p], ys[p], anchors[c])?;
    }
    let incs: Vec<(Vec<[Complex64; 2]>, f64)> = tree
        .par_iter()
        .map(|&(p, c)| integrate_pairs(ctx, pairs, &SheetPath::new(vec![anchors[p], anchors[c]], vec![ys[p], ys[c]])))
        .collect::<Result<_>>()?;

    // sheet switch at the root through the nearest clear branch point
    let x0 = anchors[0];
    let e = ctx
        .curve
        .branch_points()
        .iter()
        .copied()
        .filter(|&e| {
            let others: Vec<Complex64> = specials.iter().copied().filter(|s| (s - e).norm() > 1e-12).collect();
            clear(&others, x0, e)
        })
        .min_by(|a, b| (a - x0).norm().total_cmp(&(b - x0).norm()))
        .ok_or(Error::NumericallyDegenerate)?;
    let turn = continue_y(&ctx.curve, &[x0, e, x0], ys[0])?;
    let (switch, mut error) = integrate_pairs(ctx, pairs, &SheetPath::new(turn.vertices.clone(), turn.ys.clone()))?;
    let mut h_anchor = vec![vec![[c64(0.0, 0.0); 2]; anchors.len()]; m];
    for k in 0..m {
        // the turn path ends on sheet 1 and its sheet-0 component is what we need
        h_anchor[k][0][1] = switch[k][0];
    }
    for (&(p, c), (inc, err)) in tree.iter().zip(&incs) {
        error += err;
        for k in 0..m {
            h_anchor[k][c] = [h_anchor[k][p][0] + inc[k][0], h_anchor[k][p][1] + inc[k][1]];
        }
    }

    let q = quad.order();
    let per = q * q;
    let cells: Vec<(Vec<[Complex64; 2]>, Vec<Complex64>, f64)> = quad
        .mesh
        .cells
        .par_iter()
        .enumerate()
        .map(|(ci, &(b, _))| -> Result<_> {
            let xs = &quad.nodes[ci * per..(ci + 1) * per];
            let idx = |i: usize, j: usize| i * q + j;
            let mut h = vec![[c64(0.0, 0.0); 2]; per * m];
            let mut y = vec![c64(0.0, 0.0); per];
            let mut err = 0.0;
            let mut step = |from: Option<usize>, to: usize, h: &mut Vec<[Complex64; 2]>, y: &mut Vec<Complex64>| -> Result<()> {
                let (xa, ya) = match from {
                    Some(f) => (xs[f].x, y[f]),
                    None => (anchors[b], ys[b]),
                };
                let (yb, inc, e) = segment(ctx, pairs, xa, ya, xs[to].x)?;
                y[to] = yb;
                err += e;
                for k in 0..m {
                    let base = match from {
                        Some(f) => h[k * per + f],
                        None => h_anchor[k][b],
                    };
                    h[k * per + to] = [base[0] + inc[k][0], base[1] + inc[k][1]];
                }
                Ok(())
            };
            step(None, idx(q - 1, 0), &mut h, &mut y)?;
            for j in 1..q {
                step(Some(idx(q - 1, j - 1)), idx(q - 1, j), &mut h, &mut y)?;
            }
            for j in 0..q {
                for i in (0..q - 1).rev() {
                    step(Some(idx(i + 1, j)), idx(i, j), &mut h, &mut y)?;
                }
            }
            Ok((h, y, err))
        })
        .collect::<Result<_>>()?;

    let mut values = vec![Vec::with_capacity(quad.len()); m];
    let mut node_ys = Vec::with_capacity(quad.len());
    for (h, y, e) in cells {
        error += e;
        for k in 0..m {
            values[k].extend_from_slice(&h[k * per..(k + 1) * per]);
        }
        node_ys.extend(y);
    }
    Ok(HarmonicField { values, ys: node_ys, error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{sextic_test_curve, BasisScheme, Tolerances};
    use crate::harmonic::build_pair;
    use crate::integrals::{build_quadrature, QuadratureBudget};
    use crate::smatrix::ConicalDivisor;

    #[test]
    fn tree_values_match_direct_paths() {
        let curve = sextic_test_curve().build(Tolerances::default()).unwrap();
        let ctx = KernelContext::new(curve.clone(), BasisScheme::Lexicographic).unwrap();
        let omega = [c64(-0.3, -0.2), c64(1.0, 0.0)];
        let div = ConicalDivisor::from_omega(&curve, &omega, None).unwrap();
        let pairs: Vec<HarmonicPair> = (0..2).map(|k| build_pair(k, &div, &ctx).unwrap()).collect();
        let quad = build_quadrature(&curve, &omega, QuadratureBudget { level: 0, order: 4, max_cells: 100_000 }).unwrap();
        let field = harmonic_field(&ctx, &pairs, &quad).unwrap();
        let x0 = quad.mesh.base[0].plane.to_x(quad.mesh.base[0].local(0.5, 0.5).0);
        let y0 = curve.y_principal(x0);
        // compare against single paths from the root through a detour
        for &n in &[3usize, 101, 517, quad.len() - 5] {
            let node = quad.nodes[n];
            for sheet in 0..2 {
                let y_end = field.ys[n] * if sheet == 0 { 1.0 } else { -1.0 };
                let mid = c64(2.7, 2.9);
                let path = continue_y(&curve, &[x0, mid, node.x], y0).unwrap();
                let path = if (path.end().1 - y_end).norm() < (path.end().1 + y_end).norm() {
                    path
                } else {
                    // go around a branch point first to land on the other sheet
                    let e = curve.branch_points()[0];
                    let r = 0.3;
                    let mut loop_pts = vec![x0];
                    let start = e + (x0 - e) / (x0 - e).norm() * r;
                    loop_pts.push(start);
                    for s in 1..=16 {
                        loop_pts.push(e + (start - e) * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * s as f64 / 16.0));
                    }
                    loop_pts.extend([x0, mid, node.x]);
                    continue_y(&curve, &loop_pts, y0).unwrap()
                };
                assert!((path.end().1 - y_end).norm() < 1e-8 * y_end.norm().max(1.0));
                for (k, p) in pairs.iter().enumerate() {
                    let direct = p.h_along(&ctx, &path).unwrap();
                    let tree = field.values[k][n][sheet];
                    assert!((direct - tree).norm() < 1e-7 * tree.norm().max(1.0), "node {n} sheet {sheet} k {k}: {direct} {tree}");
                }
            }
        }
    }
}
