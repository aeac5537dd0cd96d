//! The discrete `d/dz` from continuous piecewise-linear vertex functions to
//! piecewise-constant cell values, on an `n x n` grid in every square cut
//! along the `SW-NE` diagonal.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::surface::{SquareTiledSurface, UnionFind};
use crate::error::{Error, Result};

/// Sparse matrix as `(row, col, value)` triplets; repeated positions add.
pub type Triplets<T> = Vec<(usize, usize, T)>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscreteDbar {
    pub n: usize,
    pub squares: usize,
    pub vertices: usize,
    /// Two triangles per grid square, indexed `((s * n + j) * n + i) * 2 + t`.
    pub cells: usize,
    /// `d/dz` of the hat functions, rows are cells.
    pub entries: Triplets<Complex64>,
    /// `L^2` Gram matrix of the hat functions.
    pub vertex_gram: Triplets<f64>,
    /// Cell areas; the cell Gram matrix is diagonal.
    pub cell_area: Vec<f64>,
    /// Square and local centroid of every cell, in square units.
    pub cell_site: Vec<(usize, [f64; 2])>,
    /// Global vertex of local grid point `(s, i, j)`, indexed `(s * (n+1) + j) * (n+1) + i`.
    pub local_to_global: Vec<usize>,
}

pub fn assemble_d(surface: &SquareTiledSurface, n: usize) -> Result<DiscreteDbar> {
    if n < 4 {
        return Err(Error::ResolutionTooLow(n));
    }
    let squares = surface.squares();
    let m = n + 1;
    let local = |s: usize, i: usize, j: usize| (s * m + j) * m + i;
    let mut uf = UnionFind::new(squares * m * m);
    for s in 0..squares {
        for k in 0..m {
            uf.union(local(s, n, k), local(surface.h[s], 0, k));
            uf.union(local(s, k, n), local(surface.v[s], k, 0));
        }
    }
    let mut root_index = vec![usize::MAX; squares * m * m];
    let mut local_to_global = vec![0; squares * m * m];
    let mut vertices = 0;
    for (l, g) in local_to_global.iter_mut().enumerate() {
        let r = uf.find(l);
        if root_index[r] == usize::MAX {
            root_index[r] = vertices;
            vertices += 1;
        }
        *g = root_index[r];
    }

    let h = 1.0 / n as f64;
    let area = 0.5 * h * h;
    let mut entries = Vec::new();
    let mut vertex_gram = Vec::new();
    let mut cell_site = Vec::new();
    for s in 0..squares {
        for j in 0..n {
            for i in 0..n {
                for tri in [[(0, 0), (1, 0), (1, 1)], [(0, 0), (1, 1), (0, 1)]] {
                    let c = cell_site.len();
                    let p: Vec<[f64; 2]> = tri.iter().map(|&(a, b)| [(i + a) as f64 * h, (j + b) as f64 * h]).collect();
                    let ids: Vec<usize> = tri.iter().map(|&(a, b)| local_to_global[local(s, i + a, j + b)]).collect();
                    for k in 0..3 {
                        let (b, c2) = (p[(k + 1) % 3], p[(k + 2) % 3]);
                        // gradient of the hat function at vertex k
                        let gx = (b[1] - c2[1]) / (2.0 * area);
                        let gy = (c2[0] - b[0]) / (2.0 * area);
                        entries.push((c, ids[k], Complex64::new(0.5 * gx, -0.5 * gy)));
                        for l in 0..3 {
                            vertex_gram.push((ids[k], ids[l], area / 12.0 * if k == l { 2.0 } else { 1.0 }));
                        }
                    }
                    let cx = p.iter().map(|q| q[0]).sum::<f64>() / 3.0;
                    let cy = p.iter().map(|q| q[1]).sum::<f64>() / 3.0;
                    cell_site.push((s, [cx, cy]));
                }
            }
        }
    }
    let cells = cell_site.len();
    Ok(DiscreteDbar { n, squares, vertices, cells, entries, vertex_gram, cell_area: vec![area; cells], cell_site, local_to_global })
}

impl DiscreteDbar {
    /// Global index of grid point `(i, j)` in square `s`.
    pub fn vertex(&self, s: usize, i: usize, j: usize) -> usize {
        let m = self.n + 1;
        self.local_to_global[(s * m + j) * m + i]
    }

    /// `D u` in cell values.
    pub fn apply(&self, u: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.cells];
        for &(c, v, d) in &self.entries {
            out[c] += d * u[v];
        }
        out
    }

    /// `||u||^2` for the piecewise-linear function with vertex values `u`.
    pub fn norm_sq(&self, u: &[Complex64]) -> f64 {
        self.vertex_gram.iter().map(|&(p, q, g)| (u[p].conj() * u[q]).re * g).sum()
    }

    /// Cell values scaled by `sqrt(area)`, so that the cell basis is orthonormal.
    pub fn scaled_entries(&self) -> Triplets<Complex64> {
        self.entries.iter().map(|&(c, v, d)| (c, v, d * self.cell_area[c].sqrt())).collect()
    }

    /// The form `int |du/dz|^2`, a quarter of the Dirichlet stiffness matrix.
    /// Imaginary parts cancel between the two triangles on each edge.
    pub fn stiffness(&self) -> Triplets<Complex64> {
        let scaled = self.scaled_entries();
        let mut out = Vec::with_capacity(3 * scaled.len());
        for row in scaled.chunks(3) {
            for &(_, p, x) in row {
                for &(_, q, y) in row {
                    out.push((p, q, x.conj() * y));
                }
            }
        }
        out
    }

    /// How a square automorphism `sigma` moves vertices and cells.
    pub fn induced(&self, sigma: &[usize]) -> (Vec<usize>, Vec<usize>) {
        let m = self.n + 1;
        let mut vp = vec![0; self.vertices];
        for s in 0..self.squares {
            for l in 0..m * m {
                vp[self.local_to_global[s * m * m + l]] = self.local_to_global[sigma[s] * m * m + l];
            }
        }
        let per = 2 * self.n * self.n;
        let cp = (0..self.cells).map(|c| sigma[c / per] * per + c % per).collect();
        (vp, cp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::surface::two_cone_genus_two;

    fn z(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }

    #[test]
    fn counts_and_constants() {
        let s = two_cone_genus_two();
        let d = assemble_d(&s, 8).unwrap();
        // V = N n^2 + chi, two triangles per grid square
        assert_eq!(d.vertices as i64, 4 * 64 - 2);
        assert_eq!(d.cells, 2 * 4 * 64);
        let one = vec![z(1.0, 0.0); d.vertices];
        assert!((d.norm_sq(&one) - 4.0).abs() < 1e-12);
        for c in [z(1.0, 0.0), z(0.0, 1.0)] {
            assert!(d.apply(&vec![c; d.vertices]).iter().all(|x| *x == z(0.0, 0.0)));
        }
        assert!(d.apply(&vec![z(1.7, -0.3); d.vertices]).iter().all(|x| x.norm() < 1e-14));
        assert!(d.entries.iter().all(|e| e.0 < d.cells && e.1 < d.vertices));
        assert!(d.entries.chunks(3).enumerate().all(|(c, r)| r.iter().all(|e| e.0 == c)));
        assert_eq!(assemble_d(&s, 3).map(|_| ()).unwrap_err(), Error::ResolutionTooLow(3));
    }

    #[test]
    fn stiffness_is_real() {
        let d = assemble_d(&two_cone_genus_two(), 4).unwrap();
        let mut k = vec![z(0.0, 0.0); d.vertices * d.vertices];
        for (p, q, x) in d.stiffness() {
            k[p * d.vertices + q] += x;
        }
        let scale = k.iter().map(|x| x.norm()).fold(0.0, f64::max);
        assert!(k.iter().all(|x| x.im.abs() < 1e-14 * scale));
    }

    #[test]
    fn affine_functions_inside_one_square() {
        let s = two_cone_genus_two();
        let n = 8;
        let d = assemble_d(&s, n).unwrap();
        let h = 1.0 / n as f64;
        for conj in [false, true] {
            let mut u = vec![z(0.0, 0.0); d.vertices];
            // square 0 only; interior cells see affine data
            for j in 1..n {
                for i in 1..n {
                    let w = z(i as f64 * h, j as f64 * h);
                    u[d.vertex(0, i, j)] = if conj { w.conj() } else { w };
                }
            }
            let du = d.apply(&u);
            for (c, &(sq, [cx, cy])) in d.cell_site.iter().enumerate() {
                if sq == 0 && cx > 1.5 * h && cx < 1.0 - 1.5 * h && cy > 1.5 * h && cy < 1.0 - 1.5 * h {
                    let want = if conj { 0.0 } else { 1.0 };
                    assert!((du[c] - z(want, 0.0)).norm() < 1e-12, "{conj} {}", du[c]);
                }
            }
        }
    }

    #[test]
    fn automorphisms_commute_with_d() {
        let s = two_cone_genus_two();
        let d = assemble_d(&s, 5).unwrap();
        for sigma in s.automorphisms() {
            let (vp, cp) = d.induced(&sigma);
            let u: Vec<Complex64> = (0..d.vertices).map(|k| z((k as f64 * 0.37).sin(), (k as f64 * 0.11).cos())).collect();
            let mut moved = vec![z(0.0, 0.0); d.vertices];
            for k in 0..d.vertices {
                moved[vp[k]] = u[k];
            }
            let (a, b) = (d.apply(&u), d.apply(&moved));
            for c in 0..d.cells {
                assert!((b[cp[c]] - a[c]).norm() < 1e-12);
            }
        }
    }
}
