//! Spectra of `D^* D` and `D D^*`, and eigenvalue convergence under refinement.
//!
//! Both products commute with the translation automorphisms of the surface,
//! so they are block diagonal over the characters of a cyclic automorphism
//! group; each block is solved densely.

use std::f64::consts::TAU;

use faer::linalg::triangular_solve::solve_lower_triangular_in_place;
use faer::{Mat, Par, Side};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::dbar::{assemble_d, DiscreteDbar, Triplets};
use super::surface::SquareTiledSurface;
use crate::error::{Error, Result};

/// Relative threshold, against `||D||^2`, below which an eigenvalue counts as zero.
pub const KERNEL_THRESHOLD: f64 = 1e-10;
pub const KERNEL_SWEEP: [f64; 5] = [1e-8, 1e-9, 1e-10, 1e-11, 1e-12];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelCount {
    pub threshold: f64,
    pub ker_d: usize,
    pub ker_dstar: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectra {
    pub n: usize,
    pub vertices: usize,
    pub cells: usize,
    /// Order of the automorphism used to split the problem, and block sizes
    /// `(vertices, cells)` per character.
    pub symmetry_order: usize,
    pub blocks: Vec<(usize, usize)>,
    /// `||D||^2`, the largest eigenvalue of either product.
    pub norm_sq: f64,
    pub threshold: f64,
    /// All eigenvalues of `D^* D`, ascending.
    pub dstar_d: Vec<f64>,
    /// All eigenvalues of `D D^*`, ascending.
    pub d_dstar: Vec<f64>,
    pub ker_d: usize,
    pub ker_dstar: usize,
    pub sweep: Vec<KernelCount>,
    /// `max |a_k - b_k| / b_k` over the paired nonzero eigenvalues, or
    /// infinity when the nonzero counts differ.
    pub max_relative_mismatch: f64,
    /// `sum log` of the nonzero eigenvalues; the products themselves overflow.
    pub log_product_dstar_d: f64,
    pub log_product_d_dstar: f64,
    /// `ker D^* - ker D`, against `cells - vertices` from rank-nullity.
    pub index: i64,
    pub cells_minus_vertices: i64,
}

impl Spectra {
    pub fn nonzero_dstar_d(&self) -> &[f64] {
        &self.dstar_d[self.ker_d..]
    }

    pub fn nonzero_d_dstar(&self) -> &[f64] {
        &self.d_dstar[self.ker_dstar..]
    }

    /// `|log prod' spec(D^*D) - log prod' spec(DD^*)|`.
    pub fn log_product_difference(&self) -> f64 {
        (self.log_product_dstar_d - self.log_product_d_dstar).abs()
    }

    /// Both spectra as CSV, one row per index, blank where a list has ended.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,dstar_d,d_dstar\n");
        let rows = self.dstar_d.len().max(self.d_dstar.len());
        for k in 0..rows {
            let cell = |v: &[f64]| v.get(k).map(|x| format!("{x:.17e}")).unwrap_or_default();
            out.push_str(&format!("{k},{},{}\n", cell(&self.dstar_d), cell(&self.d_dstar)));
        }
        out
    }
}

pub fn hermitian_eigenvalues(a: &Mat<Complex64>) -> Result<Vec<f64>> {
    let mut e = a.self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::EigensolverFailure(format!("{e:?}")))?;
    if e.iter().any(|x| !x.is_finite()) {
        return Err(Error::EigensolverFailure("non-finite eigenvalue".into()));
    }
    e.sort_by(f64::total_cmp);
    Ok(e)
}

/// Orbits of a permutation: `of[x] = (orbit, offset)` with `x = tau^offset(first)`.
struct Orbits {
    of: Vec<(usize, usize)>,
    size: Vec<usize>,
}

fn orbits(perm: &[usize]) -> Orbits {
    let mut of = vec![(usize::MAX, 0); perm.len()];
    let mut size = Vec::new();
    for x in 0..perm.len() {
        if of[x].0 != usize::MAX {
            continue;
        }
        let (o, mut y, mut m) = (size.len(), x, 0);
        while of[y].0 == usize::MAX {
            of[y] = (o, m);
            y = perm[y];
            m += 1;
        }
        size.push(m);
    }
    Orbits { of, size }
}

/// Orthonormal basis of the character-`j` subspace: orbit `o` contributes
/// `sum_m w^(j m) e_(tau^m x) / sqrt(|o|)` when `w^(j |o|) = 1`.
struct CharacterBasis<'a> {
    orbits: &'a Orbits,
    index: Vec<usize>,
    dim: usize,
    phases: Vec<Complex64>,
}

impl<'a> CharacterBasis<'a> {
    fn new(orbits: &'a Orbits, j: usize, k: usize) -> Self {
        let mut index = vec![usize::MAX; orbits.size.len()];
        let mut dim = 0;
        for (o, &s) in orbits.size.iter().enumerate() {
            if (j * s) % k == 0 {
                index[o] = dim;
                dim += 1;
            }
        }
        let phases = (0..k).map(|m| Complex64::from_polar(1.0, TAU * (j * m % k) as f64 / k as f64)).collect();
        CharacterBasis { orbits, index, dim, phases }
    }

    fn coord(&self, x: usize) -> Option<(usize, Complex64)> {
        let (o, m) = self.orbits.of[x];
        let i = self.index[o];
        (i != usize::MAX).then(|| (i, self.phases[m] / (self.orbits.size[o] as f64).sqrt()))
    }
}

fn block<T: Copy + Into<Complex64>>(t: &Triplets<T>, rows: &CharacterBasis, cols: &CharacterBasis) -> Mat<Complex64> {
    let mut a = Mat::<Complex64>::zeros(rows.dim, cols.dim);
    for &(p, q, x) in t {
        if let (Some((i, cp)), Some((l, cq))) = (rows.coord(p), cols.coord(q)) {
            a[(i, l)] += cp.conj() * x.into() * cq;
        }
    }
    a
}

/// Cyclic automorphism of largest order, as a permutation of squares.
pub fn symmetry_generator(surface: &SquareTiledSurface) -> Vec<usize> {
    let order = |s: &Vec<usize>| orbits(s).size.iter().fold(1, |a, &b| lcm(a, b));
    surface.automorphisms().into_iter().fold(None, |best: Option<Vec<usize>>, s| match best {
        Some(b) if order(&b) >= order(&s) => Some(b),
        _ => Some(s),
    })
    .unwrap_or_else(|| (0..surface.squares()).collect())
}

fn lcm(a: usize, b: usize) -> usize {
    let (mut x, mut y) = (a, b);
    while y != 0 {
        (x, y) = (y, x % y);
    }
    a / x * b
}

struct Block {
    dims: (usize, usize),
    dstar_d: Vec<f64>,
    d_dstar: Option<Vec<f64>>,
}

/// `L^{-1} A L^{-H}` for lower-triangular `L`.
fn congruence(l: faer::MatRef<Complex64>, a: Mat<Complex64>) -> Mat<Complex64> {
    let mut x = a;
    solve_lower_triangular_in_place(l, x.as_mut(), Par::Seq);
    let mut y = x.adjoint().to_owned();
    solve_lower_triangular_in_place(l, y.as_mut(), Par::Seq);
    y.adjoint().to_owned()
}

fn solve_blocks(d: &DiscreteDbar, sigma: &[usize], with_d_dstar: bool) -> Result<Vec<Block>> {
    let (vp, cp) = d.induced(sigma);
    let (vo, co) = (orbits(&vp), orbits(&cp));
    let k = co.size.iter().fold(1, |a, &b| lcm(a, b));
    let stiffness = d.stiffness();
    let scaled = d.scaled_entries();
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        let vb = CharacterBasis::new(&vo, j, k);
        let cb = CharacterBasis::new(&co, j, k);
        let gram = block(&d.vertex_gram, &vb, &vb);
        let llt = gram.llt(Side::Lower).map_err(|e| Error::EigensolverFailure(format!("vertex Gram matrix: {e:?}")))?;
        let l = llt.L();
        // D^*D = L^{-1} K L^{-H} with K the assembled form; D D^* = Z^H Z with Z = L^{-1} G^H
        let dstar_d = hermitian_eigenvalues(&congruence(l, block(&stiffness, &vb, &vb)))?;
        let d_dstar = if with_d_dstar {
            let mut z = block(&scaled, &cb, &vb).adjoint().to_owned();
            solve_lower_triangular_in_place(l, z.as_mut(), Par::Seq);
            Some(hermitian_eigenvalues(&(z.adjoint() * &z))?)
        } else {
            None
        };
        out.push(Block { dims: (vb.dim, cb.dim), dstar_d, d_dstar });
    }
    Ok(out)
}

fn count_below(e: &[f64], cut: f64) -> usize {
    e.iter().take_while(|&&x| x <= cut).count()
}

/// Spectra at resolution `n`, split by the largest cyclic automorphism.
pub fn spectra(surface: &SquareTiledSurface, n: usize) -> Result<Spectra> {
    spectra_of(&assemble_d(surface, n)?, &symmetry_generator(surface))
}

/// Spectra of an assembled operator; `sigma` is a square automorphism used
/// to split the problem (the identity for no splitting).
pub fn spectra_of(d: &DiscreteDbar, sigma: &[usize]) -> Result<Spectra> {
    let blocks = solve_blocks(d, sigma, true)?;
    let mut a: Vec<f64> = blocks.iter().flat_map(|b| b.dstar_d.iter().copied()).collect();
    let mut b: Vec<f64> = blocks.iter().flat_map(|b| b.d_dstar.iter().flatten().copied()).collect();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let norm_sq = a.last().copied().unwrap_or(0.0).max(b.last().copied().unwrap_or(0.0));
    let cut = |t: f64| t * norm_sq;
    let ker_d = count_below(&a, cut(KERNEL_THRESHOLD));
    let ker_dstar = count_below(&b, cut(KERNEL_THRESHOLD));
    let sweep = KERNEL_SWEEP
        .iter()
        .map(|&t| KernelCount { threshold: t, ker_d: count_below(&a, cut(t)), ker_dstar: count_below(&b, cut(t)) })
        .collect();
    let (na, nb) = (&a[ker_d..], &b[ker_dstar..]);
    let max_relative_mismatch = if na.len() == nb.len() {
        na.iter().zip(nb).map(|(x, y)| (x - y).abs() / y).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    let log_product = |v: &[f64]| v.iter().map(|x| x.ln()).sum::<f64>();
    Ok(Spectra {
        n: d.n,
        vertices: d.vertices,
        cells: d.cells,
        symmetry_order: blocks.len(),
        blocks: blocks.iter().map(|b| b.dims).collect(),
        norm_sq,
        threshold: KERNEL_THRESHOLD,
        log_product_dstar_d: log_product(na),
        log_product_d_dstar: log_product(nb),
        ker_d,
        ker_dstar,
        sweep,
        max_relative_mismatch,
        index: ker_dstar as i64 - ker_d as i64,
        cells_minus_vertices: d.cells as i64 - d.vertices as i64,
        dstar_d: a,
        d_dstar: b,
    })
}

/// All eigenvalues of `D^* D` at resolution `n`, ascending.
pub fn dstar_d_eigenvalues(surface: &SquareTiledSurface, n: usize) -> Result<Vec<f64>> {
    let d = assemble_d(surface, n)?;
    let mut e: Vec<f64> = solve_blocks(&d, &symmetry_generator(surface), false)?.into_iter().flat_map(|b| b.dstar_d).collect();
    e.sort_by(f64::total_cmp);
    Ok(e)
}

/// Lowest eigenvalues of `4 D^* D` at one resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionRow {
    pub n: usize,
    /// The constant mode, zero up to rounding.
    pub lowest: f64,
    pub eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueTrend {
    /// Estimates at each resolution, coarse to fine.
    pub estimates: Vec<f64>,
    /// Successive error ratios `(l_k - l_{k+1}) / (l_{k+1} - l_{k+2})`.
    pub ratios: Vec<f64>,
    /// Richardson limit from the finest three estimates at the observed ratio.
    pub extrapolated: Option<f64>,
    /// Estimates lie on one side of the limit with shrinking distance.
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub resolutions: Vec<usize>,
    pub rows: Vec<ResolutionRow>,
    pub trends: Vec<EigenvalueTrend>,
}

/// Table from full `D^* D` spectra (ascending) at increasing resolutions.
pub fn convergence_table(spectra: &[(usize, Vec<f64>)], m: usize) -> Result<ConvergenceTable> {
    let mut rows = Vec::new();
    for (n, e) in spectra {
        if e.len() < m + 1 {
            return Err(Error::EigensolverFailure(format!("only {} eigenvalues at n = {n}", e.len())));
        }
        rows.push(ResolutionRow { n: *n, lowest: 4.0 * e[0], eigenvalues: e[1..=m].iter().map(|x| 4.0 * x).collect() });
    }
    let trends = (0..m)
        .map(|k| {
            let estimates: Vec<f64> = rows.iter().map(|r| r.eigenvalues[k]).collect();
            let ratios: Vec<f64> = estimates.windows(3).map(|w| (w[0] - w[1]) / (w[1] - w[2])).collect();
            let l = estimates.len();
            let extrapolated = match ratios.last() {
                Some(&r) if r > 1.0 => Some(estimates[l - 1] - (estimates[l - 2] - estimates[l - 1]) / (r - 1.0)),
                _ => None,
            };
            let monotone = extrapolated.is_some_and(|lim| {
                let s: Vec<f64> = estimates.iter().map(|x| x - lim).collect();
                s.iter().all(|x| x.signum() == s[0].signum()) && s.windows(2).all(|w| w[1].abs() < w[0].abs())
            });
            EigenvalueTrend { estimates, ratios, extrapolated, monotone }
        })
        .collect();
    Ok(ConvergenceTable { resolutions: spectra.iter().map(|s| s.0).collect(), rows, trends })
}

/// First `m` nonzero eigenvalues of `4 D^* D` at each resolution.
pub fn convergence_study(surface: &SquareTiledSurface, resolutions: &[usize], m: usize) -> Result<ConvergenceTable> {
    let spectra = resolutions.iter().map(|&n| Ok((n, dstar_d_eigenvalues(surface, n)?))).collect::<Result<Vec<_>>>()?;
    convergence_table(&spectra, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::surface::two_cone_genus_two;

    fn identity(n: usize) -> Vec<usize> {
        (0..n).collect()
    }

    #[test]
    fn split_matches_unsplit() {
        let s = two_cone_genus_two();
        let d = assemble_d(&s, 6).unwrap();
        let full = spectra_of(&d, &identity(4)).unwrap();
        let split = spectra_of(&d, &symmetry_generator(&s)).unwrap();
        assert_eq!(full.symmetry_order, 1);
        assert_eq!(split.symmetry_order, 2);
        assert_eq!(split.blocks.iter().map(|b| b.0).sum::<usize>(), d.vertices);
        assert_eq!(split.blocks.iter().map(|b| b.1).sum::<usize>(), d.cells);
        for (x, y) in full.dstar_d.iter().zip(&split.dstar_d).chain(full.d_dstar.iter().zip(&split.d_dstar)) {
            assert!((x - y).abs() < 1e-10 * full.norm_sq, "{x} {y}");
        }
    }

    #[test]
    fn flat_torus_against_fourier_modes() {
        // unit torus: 4 D^*D approximates -Laplacian, eigenvalues 4 pi^2 (k^2 + l^2)
        let t = SquareTiledSurface::new(vec![0], vec![0]).unwrap();
        let table = convergence_study(&t, &[8, 16, 32], 5).unwrap();
        let exact = 4.0 * std::f64::consts::PI.powi(2);
        for tr in &table.trends[..4] {
            let err: Vec<f64> = tr.estimates.iter().map(|x| x - exact).collect();
            assert!(err.iter().all(|&e| e > 0.0));
            assert!(err[2] < 0.02 * exact);
            assert!((tr.ratios[0] - 4.0).abs() < 0.3, "{:?}", tr.ratios);
        }
    }

    #[test]
    fn isospectral_with_one_dimensional_kernel() {
        let s = spectra(&two_cone_genus_two(), 8).unwrap();
        assert_eq!(s.ker_d, 1);
        assert_eq!(s.index, s.cells_minus_vertices);
        assert!(s.max_relative_mismatch < 1e-10);
        assert!(s.log_product_difference() < 1e-9 * s.log_product_dstar_d.abs().max(1.0));
        assert!(s.sweep.iter().all(|k| k.ker_d == 1));
        assert!(s.dstar_d[0].abs() < 1e-12 * s.norm_sq);
    }

    #[test]
    fn relabelled_squares_same_spectrum() {
        let s = two_cone_genus_two();
        let r = s.relabelled(&[2, 0, 3, 1]).unwrap();
        let (a, b) = (dstar_d_eigenvalues(&s, 6).unwrap(), dstar_d_eigenvalues(&r, 6).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9 * a.last().unwrap(), "{x} {y}");
        }
    }
}
