//! Canonical homology bases from chains of branch points.
//!
//! Consecutive branch points `e_k, e_{k+1}` of an ordered chain lift to a
//! closed cycle `c_k` (out on one sheet, back on the other). Neighbouring
//! chain cycles meet once, at their shared branch point, so the intersection
//! matrix is tridiagonal; its signs are read off in the local uniformiser and
//! an integer symplectic reduction turns the first `2g` chain cycles into a
//! canonical basis `a_1..a_g, b_1..b_g`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::path::w_hat;
use super::{c64, HyperellipticCurve, SheetPath};
use crate::error::{Error, Result};

/// Ordering rule for the branch point chain. Different schemes give
/// different markings of the same surface.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisScheme {
    /// Sort by (real, imaginary).
    #[default]
    Lexicographic,
    /// Sort by (imaginary, real).
    Transposed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HomologyBasis {
    pub scheme: BasisScheme,
    /// Branch point indices in chain order.
    pub order: Vec<usize>,
    /// The `2g` closed chain cycles.
    pub chains: Vec<SheetPath>,
    /// Intersection numbers of the chain cycles.
    pub chain_intersections: Vec<Vec<i64>>,
    /// `a_i` as integer combinations of chain cycles.
    pub a: Vec<Vec<i64>>,
    pub b: Vec<Vec<i64>>,
}

fn pairing(j: &[Vec<i64>], u: &[i64], v: &[i64]) -> i64 {
    let mut s = 0;
    for (i, ui) in u.iter().enumerate() {
        if *ui == 0 {
            continue;
        }
        for (k, vk) in v.iter().enumerate() {
            s += ui * j[i][k] * vk;
        }
    }
    s
}

/// Integer symplectic Gram-Schmidt for a unimodular antisymmetric form.
pub(crate) fn symplectic_reduce(j: &[Vec<i64>]) -> Result<(Vec<Vec<i64>>, Vec<Vec<i64>>)> {
    let n = j.len();
    let mut pool: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|k| i64::from(i == k)).collect()).collect();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    while !pool.is_empty() {
        let u = pool.remove(0);
        let idx = pool
            .iter()
            .position(|v| pairing(j, &u, v).abs() == 1)
            .ok_or_else(|| Error::PeriodCheckFailed("intersection form is not unimodular".into()))?;
        let mut w = pool.remove(idx);
        if pairing(j, &u, &w) == -1 {
            w.iter_mut().for_each(|x| *x = -*x);
        }
        for v in pool.iter_mut() {
            let (vw, vu) = (pairing(j, v, &w), pairing(j, v, &u));
            for k in 0..n {
                v[k] += -vw * u[k] + vu * w[k];
            }
        }
        a.push(u);
        b.push(w);
    }
    Ok((a, b))
}

fn segments_cross(p1: Complex64, p2: Complex64, q1: Complex64, q2: Complex64) -> bool {
    let cross = |o: Complex64, a: Complex64, b: Complex64| ((a - o).conj() * (b - o)).im;
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

fn point_segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let t = (((p - a) * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0);
    (p - (a + d * t)).norm()
}

/// A chain is usable when its segments do not cross and keep clear of the
/// other branch points.
fn chain_is_valid(e: &[Complex64], order: &[usize], links: usize) -> bool {
    for k in 0..links {
        let (p, q) = (e[order[k]], e[order[k + 1]]);
        let len = (q - p).norm();
        for (i, &z) in e.iter().enumerate() {
            if i != order[k] && i != order[k + 1] && point_segment_distance(z, p, q) < 0.05 * len {
                return false;
            }
        }
        for l in 0..k {
            let (r, s) = (e[order[l]], e[order[l + 1]]);
            if l + 1 == k {
                // adjacent: must not fold back onto each other
                let turn = ((p - r).conj() * (q - p)).im.abs();
                if turn < 1e-9 * len * (p - r).norm() && ((p - r).conj() * (q - p)).re < 0.0 {
                    return false;
                }
            } else if segments_cross(p, q, r, s) {
                return false;
            }
        }
    }
    true
}

fn chain_order(curve: &HyperellipticCurve, scheme: BasisScheme, links: usize) -> Vec<usize> {
    let e = curve.branch_points();
    let mut order: Vec<usize> = (0..e.len()).collect();
    match scheme {
        BasisScheme::Lexicographic => order.sort_by(|&i, &j| super::lex_cmp(&e[i], &e[j])),
        BasisScheme::Transposed => {
            let sw = |z: Complex64| c64(z.im, z.re);
            order.sort_by(|&i, &j| super::lex_cmp(&sw(e[i]), &sw(e[j])))
        }
    }
    if chain_is_valid(e, &order, links) {
        return order;
    }
    // angular order about a generic interior point never self-intersects
    let n = e.len() as f64;
    let centre = e.iter().fold(c64(0.0, 0.0), |acc, z| acc + z) / n + c64(0.0123, 0.0071) * curve.min_separation();
    order.sort_by(|&i, &j| (e[i] - centre).arg().partial_cmp(&(e[j] - centre).arg()).unwrap());
    if scheme == BasisScheme::Transposed {
        order.rotate_left(1);
    }
    order
}

/// Build the canonical basis for the given ordering scheme.
pub fn build_homology_basis(curve: &HyperellipticCurve, scheme: BasisScheme) -> Result<HomologyBasis> {
    let g = curve.genus();
    let n = 2 * g;
    let e = curve.branch_points();
    let order = chain_order(curve, scheme, n);
    let zero = c64(0.0, 0.0);
    let mut chains = Vec::with_capacity(n);
    let mut mids = Vec::with_capacity(n);
    for k in 0..n {
        let (p, q) = (e[order[k]], e[order[k + 1]]);
        let m = (p + q) * 0.5;
        let ym = curve.y_principal(m);
        chains.push(SheetPath::new(vec![p, m, q, m, p], vec![zero, ym, zero, -ym, zero]));
        mids.push((m, ym));
    }
    let mut j = vec![vec![0i64; n]; n];
    for k in 0..n - 1 {
        let shared = order[k + 1];
        let (m0, y0) = mids[k];
        let (m1, y1) = mids[k + 1];
        let t_in = y0 / w_hat(curve, shared, m0)?;
        let t_out = y1 / w_hat(curve, shared, m1)?;
        let s = ((-t_in).conj() * t_out).im;
        if s.abs() <= 1e-12 * t_in.norm() * t_out.norm() {
            return Err(Error::PeriodCheckFailed("tangent chain cycles".into()));
        }
        let eps = if s > 0.0 { 1 } else { -1 };
        j[k][k + 1] = eps;
        j[k + 1][k] = -eps;
    }
    let (a, b) = symplectic_reduce(&j)?;
    Ok(HomologyBasis { scheme, order, chains, chain_intersections: j, a, b })
}

impl HomologyBasis {
    pub fn genus(&self) -> usize {
        self.a.len()
    }

    /// Intersection number of two cycles given over the chain basis.
    pub fn intersection(&self, u: &[i64], v: &[i64]) -> i64 {
        pairing(&self.chain_intersections, u, v)
    }

    /// Rows `a_1..a_g, b_1..b_g` of coefficients over the chain cycles.
    pub fn cycles(&self) -> impl Iterator<Item = &Vec<i64>> {
        self.a.iter().chain(self.b.iter())
    }

    /// Combine per-chain integrals into a- and b-periods.
    pub fn combine<T>(&self, per_chain: &[T]) -> (Vec<T>, Vec<T>)
    where
        T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    {
        let comb = |row: &Vec<i64>| {
            row.iter().zip(per_chain).fold(T::default(), |acc, (&c, &v)| if c == 0 { acc } else { acc + v * c as f64 })
        };
        (self.a.iter().map(comb).collect(), self.b.iter().map(comb).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{quintic_test_curve, sextic_test_curve, Tolerances};
    use proptest::prelude::*;

    #[test]
    fn canonical_pairing_after_reduction() {
        for spec in [quintic_test_curve(), sextic_test_curve()] {
            let c = spec.build(Tolerances::default()).unwrap();
            for scheme in [BasisScheme::Lexicographic, BasisScheme::Transposed] {
                let hb = build_homology_basis(&c, scheme).unwrap();
                let g = hb.genus();
                assert_eq!(g, 2);
                for i in 0..g {
                    for k in 0..g {
                        assert_eq!(hb.intersection(&hb.a[i], &hb.b[k]), i64::from(i == k));
                        assert_eq!(hb.intersection(&hb.a[i], &hb.a[k]), 0);
                        assert_eq!(hb.intersection(&hb.b[i], &hb.b[k]), 0);
                    }
                }
                for ch in &hb.chains {
                    assert!(ch.is_closed(1e-14));
                }
            }
        }
    }

    #[test]
    fn schemes_give_different_chains() {
        let c = sextic_test_curve().build(Tolerances::default()).unwrap();
        let a = build_homology_basis(&c, BasisScheme::Lexicographic).unwrap();
        let b = build_homology_basis(&c, BasisScheme::Transposed).unwrap();
        assert_ne!(a.order, b.order);
    }

    #[test]
    fn basis_is_deterministic() {
        let c = quintic_test_curve().build(Tolerances::default()).unwrap();
        let a = serde_json::to_string(&build_homology_basis(&c, BasisScheme::Lexicographic).unwrap()).unwrap();
        let b = serde_json::to_string(&build_homology_basis(&c, BasisScheme::Lexicographic).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn reduction_of_random_tridiagonal_forms(signs in proptest::collection::vec(any::<bool>(), 1..9usize)) {
            let n = if signs.len() % 2 == 1 { signs.len() + 1 } else { signs.len() + 2 };
            let mut j = vec![vec![0i64; n]; n];
            for k in 0..n - 1 {
                let e = if signs.get(k).copied().unwrap_or(true) { 1 } else { -1 };
                j[k][k + 1] = e;
                j[k + 1][k] = -e;
            }
            let (a, b) = symplectic_reduce(&j).unwrap();
            for i in 0..a.len() {
                for k in 0..a.len() {
                    prop_assert_eq!(pairing(&j, &a[i], &b[k]), i64::from(i == k));
                    prop_assert_eq!(pairing(&j, &a[i], &a[k]), 0);
                    prop_assert_eq!(pairing(&j, &b[i], &b[k]), 0);
                }
            }
        }
    }
}
