//! Square-tiled translation surfaces (origamis).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Corners of a unit square, counterclockwise from the lower left.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Corner {
    SW,
    SE,
    NE,
    NW,
}

const CORNERS: [Corner; 4] = [Corner::SW, Corner::SE, Corner::NE, Corner::NW];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConePoint {
    /// Square corners glued into this point, as `(square, corner)`.
    pub corners: Vec<(usize, Corner)>,
    /// Total angle around the point, in units of `2 pi`.
    pub angle_turns: f64,
}

impl ConePoint {
    pub fn angle(&self) -> f64 {
        self.angle_turns * std::f64::consts::TAU
    }

    pub fn is_singular(&self) -> bool {
        self.corners.len() != 4
    }
}

/// `N` unit squares glued by `h` (right neighbour) and `v` (top neighbour),
/// both permutations of `0..N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareTiledSurface {
    pub h: Vec<usize>,
    pub v: Vec<usize>,
    /// Every vertex class of the square tiling, regular or not.
    pub vertices: Vec<ConePoint>,
    pub genus: usize,
}

pub(crate) struct UnionFind(Vec<usize>);

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    pub(crate) fn find(&mut self, mut a: usize) -> usize {
        while self.0[a] != a {
            self.0[a] = self.0[self.0[a]];
            a = self.0[a];
        }
        a
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

fn check_permutation(p: &[usize], name: &str) -> Result<()> {
    let mut seen = vec![false; p.len()];
    for &x in p {
        if x >= p.len() || seen[x] {
            return Err(Error::InvalidPermutation(format!("{name} is not a permutation of 1..{}", p.len())));
        }
        seen[x] = true;
    }
    Ok(())
}

/// Parse cycle notation such as `(1 2 3)(4 5)` into a 0-based permutation of
/// `0..n`. Labels are 1-based; fixed points may be omitted. With `n = None`
/// the degree is the largest label present.
pub fn parse_cycles(s: &str, n: Option<usize>) -> Result<Vec<usize>> {
    let bad = |m: String| Error::InvalidPermutation(m);
    let mut cycles: Vec<Vec<usize>> = Vec::new();
    let mut current: Option<Vec<usize>> = None;
    let mut token = String::new();
    let flush = |token: &mut String, current: &mut Option<Vec<usize>>| -> Result<()> {
        if token.is_empty() {
            return Ok(());
        }
        let label: usize = token.parse().map_err(|_| bad(format!("`{token}` is not a square label")))?;
        if label == 0 {
            return Err(bad("square labels start at 1".into()));
        }
        match current {
            Some(c) => c.push(label - 1),
            None => return Err(bad(format!("label {label} outside a cycle"))),
        }
        token.clear();
        Ok(())
    };
    for ch in s.chars() {
        match ch {
            '(' => {
                flush(&mut token, &mut current)?;
                if current.is_some() {
                    return Err(bad("nested parenthesis".into()));
                }
                current = Some(Vec::new());
            }
            ')' => {
                flush(&mut token, &mut current)?;
                cycles.push(current.take().ok_or_else(|| bad("unbalanced `)`".into()))?);
            }
            c if c.is_ascii_digit() => token.push(c),
            c if c.is_whitespace() || c == ',' => flush(&mut token, &mut current)?,
            c => return Err(bad(format!("unexpected character `{c}`"))),
        }
    }
    if current.is_some() {
        return Err(bad("unclosed cycle".into()));
    }
    if !token.is_empty() {
        return Err(bad(format!("label `{token}` outside a cycle")));
    }
    let largest = cycles.iter().flatten().map(|&x| x + 1).max().unwrap_or(0);
    let n = n.unwrap_or(largest);
    if largest > n {
        return Err(bad(format!("label {largest} exceeds degree {n}")));
    }
    let mut p: Vec<usize> = (0..n).collect();
    let mut moved = vec![false; n];
    for c in &cycles {
        for (k, &a) in c.iter().enumerate() {
            if moved[a] {
                return Err(bad(format!("label {} appears twice", a + 1)));
            }
            moved[a] = true;
            p[a] = c[(k + 1) % c.len()];
        }
    }
    Ok(p)
}

impl SquareTiledSurface {
    pub fn new(h: Vec<usize>, v: Vec<usize>) -> Result<Self> {
        if h.len() != v.len() || h.is_empty() {
            return Err(Error::InvalidPermutation(format!("degrees {} and {} differ or vanish", h.len(), v.len())));
        }
        check_permutation(&h, "h")?;
        check_permutation(&v, "v")?;
        let n = h.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(s) = stack.pop() {
            for t in [h[s], v[s]] {
                if !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
        if seen.iter().any(|&b| !b) {
            return Err(Error::NotConnected);
        }

        let id = |s: usize, c: Corner| 4 * s + c as usize;
        let mut uf = UnionFind::new(4 * n);
        for s in 0..n {
            uf.union(id(s, Corner::NE), id(h[s], Corner::NW));
            uf.union(id(s, Corner::SE), id(h[s], Corner::SW));
            uf.union(id(s, Corner::NW), id(v[s], Corner::SW));
            uf.union(id(s, Corner::NE), id(v[s], Corner::SE));
        }
        let mut classes: Vec<(usize, ConePoint)> = Vec::new();
        for s in 0..n {
            for c in CORNERS {
                let r = uf.find(id(s, c));
                match classes.iter_mut().find(|(root, _)| *root == r) {
                    Some((_, p)) => p.corners.push((s, c)),
                    None => classes.push((r, ConePoint { corners: vec![(s, c)], angle_turns: 0.0 })),
                }
            }
        }
        let mut vertices: Vec<ConePoint> = classes.into_iter().map(|(_, p)| p).collect();
        for p in &mut vertices {
            p.angle_turns = p.corners.len() as f64 / 4.0;
        }
        // V - E + F with E = 2N, F = N
        let chi = vertices.len() as i64 - n as i64;
        if chi > 2 || chi % 2 != 0 {
            return Err(Error::InvalidPermutation(format!("Euler characteristic {chi} is impossible")));
        }
        Ok(SquareTiledSurface { h, v, vertices, genus: ((2 - chi) / 2) as usize })
    }

    /// Build from two cycle-notation strings over the same squares.
    pub fn from_cycles(h: &str, v: &str) -> Result<Self> {
        let n = parse_cycles(h, None)?.len().max(parse_cycles(v, None)?.len());
        Self::new(parse_cycles(h, Some(n))?, parse_cycles(v, Some(n))?)
    }

    pub fn squares(&self) -> usize {
        self.h.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        2 - 2 * self.genus as i64
    }

    /// Vertex classes with angle other than `2 pi`.
    pub fn cone_points(&self) -> Vec<&ConePoint> {
        self.vertices.iter().filter(|p| p.is_singular()).collect()
    }

    /// `sum (theta_i - 2 pi)` over all vertex classes.
    pub fn angle_excess(&self) -> f64 {
        self.vertices.iter().map(|p| p.angle() - std::f64::consts::TAU).sum()
    }

    /// Permutations of the squares commuting with both `h` and `v`, the
    /// translation automorphisms; the identity comes first.
    pub fn automorphisms(&self) -> Vec<Vec<usize>> {
        let n = self.squares();
        let mut out = Vec::new();
        for target in 0..n {
            let mut sigma = vec![usize::MAX; n];
            sigma[0] = target;
            let mut stack = vec![0];
            let mut ok = true;
            while let Some(s) = stack.pop() {
                for (p, q) in [(self.h[s], self.h[sigma[s]]), (self.v[s], self.v[sigma[s]])] {
                    if sigma[p] == usize::MAX {
                        sigma[p] = q;
                        stack.push(p);
                    } else if sigma[p] != q {
                        ok = false;
                    }
                }
            }
            if ok && check_permutation(&sigma, "automorphism").is_ok() {
                out.push(sigma);
            }
        }
        out
    }

    /// Same surface with square `s` renamed `perm[s]`.
    pub fn relabelled(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, "relabelling")?;
        let n = self.squares();
        if perm.len() != n {
            return Err(Error::InvalidPermutation("relabelling has the wrong degree".into()));
        }
        let mut h = vec![0; n];
        let mut v = vec![0; n];
        for s in 0..n {
            h[perm[s]] = perm[self.h[s]];
            v[perm[s]] = perm[self.v[s]];
        }
        Self::new(h, v)
    }
}

/// A genus-2 origami with two cone points of angle `4 pi`.
pub fn two_cone_genus_two() -> SquareTiledSurface {
    SquareTiledSurface::from_cycles("(1 2 3 4)", "(1 2)(3 4)").expect("valid origami")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cycle_parsing() {
        assert_eq!(parse_cycles("(1 2 3)(5)", None).unwrap(), vec![1, 2, 0, 3, 4]);
        assert_eq!(parse_cycles("", Some(3)).unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_cycles("(1,3)", Some(4)).unwrap(), vec![2, 1, 0, 3]);
        for bad in ["(1 2", "1 2)", "(1 (2))", "(0 1)", "(1 2)(2 3)", "(a)", "3"] {
            assert!(matches!(parse_cycles(bad, None), Err(Error::InvalidPermutation(_))), "{bad}");
        }
        assert!(parse_cycles("(1 5)", Some(4)).is_err());
    }

    #[test]
    fn single_square_is_a_flat_torus() {
        let t = SquareTiledSurface::new(vec![0], vec![0]).unwrap();
        assert_eq!(t.genus, 1);
        assert!(t.cone_points().is_empty());
    }

    #[test]
    fn four_square_torus_cover() {
        let s = SquareTiledSurface::from_cycles("(1 2)(3 4)", "(1 3)(2 4)").unwrap();
        // vertex classes counted by hand: the four corners of the 2x2 block all meet
        let chi = s.vertices.len() as i64 - 4 * 2 + 4;
        assert_eq!(chi, 0);
        assert_eq!(s.genus, 1);
        assert!(s.cone_points().is_empty());
        assert!(s.angle_excess().abs() < 1e-12);
    }

    #[test]
    fn genus_two_examples() {
        let s = two_cone_genus_two();
        assert_eq!(s.genus, 2);
        let cones = s.cone_points();
        assert_eq!(cones.len(), 2);
        assert!(cones.iter().all(|p| p.angle_turns == 2.0));
        let l = SquareTiledSurface::from_cycles("(1 2)", "(1 3)").unwrap();
        assert_eq!(l.genus, 2);
        assert_eq!(l.cone_points().len(), 1);
        assert_eq!(l.cone_points()[0].angle_turns, 3.0);
    }

    #[test]
    fn automorphism_groups() {
        let s = two_cone_genus_two();
        assert_eq!(s.automorphisms(), vec![vec![0, 1, 2, 3], vec![2, 3, 0, 1]]);
        let t = SquareTiledSurface::from_cycles("(1 2)(3 4)", "(1 3)(2 4)").unwrap();
        assert_eq!(t.automorphisms().len(), 4);
        assert_eq!(SquareTiledSurface::from_cycles("(1 2)", "(1 3)").unwrap().automorphisms().len(), 1);
    }

    #[test]
    fn disconnected_and_malformed() {
        assert_eq!(SquareTiledSurface::from_cycles("(1 2)(3 4)", "(1 2)(3 4)").map(|_| ()), Err(Error::NotConnected));
        assert!(matches!(SquareTiledSurface::new(vec![0, 0], vec![0, 1]), Err(Error::InvalidPermutation(_))));
        assert!(matches!(SquareTiledSurface::new(vec![0, 1], vec![0]), Err(Error::InvalidPermutation(_))));
    }

    fn perm(n: usize) -> impl Strategy<Value = Vec<usize>> {
        Just((0..n).collect::<Vec<_>>()).prop_shuffle()
    }

    proptest! {
        #[test]
        fn gauss_bonnet_and_euler((h, v) in (1usize..8).prop_flat_map(|n| (perm(n), perm(n)))) {
            let n = h.len();
            if let Ok(s) = SquareTiledSurface::new(h, v) {
                let chi = s.vertices.len() as i64 - 2 * n as i64 + n as i64;
                prop_assert_eq!(chi, s.euler_characteristic());
                let excess = 2.0 * std::f64::consts::PI * (2.0 * s.genus as f64 - 2.0);
                prop_assert!((s.angle_excess() - excess).abs() < 1e-9);
                prop_assert_eq!(s.vertices.iter().map(|p| p.corners.len()).sum::<usize>(), 4 * n);
            }
        }

        #[test]
        fn relabelling_keeps_invariants(p in perm(4)) {
            let s = two_cone_genus_two();
            let r = s.relabelled(&p).unwrap();
            prop_assert_eq!(r.genus, 2);
            let mut a: Vec<usize> = s.vertices.iter().map(|c| c.corners.len()).collect();
            let mut b: Vec<usize> = r.vertices.iter().map(|c| c.corners.len()).collect();
            a.sort();
            b.sort();
            prop_assert_eq!(a, b);
        }
    }
}
