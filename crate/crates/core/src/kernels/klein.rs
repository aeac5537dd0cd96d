//! The algebraic (Klein) form of the canonical bidifferential before
//! normalisation of its a-periods.
//!
//! With `f = sum lambda_i x^i` and
//! `F(x1, x2) = sum_k (x1 x2)^k (2 lambda_{2k} + lambda_{2k+1} (x1 + x2))`,
//!
//! ```text
//! W0 = (2 y1 y2 + F(x1, x2)) / (4 y1 y2 (x1 - x2)^2) dx1 dx2 .
//! ```
//!
//! `F(x, x) = 2 f(x)`, so the double pole sits on the diagonal only, and the
//! form is regular at infinity. Near the anti-diagonal `y2 = -y1` the
//! numerator cancels; there we use `F^2 - 4 f(x1) f(x2) = (x1 - x2)^2 G(x1, x2)`
//! to write `W0 = r1 r2 G / (4 (F - 2 y1 y2))` without cancellation.

use num_complex::Complex64;

use super::ChartPoint;
use crate::curve::{c64, HyperellipticCurve};
use crate::error::{Error, Result};

/// Bivariate polynomial, `c[i][j]` multiplies `x1^i x2^j`.
#[derive(Debug, Clone)]
struct Poly2(Vec<Vec<Complex64>>);

impl Poly2 {
    fn zeros(n: usize) -> Self {
        Poly2(vec![vec![c64(0.0, 0.0); n]; n])
    }

    fn eval(&self, x1: Complex64, x2: Complex64) -> Complex64 {
        self.0.iter().rev().fold(c64(0.0, 0.0), |acc, row| {
            acc * x1 + row.iter().rev().fold(c64(0.0, 0.0), |a, &c| a * x2 + c)
        })
    }

    fn mul(&self, o: &Poly2) -> Poly2 {
        let n = self.0.len() + o.0.len() - 1;
        let mut out = Poly2::zeros(n);
        for (i, ri) in self.0.iter().enumerate() {
            for (j, &a) in ri.iter().enumerate() {
                if a == c64(0.0, 0.0) {
                    continue;
                }
                for (k, rk) in o.0.iter().enumerate() {
                    for (l, &b) in rk.iter().enumerate() {
                        out.0[i + k][j + l] += a * b;
                    }
                }
            }
        }
        out
    }

    /// Exact division by `(x1 - x2)`; returns the quotient and the largest remainder coefficient.
    fn div_diagonal(&self) -> (Poly2, f64) {
        let n = self.0.len();
        let mut q = Poly2::zeros(n);
        // running coefficient polynomial in x2
        let mut acc = vec![c64(0.0, 0.0); n + 1];
        for i in (1..n).rev() {
            let mut next = vec![c64(0.0, 0.0); n + 1];
            for j in 0..n {
                next[j] += self.0[i][j];
                next[j + 1] += acc[j];
            }
            acc = next;
            for j in 0..n {
                q.0[i - 1][j] = acc[j];
            }
        }
        let mut rem = 0.0f64;
        for j in 0..n {
            let r = self.0[0][j] + if j > 0 { acc[j - 1] } else { c64(0.0, 0.0) };
            rem = rem.max(r.norm());
        }
        (q, rem)
    }
}

#[derive(Debug, Clone)]
pub struct KleinForm {
    f: Poly2,
    g: Poly2,
}

impl KleinForm {
    pub fn new(curve: &HyperellipticCurve) -> Self {
        let gen = curve.genus();
        let n = gen + 3;
        let mut f = Poly2::zeros(n);
        for k in 0..=gen + 1 {
            f.0[k][k] += curve.lambda(2 * k) * 2.0;
            let odd = curve.lambda(2 * k + 1);
            if k + 1 < n {
                f.0[k + 1][k] += odd;
                f.0[k][k + 1] += odd;
            }
        }
        let d = curve.coeffs().len();
        let mut ff = Poly2::zeros(d);
        for i in 0..d {
            for j in 0..d {
                ff.0[i][j] = curve.coeffs()[i] * curve.coeffs()[j] * 4.0;
            }
        }
        let mut p = f.mul(&f);
        for (i, row) in ff.0.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                p.0[i][j] -= c;
            }
        }
        let (q1, _) = p.div_diagonal();
        let (g, _) = q1.div_diagonal();
        KleinForm { f, g }
    }

    pub fn big_f(&self, x1: Complex64, x2: Complex64) -> Complex64 {
        self.f.eval(x1, x2)
    }

    /// Value of `W0` with respect to the charts of `p` and `q`.
    pub fn w0(&self, p: &ChartPoint, q: &ChartPoint) -> Result<Complex64> {
        let dx = p.x - q.x;
        let big_f = self.f.eval(p.x, q.x);
        let yy = p.y * q.y;
        let minus = big_f - yy * 2.0;
        let plus = big_f + yy * 2.0;
        if plus.norm() < minus.norm() {
            return Ok(p.r * q.r * self.g.eval(p.x, q.x) / (minus * 4.0));
        }
        let scale = p.x.norm().max(q.x.norm()).max(1.0);
        if dx.norm() <= 1e-15 * scale {
            return Err(Error::CoincidentPoints);
        }
        let d2 = dx * dx;
        Ok(p.jac * q.jac / (d2 * 2.0) + big_f * p.r * q.r / (d2 * 4.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{quintic_test_curve, sextic_test_curve, Tolerances};

    fn pt(c: &HyperellipticCurve, x: Complex64, sheet: f64) -> ChartPoint {
        ChartPoint::in_x(x, c.y_principal(x) * sheet)
    }

    #[test]
    fn diagonal_factorisation_is_exact() {
        let c = sextic_test_curve().build(Tolerances::default()).unwrap();
        let k = KleinForm::new(&c);
        let (x1, x2) = (c64(0.3, 0.2), c64(-0.4, 0.7));
        let lhs = k.big_f(x1, x2).powi(2) - c.f(x1) * c.f(x2) * 4.0;
        let rhs = (x1 - x2).powi(2) * k.g.eval(x1, x2);
        assert!((lhs - rhs).norm() < 1e-13);
        assert!((k.big_f(x1, x1) - c.f(x1) * 2.0).norm() < 1e-14);
    }

    #[test]
    fn symmetric_and_finite_across_sheets() {
        let c = quintic_test_curve().build(Tolerances::default()).unwrap();
        let k = KleinForm::new(&c);
        let p = pt(&c, c64(0.4, 0.3), 1.0);
        let q = pt(&c, c64(-0.2, 0.5), -1.0);
        assert!((k.w0(&p, &q).unwrap() - k.w0(&q, &p).unwrap()).norm() < 1e-13);
        // opposite sheets over the same x: finite and continuous
        let x = c64(0.4, 0.3);
        let at = k.w0(&pt(&c, x, 1.0), &pt(&c, x, -1.0)).unwrap();
        let near = k.w0(&pt(&c, x, 1.0), &pt(&c, x + 1e-6, -1.0)).unwrap();
        assert!(at.is_finite());
        assert!((at - near).norm() < 1e-4 * at.norm().max(1.0));
    }

    #[test]
    fn biresidue_is_one() {
        let c = sextic_test_curve().build(Tolerances::default()).unwrap();
        let k = KleinForm::new(&c);
        let x = c64(0.2, -0.3);
        let p = pt(&c, x, 1.0);
        let h = |e: f64| {
            let q = ChartPoint::in_x(x + e, c.point_near(x + e, p.y).y);
            k.w0(&p, &q).unwrap() * e * e
        };
        // value * eps^2 = 1 + O(eps^2); Richardson over (eps, eps/2)
        let (e, half) = (1e-4, 5e-5);
        let extrap = (h(half) * 4.0 - h(e)) / 3.0;
        assert!((extrap - 1.0).norm() < 1e-9, "{extrap}");
    }

    #[test]
    fn coincident_points_rejected() {
        let c = sextic_test_curve().build(Tolerances::default()).unwrap();
        let k = KleinForm::new(&c);
        let p = pt(&c, c64(0.2, 0.1), 1.0);
        assert_eq!(k.w0(&p, &p).unwrap_err(), Error::CoincidentPoints);
    }
}
