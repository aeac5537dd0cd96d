//! Truncated power series in one complex variable.
//!
//! Used for local jets of differentials and of distinguished parameters.

use num_complex::Complex64;

/// Coefficients `c[0] + c[1] t + c[2] t^2 + ...`, truncated to a fixed length.
#[derive(Debug, Clone, PartialEq)]
pub struct Series(pub Vec<Complex64>);

impl Series {
    pub fn zero(len: usize) -> Self {
        Series(vec![Complex64::new(0.0, 0.0); len])
    }

    pub fn from_coeffs(mut c: Vec<Complex64>, len: usize) -> Self {
        c.resize(len, Complex64::new(0.0, 0.0));
        Series(c)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn eval(&self, t: Complex64) -> Complex64 {
        self.0.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * t + c)
    }

    pub fn mul(&self, other: &Series) -> Series {
        let n = self.len().min(other.len());
        let mut out = Series::zero(n);
        for i in 0..n {
            if self.0[i] == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..n - i {
                out.0[i + j] += self.0[i] * other.0[j];
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Series {
        Series(self.0.iter().map(|&c| c * s).collect())
    }

    /// Multiplicative inverse; the constant term must be nonzero.
    pub fn inv(&self) -> Series {
        let n = self.len();
        let mut out = Series::zero(n);
        let a0 = self.0[0];
        out.0[0] = a0.inv();
        for k in 1..n {
            let mut s = Complex64::new(0.0, 0.0);
            for j in 1..=k {
                s += self.0[j] * out.0[k - j];
            }
            out.0[k] = -s / a0;
        }
        out
    }

    /// Square root with the given choice of `sqrt(c[0])`.
    pub fn sqrt_with(&self, root0: Complex64) -> Series {
        let n = self.len();
        let mut out = Series::zero(n);
        out.0[0] = root0;
        for k in 1..n {
            let mut s = self.0[k];
            for j in 1..k {
                s -= out.0[j] * out.0[k - j];
            }
            out.0[k] = s / (root0 * 2.0);
        }
        out
    }

    /// Drop the first `m` coefficients (division by `t^m`), padding with zeros.
    pub fn shift_down(&self, m: usize) -> Series {
        let n = self.len();
        let mut c: Vec<Complex64> = self.0.iter().skip(m).copied().collect();
        c.resize(n, Complex64::new(0.0, 0.0));
        Series(c)
    }

    /// Multiply by `t^m`, truncating.
    pub fn shift_up(&self, m: usize) -> Series {
        let n = self.len();
        let mut c = vec![Complex64::new(0.0, 0.0); m.min(n)];
        c.extend(self.0.iter().take(n.saturating_sub(m)).copied());
        Series(c)
    }

    /// Antiderivative with zero constant term.
    pub fn integrate(&self) -> Series {
        let n = self.len();
        let mut out = Series::zero(n);
        for k in 0..n - 1 {
            out.0[k + 1] = self.0[k] / (k as f64 + 1.0);
        }
        out
    }

    pub fn derivative(&self) -> Series {
        let n = self.len();
        let mut out = Series::zero(n);
        for k in 1..n {
            out.0[k - 1] = self.0[k] * k as f64;
        }
        out
    }

    /// Substitute `t -> g(t)` where `g` has zero constant term.
    pub fn compose(&self, g: &Series) -> Series {
        let n = self.len().min(g.len());
        let mut out = Series::zero(n);
        let mut power = Series::zero(n);
        power.0[0] = Complex64::new(1.0, 0.0);
        for k in 0..n {
            for i in 0..n {
                out.0[i] += self.0[k] * power.0[i];
            }
            power = power.mul(g);
        }
        out
    }

    /// Compositional inverse of a series `p1 t + p2 t^2 + ...` with `p1 != 0`.
    pub fn reversion(&self) -> Series {
        let n = self.len();
        let p1 = self.0[1];
        // Newton-free fixed point: g = (t - (f(g) - p1 g)) / p1, one order per sweep.
        let mut g = Series::zero(n);
        if n > 1 {
            g.0[1] = p1.inv();
        }
        let mut nonlinear = self.clone();
        nonlinear.0[0] = Complex64::new(0.0, 0.0);
        nonlinear.0[1] = Complex64::new(0.0, 0.0);
        for _ in 2..n {
            let fg = nonlinear.compose(&g);
            let mut next = Series::zero(n);
            if n > 1 {
                next.0[1] = p1.inv();
            }
            for i in 2..n {
                next.0[i] = -fg.0[i] / p1;
            }
            g = next;
        }
        g
    }
}

/// Taylor coefficients of the polynomial `sum c_k x^k` around `x0`, i.e. of `p(x0 + t)`.
pub fn taylor_shift(coeffs: &[Complex64], x0: Complex64, len: usize) -> Series {
    let d = coeffs.len();
    let mut work = coeffs.to_vec();
    let mut out = Vec::with_capacity(d);
    // repeated synthetic division by (x - x0)
    for _ in 0..d {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut quotient = vec![Complex64::new(0.0, 0.0); work.len().saturating_sub(1)];
        for i in (0..work.len()).rev() {
            acc = acc * x0 + work[i];
            if i > 0 {
                quotient[i - 1] = acc;
            }
        }
        out.push(acc);
        work = quotient;
        if work.is_empty() {
            break;
        }
    }
    Series::from_coeffs(out, len)
}

/// Substitute `t -> t^2` in a series, keeping the same truncation length.
pub fn substitute_square(s: &Series) -> Series {
    let n = s.len();
    let mut out = Series::zero(n);
    for (k, &c) in s.0.iter().enumerate() {
        if 2 * k < n {
            out.0[2 * k] = c;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn inverse_of_one_minus_t() {
        let s = Series::from_coeffs(vec![c(1.0), c(-1.0)], 6);
        let inv = s.inv();
        for k in 0..6 {
            assert!((inv.0[k] - c(1.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn sqrt_squares_back() {
        let s = Series::from_coeffs(vec![c(4.0), c(1.0), Complex64::new(0.5, 2.0)], 8);
        let r = s.sqrt_with(c(2.0));
        let back = r.mul(&r);
        for k in 0..8 {
            assert!((back.0[k] - s.0[k]).norm() < 1e-13, "k={k}");
        }
    }

    #[test]
    fn reversion_inverts_composition() {
        let s = Series::from_coeffs(
            vec![c(0.0), Complex64::new(0.7, 0.2), c(0.3), Complex64::new(-0.1, 0.4), c(0.05)],
            10,
        );
        let g = s.reversion();
        let id = s.compose(&g);
        assert!((id.0[1] - c(1.0)).norm() < 1e-13);
        for k in 2..10 {
            assert!(id.0[k].norm() < 1e-12, "k={k} {}", id.0[k]);
        }
    }

    #[test]
    fn taylor_shift_matches_evaluation() {
        let p = vec![c(-1.0), c(0.0), c(0.0), c(0.0), c(0.0), c(1.0)];
        let x0 = Complex64::new(0.3, 0.4);
        let s = taylor_shift(&p, x0, 6);
        let t = Complex64::new(0.01, -0.02);
        let direct = (x0 + t).powi(5) - 1.0;
        assert!((s.eval(t) - direct).norm() < 1e-14);
    }
}
