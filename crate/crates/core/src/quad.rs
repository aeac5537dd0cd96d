//! One-dimensional quadrature: adaptive Gauss–Kronrod for vector-valued
//! complex integrands and Gauss–Legendre rules for tensor cells.

use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone)]
pub struct QuadResult {
    pub values: Vec<Complex64>,
    /// Sum over intervals of the Kronrod–Gauss difference, maximised over components.
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { abs_tol: 1e-13, rel_tol: 1e-12, max_intervals: 2000 }
    }
}

struct Interval {
    a: f64,
    b: f64,
    values: Vec<Complex64>,
    error: f64,
}

fn gk15<F>(m: usize, a: f64, b: f64, f: &mut F, buf: &mut [Complex64]) -> (Vec<Complex64>, f64)
where
    F: FnMut(f64, &mut [Complex64]),
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kron = vec![Complex64::new(0.0, 0.0); m];
    let mut gauss = vec![Complex64::new(0.0, 0.0); m];
    f(c, buf);
    for i in 0..m {
        kron[i] += buf[i] * WGK[7];
        gauss[i] += buf[i] * WG[3];
    }
    for j in 0..7 {
        let dx = h * XGK[j];
        for x in [c - dx, c + dx] {
            f(x, buf);
            for i in 0..m {
                kron[i] += buf[i] * WGK[j];
                if j % 2 == 1 {
                    gauss[i] += buf[i] * WG[j / 2];
                }
            }
        }
    }
    let mut err = 0.0f64;
    for i in 0..m {
        kron[i] *= h;
        gauss[i] *= h;
        err = err.max((kron[i] - gauss[i]).norm());
    }
    (kron, err)
}

/// Globally adaptive Gauss–Kronrod (7/15) integration of an `m`-component
/// integrand over `[a, b]`. The integrand writes its values into the slice.
pub fn integrate<F>(m: usize, a: f64, b: f64, opts: QuadOptions, mut f: F) -> Result<QuadResult>
where
    F: FnMut(f64, &mut [Complex64]),
{
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    let (v, e) = gk15(m, a, b, &mut f, &mut buf);
    let mut intervals = vec![Interval { a, b, values: v, error: e }];
    let mut evaluations = 15;
    loop {
        let mut total = vec![Complex64::new(0.0, 0.0); m];
        let mut total_err = 0.0;
        for iv in &intervals {
            for i in 0..m {
                total[i] += iv.values[i];
            }
            total_err += iv.error;
        }
        let scale = total.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let target = opts.abs_tol.max(opts.rel_tol * scale);
        if total_err <= target {
            return Ok(QuadResult { values: total, error: total_err, evaluations });
        }
        if intervals.len() >= opts.max_intervals {
            return Err(Error::ToleranceNotReached { estimate: total_err });
        }
        // split the worst interval; ties resolve to the lowest index
        let (worst, _) = intervals
            .iter()
            .enumerate()
            .fold((0, -1.0), |(bi, be), (i, iv)| if iv.error > be { (i, iv.error) } else { (bi, be) });
        let iv = intervals.swap_remove(worst);
        let mid = 0.5 * (iv.a + iv.b);
        if mid <= iv.a || mid >= iv.b {
            return Err(Error::ToleranceNotReached { estimate: total_err });
        }
        let (v1, e1) = gk15(m, iv.a, mid, &mut f, &mut buf);
        let (v2, e2) = gk15(m, mid, iv.b, &mut f, &mut buf);
        evaluations += 30;
        intervals.push(Interval { a: iv.a, b: mid, values: v1, error: e1 });
        intervals.push(Interval { a: mid, b: iv.b, values: v2, error: e2 });
        // keep the reduction order independent of split history
        intervals.sort_by(|p, q| p.a.partial_cmp(&q.a).unwrap());
    }
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = x;
                p0 = 1.0;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = 0.5 * (x + 1.0);
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gk_integrates_exp() {
        let r = integrate(1, 0.0, 1.0, QuadOptions::default(), |x, out| {
            out[0] = Complex64::new(x.exp(), 0.0)
        })
        .unwrap();
        assert!((r.values[0].re - (1f64.exp() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn gk_handles_endpoint_sqrt() {
        let r = integrate(1, 0.0, 1.0, QuadOptions::default(), |x, out| {
            out[0] = Complex64::new(1.0 / x.sqrt(), 0.0)
        })
        .unwrap();
        assert!((r.values[0].re - 2.0).abs() < 1e-10);
    }

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..2 * n {
                let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                assert!((s - 1.0 / (deg as f64 + 1.0)).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }
}
