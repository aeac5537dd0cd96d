//! Local frames: jets of a coordinate `xi` in a chart coordinate `z`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Chart, ChartKind, ChartPoint};
use crate::curve::{c64, HyperellipticCurve, SurfacePoint};
use crate::error::{Error, Result};
use crate::series::{substitute_square, taylor_shift, Series};

const JET_LEN: usize = 16;

/// A coordinate `xi = xi(z)` near the centre of `chart`, stored as a jet
/// together with its inverse `z = z(xi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameJet {
    pub chart: Chart,
    /// Coefficients of `xi(z)`; the constant term is zero.
    pub xi: Vec<Complex64>,
    /// Coefficients of `z(xi)`.
    pub zeta: Vec<Complex64>,
    /// `+1` for the principal root in `xi = sqrt(w)`, `-1` for the other.
    pub branch_sign: i8,
    /// Whether `|omega|^2 = 4 |xi|^2 |dxi|^2` holds for a supplied `omega`.
    pub distinguished: bool,
}

fn horner(c: &[Complex64], t: Complex64) -> Complex64 {
    c.iter().rev().fold(c64(0.0, 0.0), |acc, &a| acc * t + a)
}

fn dhorner(c: &[Complex64], t: Complex64) -> Complex64 {
    c.iter().enumerate().skip(1).rev().fold(c64(0.0, 0.0), |acc, (k, &a)| acc * t + a * k as f64)
}

impl FrameJet {
    /// The chart coordinate itself.
    pub fn chart_frame(chart: Chart) -> Self {
        let id = vec![c64(0.0, 0.0), c64(1.0, 0.0)];
        FrameJet { chart, xi: id.clone(), zeta: id, branch_sign: 1, distinguished: false }
    }

    pub fn at_point(curve: &HyperellipticCurve, p: &SurfacePoint) -> Result<Self> {
        Ok(Self::chart_frame(Chart::at(curve, p)?))
    }

    pub fn centre(&self) -> SurfacePoint {
        self.chart.centre()
    }

    /// `xi -> c xi`.
    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.xi.iter_mut().for_each(|a| *a *= c);
        let inv = c.inv();
        let mut p = c64(1.0, 0.0);
        for a in out.zeta.iter_mut() {
            *a *= p;
            p *= inv;
        }
        out
    }

    /// `xi -> -xi`, the other square root branch.
    pub fn flipped(&self) -> Self {
        let mut out = self.scaled(c64(-1.0, 0.0));
        out.branch_sign = -self.branch_sign;
        out
    }

    pub fn coeff(&self, k: usize) -> Complex64 {
        self.xi.get(k).copied().unwrap_or(c64(0.0, 0.0))
    }

    /// `d xi / d z` at the centre.
    pub fn p1(&self) -> Complex64 {
        self.coeff(1)
    }

    /// Schwarzian derivative `{xi, z}` at the centre.
    pub fn schwarzian(&self) -> Complex64 {
        let (p1, p2, p3) = (self.coeff(1), self.coeff(2), self.coeff(3));
        p3 * 6.0 / p1 - (p2 / p1).powi(2) * 6.0
    }

    pub fn xi_of(&self, z: Complex64) -> Complex64 {
        horner(&self.xi, z)
    }

    pub fn z_of(&self, xi: Complex64) -> Complex64 {
        horner(&self.zeta, xi)
    }

    /// Value of a one-form in this frame at the centre, from its value in the chart.
    pub fn one_form(&self, v_chart: Complex64) -> Complex64 {
        v_chart / self.p1()
    }

    /// Transport a projective connection from the chart coordinate to `xi`.
    pub fn transport_connection(&self, s_chart: Complex64) -> Complex64 {
        (s_chart - self.schwarzian()) / self.p1().powi(2)
    }

    /// The point with coordinate `xi`, with `jac = dx/dxi`.
    pub fn point(&self, curve: &HyperellipticCurve, xi: Complex64) -> Result<ChartPoint> {
        let z = self.z_of(xi);
        let dz = dhorner(&self.zeta, xi);
        let cp = self.chart.point(curve, z)?;
        Ok(ChartPoint { x: cp.x, y: cp.y, jac: cp.jac * dz, r: cp.r * dz })
    }

    /// The frame `h(xi)` for a jet `h` with zero constant term.
    pub fn then(&self, h: &[Complex64]) -> Self {
        let n = self.xi.len().max(h.len());
        let outer = Series::from_coeffs(h.to_vec(), n);
        let xi = outer.compose(&Series::from_coeffs(self.xi.clone(), n));
        let zeta = xi.reversion();
        FrameJet { chart: self.chart, xi: xi.0, zeta: zeta.0, branch_sign: self.branch_sign, distinguished: false }
    }

    /// The centre as a chart point in this frame.
    pub fn centre_point(&self, curve: &HyperellipticCurve) -> Result<ChartPoint> {
        self.point(curve, c64(0.0, 0.0))
    }
}

/// Series of `omega = o(x) dx / y` in the chart coordinate.
pub(crate) fn one_form_series(curve: &HyperellipticCurve, omega: &[Complex64], chart: &Chart, len: usize) -> Series {
    match chart.kind {
        ChartKind::Regular { x0, y0 } => {
            let y = taylor_shift(curve.coeffs(), x0, len).sqrt_with(y0);
            taylor_shift(omega, x0, len).mul(&y.inv())
        }
        ChartKind::Branch { index, e, w0 } => {
            let q = substitute_square(&taylor_shift(curve.deflated_coeffs(index), e, len));
            let w = q.sqrt_with(w0);
            let o = substitute_square(&taylor_shift(omega, e, len));
            o.mul(&w.inv().scale(c64(2.0, 0.0)))
        }
    }
}

/// The coordinate `xi` with `omega = d(xi^2)` near a simple zero `p` of
/// `omega = o(x) dx / y`, where `o` has raw coefficients `omega`.
pub fn distinguished_frame(
    curve: &HyperellipticCurve,
    omega: &[Complex64],
    p: &SurfacePoint,
    branch_sign: i8,
) -> Result<FrameJet> {
    let chart = Chart::at(curve, p)?;
    let om = one_form_series(curve, omega, &chart, JET_LEN);
    let scale = om.0.iter().take(4).map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
    if om.0[0].norm() > 1e-7 * scale || om.0[1].norm() < 1e-6 * scale {
        return Err(Error::NotASimpleZero);
    }
    let mut om = om;
    om.0[0] = c64(0.0, 0.0);
    let w = om.integrate();
    let u = w.shift_down(2);
    let root = u.0[0].sqrt() * f64::from(branch_sign.signum());
    let xi = u.sqrt_with(root).shift_up(1);
    let xi = Series::from_coeffs(xi.0[..JET_LEN - 1].to_vec(), JET_LEN - 1);
    let zeta = xi.reversion();
    Ok(FrameJet { chart, xi: xi.0, zeta: zeta.0, branch_sign: branch_sign.signum(), distinguished: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{quintic_test_curve, sextic_test_curve, Tolerances};
    use std::f64::consts::PI;

    fn zero_point(curve: &HyperellipticCurve, a: Complex64) -> SurfacePoint {
        SurfacePoint::finite(a, curve.y_principal(a))
    }

    #[test]
    fn metric_density_matches() {
        let c = sextic_test_curve().build(Tolerances::default()).unwrap();
        let a = c64(0.3, 0.2);
        let omega = [-a, c64(1.0, 0.0)];
        let fr = distinguished_frame(&c, &omega, &zero_point(&c, a), 1).unwrap();
        let r = 1e-2;
        for k in 0..8 {
            let xi = Complex64::from_polar(r, 2.0 * PI * k as f64 / 8.0);
            let pt = fr.point(&c, xi).unwrap();
            // omega / dxi = o(x) r_xi, should have modulus 2 |xi|
            let density = (omega[0] + omega[1] * pt.x) * pt.r;
            assert!((density.norm() - 2.0 * r).abs() < 1e-10, "{}", density.norm());
        }
    }

    #[test]
    fn branch_flip_and_scaling() {
        let c = quintic_test_curve().build(Tolerances::default()).unwrap();
        let a = c64(0.4, -0.5);
        let p = zero_point(&c, a);
        let fr = distinguished_frame(&c, &[-a, c64(1.0, 0.0)], &p, 1).unwrap();
        let fl = distinguished_frame(&c, &[-a, c64(1.0, 0.0)], &p, -1).unwrap();
        assert!((fr.p1() + fl.p1()).norm() < 1e-14);
        let v = c64(0.7, 0.1);
        assert!((fr.one_form(v) + fl.one_form(v)).norm() < 1e-14);
        let four = distinguished_frame(&c, &[-a * 4.0, c64(4.0, 0.0)], &p, 1).unwrap();
        for k in 1..6 {
            assert!((four.coeff(k) - fr.coeff(k) * 2.0).norm() < 1e-12);
        }
    }

    #[test]
    fn non_zero_rejected() {
        let c = quintic_test_curve().build(Tolerances::default()).unwrap();
        let p = zero_point(&c, c64(0.4, -0.5));
        assert_eq!(distinguished_frame(&c, &[c64(1.0, 0.0)], &p, 1).unwrap_err(), Error::NotASimpleZero);
    }

    #[test]
    fn schwarzian_transport_cocycle() {
        let c = quintic_test_curve().build(Tolerances::default()).unwrap();
        let base = FrameJet::at_point(&c, &zero_point(&c, c64(0.4, -0.5))).unwrap();
        let first = base.then(&[c64(0.0, 0.0), c64(1.3, 0.2), c64(0.4, -0.1), c64(0.05, 0.3)]);
        let h = [c64(0.0, 0.0), c64(0.7, -0.6), c64(-0.2, 0.1), c64(0.3, 0.0)];
        let composed = first.then(&h);
        let step = FrameJet::chart_frame(base.chart).then(&h);
        let s = c64(2.5, -1.0);
        let two_steps = step.transport_connection(first.transport_connection(s));
        let direct = composed.transport_connection(s);
        assert!((two_steps - direct).norm() < 1e-12 * direct.norm(), "{two_steps} {direct}");
    }

    #[test]
    fn identity_frame_has_no_schwarzian() {
        let c = quintic_test_curve().build(Tolerances::default()).unwrap();
        let fr = FrameJet::at_point(&c, &zero_point(&c, c64(0.4, -0.5))).unwrap();
        assert_eq!(fr.schwarzian(), c64(0.0, 0.0));
        assert_eq!(fr.transport_connection(c64(3.0, 1.0)), c64(3.0, 1.0));
    }
}
