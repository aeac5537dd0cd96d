//! Local charts on the curve and point evaluation in them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::curve::{c64, ChartTag, HyperellipticCurve, SurfacePoint};
use crate::error::{Error, Result};

/// A point together with the local coordinate it is expressed in.
///
/// `jac = dx/dz` and `r = jac / y`, kept separately so that branch charts
/// (where `y = 0` and `jac = 0`) stay finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub x: Complex64,
    pub y: Complex64,
    pub jac: Complex64,
    pub r: Complex64,
}

impl ChartPoint {
    /// Point in the plain coordinate `z = x`.
    pub fn in_x(x: Complex64, y: Complex64) -> Self {
        ChartPoint { x, y, jac: c64(1.0, 0.0), r: y.inv() }
    }

    pub fn surface_point(&self) -> SurfacePoint {
        SurfacePoint::finite(self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ChartKind {
    /// `z = x - x0`.
    Regular { x0: Complex64, y0: Complex64 },
    /// `x = e + z^2`, `y = z w(z)` with `w(0) = sqrt(f(x)/(x - e))` principal.
    Branch { index: usize, e: Complex64, w0: Complex64 },
}

/// Local coordinate centred at a point of the curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    pub kind: ChartKind,
    /// Radius in the chart coordinate within which points are evaluated directly.
    pub radius: f64,
}

impl Chart {
    pub fn at(curve: &HyperellipticCurve, p: &SurfacePoint) -> Result<Chart> {
        if p.chart == ChartTag::Infinity {
            return Err(Error::Unsupported("points at infinity as chart centres".into()));
        }
        if let Some(i) = curve.branch_index(p.x) {
            let e = curve.branch_points()[i];
            let w0 = curve.deflated(i, e).sqrt();
            let dist = curve.branch_distance_except(e, Some(i));
            return Ok(Chart { kind: ChartKind::Branch { index: i, e, w0 }, radius: 0.5 * dist.sqrt() });
        }
        curve.check_point(p)?;
        let dist = curve.nearest_branch_point(p.x).1;
        Ok(Chart { kind: ChartKind::Regular { x0: p.x, y0: p.y }, radius: 0.25 * dist })
    }

    pub fn centre(&self) -> SurfacePoint {
        match self.kind {
            ChartKind::Regular { x0, y0 } => SurfacePoint::finite(x0, y0),
            ChartKind::Branch { e, .. } => SurfacePoint::finite(e, c64(0.0, 0.0)),
        }
    }

    /// Natural length scale of the chart.
    pub fn scale(&self) -> f64 {
        self.radius.min(1.0)
    }

    pub fn point(&self, curve: &HyperellipticCurve, z: Complex64) -> Result<ChartPoint> {
        if z.norm() > self.radius {
            return Err(Error::NumericallyDegenerate);
        }
        Ok(match self.kind {
            ChartKind::Regular { x0, y0 } => {
                let x = x0 + z;
                let y = curve.point_near(x, y0).y;
                ChartPoint::in_x(x, y)
            }
            ChartKind::Branch { index, e, w0 } => {
                let x = e + z * z;
                let w = curve.deflated(index, x).sqrt();
                let w = if (w - w0).norm() <= (w + w0).norm() { w } else { -w };
                ChartPoint { x, y: z * w, jac: z * 2.0, r: w.inv() * 2.0 }
            }
        })
    }
}
