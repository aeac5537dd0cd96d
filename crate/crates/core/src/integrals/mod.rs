//! Integrals over the surface for the flat metric `|omega|^2`.

mod field;
pub mod mesh;
mod quadrature;
mod tdata;

pub use field::{harmonic_field, HarmonicField};
pub use quadrature::{area_from_periods, build_quadrature, Node, QuadratureBudget, SurfaceQuadrature};
pub use tdata::{
    c2_for_divisor, cal_h, coarser_budget, det_derivative, t_prime, universal_c2, C2Estimate, CalH, QuadraturePass, TData, TWO_SQRT_PI,
};
