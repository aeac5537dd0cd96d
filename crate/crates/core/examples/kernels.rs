//! Canonical bidifferential, Bergman and Schiffer kernels and projective
//! connections at a few seeded points.
//!
//!     cargo run --example kernels

use std::f64::consts::PI;

use conic_spectra::curve::{c64, sextic_test_curve, BasisScheme, Tolerances};
use conic_spectra::kernels::{FrameJet, KernelContext};

fn main() -> conic_spectra::Result<()> {
    let curve = sextic_test_curve().build(Tolerances::default())?;
    let ctx = KernelContext::new(curve, BasisScheme::Lexicographic)?;
    println!("correction matrix symmetry defect {:.1e}", ctx.correction.symmetry_defect);

    let pts = ctx.generic_points(3, 11);
    let mut framed = Vec::new();
    for p in &pts {
        let frame = FrameJet::at_point(&ctx.curve, p)?;
        let q = frame.centre_point(&ctx.curve)?;
        let (a, b) = ctx.w_periods(&q)?;
        let v = ctx.v(&q);
        println!("Q = ({:.4}, {:.4})", p.x, p.y);
        for j in 0..ctx.genus() {
            println!(
                "  a_{j}: {:.1e}   b_{j} - 2 pi i v_{j}(Q): {:.1e}",
                a[j].norm(),
                (b[j] - v[j] * c64(0.0, 2.0 * PI)).norm()
            );
        }
        println!("  S_B  = {:.8}", ctx.bergman_proj_connection(&frame)?);
        println!("  S_Sch = {:.8}  (diagonal limit of S: {:.8})", ctx.schiffer_proj_connection(&frame)?, ctx.schiffer_diagonal_limit(&frame)?);
        framed.push(q);
    }
    for i in 0..framed.len() {
        for j in i + 1..framed.len() {
            let (p, q) = (&framed[i], &framed[j]);
            println!(
                "({i},{j}): W = {:.8}, W(Q,P) - W(P,Q) = {:.1e}, B = {:.8}, S = {:.8}",
                ctx.w(p, q)?,
                (ctx.w(q, p)? - ctx.w(p, q)?).norm(),
                ctx.bergman_kernel(p, q),
                ctx.schiffer_kernel(p, q)?
            );
        }
    }
    Ok(())
}
