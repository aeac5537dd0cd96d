//! Fit the local expansions of the harmonic functions H_k at the cone points
//! and compare the coefficients with the kernel formulas.
//!
//!     cargo run --example harmonic

use conic_spectra::curve::{c64, sextic_test_curve, BasisScheme, Tolerances};
use conic_spectra::harmonic::harmonic_check;
use conic_spectra::kernels::KernelContext;
use conic_spectra::smatrix::ConicalDivisor;

fn main() -> conic_spectra::Result<()> {
    let curve = sextic_test_curve().build(Tolerances::default())?;
    let ctx = KernelContext::new(curve, BasisScheme::Lexicographic)?;
    let canonical = ConicalDivisor::from_omega(&ctx.curve, &[c64(-0.3, -0.2), c64(1.0, 0.0)], None)?;
    let generic = ConicalDivisor::with_chart_frames(&ctx.curve, ctx.generic_points(2, 8))?;
    for (name, d) in [("zeros of omega, distinguished frames", canonical), ("generic pair, chart frames", generic)] {
        let chk = harmonic_check(&d, &ctx)?;
        println!("{name}");
        println!("  coef   k j  kernel                        fitted                        |diff|    tol");
        for r in &chk.rows {
            println!(
                "  {:<6} {} {}  {:<29} {:<29} {:.1e}  {:.0e}",
                format!("{:?}", r.coefficient),
                r.k,
                r.j,
                format!("{:.10}", r.kernel_value),
                format!("{:.10}", r.fitted_value),
                r.abs_diff,
                r.tolerance
            );
        }
        println!("  real parts of periods {:?}, all pass: {}", chk.period_real_parts, chk.all_pass());
    }
    Ok(())
}
