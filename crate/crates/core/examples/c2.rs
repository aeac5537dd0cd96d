//! T(0), T'(0) and the constant C2 for several one-forms on both test curves.
//!
//!     cargo run --release --example c2 [LEVEL ORDER]

use conic_spectra::curve::{c64, quintic_test_curve, sextic_test_curve, BasisScheme, Tolerances};
use conic_spectra::integrals::{universal_c2, QuadratureBudget};
use conic_spectra::kernels::KernelContext;

fn main() -> conic_spectra::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut budget = QuadratureBudget::default();
    if let [level, order] = args[..] {
        budget = QuadratureBudget { level, order, ..budget };
    }
    for (name, spec) in [("x^5 - x", quintic_test_curve()), ("x^6 - 1", sextic_test_curve())] {
        let ctx = KernelContext::new(spec.build(Tolerances::default())?, BasisScheme::Lexicographic)?;
        for a in [c64(0.3, 0.2), c64(-0.4, 0.5)] {
            for scale in [1.0, 2.0] {
                let omega = [-a * scale, c64(scale, 0.0)];
                let e = universal_c2(&ctx, &omega, budget)?;
                println!(
                    "y^2 = {name}, omega = {scale} (x - ({a})) dx/y: C2 = {:.9} +- {:.1e}, |det T(0)| rel {:.1e}, area {:.6} (periods {:.6})",
                    e.c2, e.error, e.t.det_t0_relative, e.area, e.area_from_periods
                );
            }
        }
    }
    Ok(())
}
