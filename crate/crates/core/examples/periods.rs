//! Period matrices of y^2 = x^5 - x and y^2 = x^6 - 1 under two markings.
//!
//!     cargo run --example periods

use conic_spectra::curve::{build_homology_basis, period_matrix, quintic_test_curve, sextic_test_curve, BasisScheme, Tolerances};

fn main() -> conic_spectra::Result<()> {
    for (name, spec) in [("x^5 - x", quintic_test_curve()), ("x^6 - 1", sextic_test_curve())] {
        let curve = spec.build(Tolerances::default())?;
        println!("y^2 = {name}: genus {}, branch points {:?}", curve.genus(), curve.branch_points());
        for scheme in [BasisScheme::Lexicographic, BasisScheme::Transposed] {
            let basis = build_homology_basis(&curve, scheme)?;
            let p = period_matrix(&curve, &basis)?;
            println!("  {scheme:?} marking, a-cycles {:?}, b-cycles {:?}", basis.a, basis.b);
            for i in 0..p.genus {
                let row: Vec<String> = (0..p.genus).map(|j| format!("{:+.10} {:+.10}i", p.riemann[(i, j)].re, p.riemann[(i, j)].im)).collect();
                println!("    [{}]", row.join(", "));
            }
            println!(
                "    symmetry defect {:.1e}, min eigenvalue of Im B {:.6}, quadrature error {:.1e}, a-period defect {:.1e}",
                p.symmetry_defect(),
                p.im_min_eigenvalue(),
                p.error,
                p.normalization_defect(&curve, &basis, conic_spectra::curve::quad_options(&curve.tolerances()))?
            );
        }
    }
    Ok(())
}
