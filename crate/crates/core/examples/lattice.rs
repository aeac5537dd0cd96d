//! Spectra of D^*D and DD^* for the discrete d/dz on a genus 2 origami, and
//! the convergence of the low eigenvalues of 4 D^*D.
//!
//!     cargo run --release --example lattice [N ...]

use conic_spectra::lattice::{convergence_table, spectra, two_cone_genus_two};

fn main() -> conic_spectra::Result<()> {
    let mut ns: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    if ns.is_empty() {
        ns = vec![4, 8, 16];
    }
    let surface = two_cone_genus_two();
    let mut all = Vec::new();
    for &n in &ns {
        let s = spectra(&surface, n)?;
        println!(
            "n = {n}: {} vertices, {} cells, ker D = {}, ker D* = {} (cells - vertices + ker D = {}), mismatch {:.1e}, log-product difference {:.1e}",
            s.vertices,
            s.cells,
            s.ker_d,
            s.ker_dstar,
            s.cells_minus_vertices + s.ker_d as i64,
            s.max_relative_mismatch,
            s.log_product_difference()
        );
        let low: Vec<String> = s.nonzero_dstar_d().iter().take(5).map(|x| format!("{:.5}", 4.0 * x)).collect();
        println!("  first eigenvalues of 4 D*D: {}", low.join(", "));
        all.push((n, s.dstar_d));
    }
    if all.len() >= 3 {
        let t = convergence_table(&all, 5)?;
        for (k, tr) in t.trends.iter().enumerate() {
            println!("  eigenvalue {}: ratios {:.2?}, limit {:.5?}, monotone {}", k + 1, tr.ratios, tr.extrapolated, tr.monotone);
        }
    }
    Ok(())
}
