//! Topology of square-tiled surfaces from their gluing permutations.
//!
//!     cargo run --example origami -- "(1 2 3 4)" "(1 2)(3 4)"

use conic_spectra::lattice::SquareTiledSurface;

fn main() -> conic_spectra::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let examples: Vec<(String, String)> = match &args[..] {
        [h, v] => vec![(h.clone(), v.clone())],
        _ => [("(1)", "(1)"), ("(1 2)(3 4)", "(1 3)(2 4)"), ("(1 2)", "(1 3)"), ("(1 2 3 4)", "(1 2)(3 4)")]
            .iter()
            .map(|(h, v)| (h.to_string(), v.to_string()))
            .collect(),
    };
    for (h, v) in examples {
        let s = SquareTiledSurface::from_cycles(&h, &v)?;
        println!("h = {h}, v = {v}: {} squares, genus {}, chi {}", s.squares(), s.genus, s.euler_characteristic());
        for c in s.cone_points() {
            println!("  cone of angle {:.0} pi at {} corners", c.angle() / std::f64::consts::PI, c.corners.len());
        }
        println!("  total angle excess {:.4} = -2 pi chi", s.angle_excess());
        println!("  {} translation automorphisms", s.automorphisms().len());
    }
    Ok(())
}
