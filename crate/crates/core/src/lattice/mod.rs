//! Discrete `d/dz` on square-tiled surfaces and the spectra of its two
//! self-adjoint products.

mod dbar;
mod spectra;
mod surface;

pub use dbar::{assemble_d, DiscreteDbar, Triplets};
pub use spectra::{
    convergence_study, convergence_table, dstar_d_eigenvalues, hermitian_eigenvalues, spectra, spectra_of, symmetry_generator, ConvergenceTable,
    EigenvalueTrend, KernelCount, ResolutionRow, Spectra, KERNEL_SWEEP, KERNEL_THRESHOLD,
};
pub use surface::{parse_cycles, two_cone_genus_two, ConePoint, Corner, SquareTiledSurface};
