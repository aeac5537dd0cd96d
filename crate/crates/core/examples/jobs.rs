//! Run JSON jobs through the library, as the command-line tool does.
//!
//!     cargo run --example jobs [FILE.json ...]
//!
//! Without arguments, runs every job in `examples/jobs/` and prints each
//! report's checks.

use std::path::PathBuf;

use conic_spectra::cli::{run, JobConfig, PeriodCache};

fn main() -> conic_spectra::Result<()> {
    let mut files: Vec<PathBuf> = std::env::args().skip(1).map(PathBuf::from).collect();
    if files.is_empty() {
        let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/jobs");
        files = std::fs::read_dir(dir).map(|d| d.filter_map(|e| e.ok()).map(|e| e.path()).collect()).unwrap_or_default();
        files.retain(|p| p.extension().is_some_and(|e| e == "json"));
        files.sort();
    }
    let cache = PeriodCache::from_env();
    for f in files {
        let cfg = JobConfig::from_file(&f)?;
        let (report, _) = run(&cfg, &cache)?;
        println!("{} ({}): {}", f.display(), report.command.name(), if report.pass { "pass" } else { "FAIL" });
        for c in &report.checks {
            println!("  {:<40} {:>12.3e} {:?} {:.1e}", c.name, c.value, c.relation, c.bound);
        }
    }
    Ok(())
}
