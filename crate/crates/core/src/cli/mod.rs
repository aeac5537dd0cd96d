//! Command-line orchestration: parse flags and a JSON job, run it, write a report.
//!
//! Exit codes: 0 all declared checks pass, 1 computation failed, 2 invalid
//! configuration, 3 some check failed.

mod cache;
mod commands;
mod config;
mod report;
mod suite;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

pub use cache::{cache_key, CacheStatus, PeriodCache, CACHE_ENV};
pub use commands::{bounds, dispatch, divisor, sample_pairs};
pub use config::{invalid, parse_budget, Command, CurveInput, JobConfig, LatticeSpec, PointSpec, SuiteKind};
pub use report::{version, Check, Outcome, Relation, Report};
pub use suite::{determinism_jobs, marking_comparison, payload_of, table, test_omega, SuiteSizes};

use crate::error::{Error, Result};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_COMPUTATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CHECKS: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "conic-spectra", version, about = "Spectral invariants of flat conical metrics on hyperelliptic curves")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
    /// JSON job file; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Curve: "quintic", "sextic" or a JSON object {"f": [[re, im], ...]}.
    #[arg(long, global = true)]
    pub curve: Option<String>,
    /// Seed for sampled points and Monte Carlo cross-checks (default 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Quadrature budget "LEVEL,ORDER[,MAX_CELLS]".
    #[arg(long, global = true)]
    pub budget: Option<String>,
    /// Report path; CSV attachments are written next to it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for the parallel parts (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Multiplies the period, root and separation tolerances.
    #[arg(long, global = true)]
    pub tolerance_scale: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Quick,
    Full,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Period matrices and the Riemann matrix.
    Periods,
    /// W, Bergman and Schiffer kernels and projective connections at points.
    Kernels,
    /// S(0) blocks and the Bergman matrix of a divisor.
    Smatrix,
    /// Rank test for canonical divisors (genus 2).
    CanonicalTest,
    /// Harmonic-function fits against the kernel formulas.
    HarmonicCheck,
    /// T(0), T'(0) and the constant C2 (genus 2).
    C2,
    /// Discrete d/dz spectra on a square-tiled surface.
    Lattice {
        /// Horizontal gluing in cycle notation, e.g. "(1 2 3 4)".
        #[arg(long)]
        h: Option<String>,
        /// Vertical gluing in cycle notation.
        #[arg(long)]
        v: Option<String>,
        /// Comma-separated grid resolutions.
        #[arg(long, value_delimiter = ',')]
        resolutions: Option<Vec<usize>>,
    },
    /// The acceptance checks.
    Suite {
        #[arg(value_enum)]
        kind: Option<SuiteArg>,
    },
}

impl Sub {
    pub fn command(&self) -> Command {
        match self {
            Sub::Periods => Command::Periods,
            Sub::Kernels => Command::Kernels,
            Sub::Smatrix => Command::Smatrix,
            Sub::CanonicalTest => Command::CanonicalTest,
            Sub::HarmonicCheck => Command::HarmonicCheck,
            Sub::C2 => Command::C2,
            Sub::Lattice { .. } => Command::Lattice,
            Sub::Suite { .. } => Command::Suite,
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::ConfigInvalid { .. } => EXIT_CONFIG,
        _ => EXIT_COMPUTATION,
    }
}

fn parse_curve(s: &str) -> Result<CurveInput> {
    if s.trim_start().starts_with('{') {
        let spec = serde_json::from_str(s).map_err(|e| invalid("--curve", e.to_string()))?;
        Ok(CurveInput::Spec(spec))
    } else {
        Ok(CurveInput::Named(s.to_string()))
    }
}

/// The job described by the flags and the optional config file.
pub fn resolve_config(cli: &Cli) -> Result<JobConfig> {
    let mut cfg = match &cli.config {
        Some(p) => JobConfig::from_file(p)?,
        None => JobConfig::default(),
    };
    let command = cli.command.command();
    match cfg.command {
        Some(c) if c != command => {
            return Err(invalid("command", format!("config says {:?} but the subcommand is {:?}", c.name(), command.name())))
        }
        _ => cfg.command = Some(command),
    }
    if let Some(c) = &cli.curve {
        cfg.curve = Some(parse_curve(c)?);
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(b) = &cli.budget {
        cfg.budget = parse_budget(b)?;
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    if let Some(t) = cli.tolerance_scale {
        cfg.tolerance_scale = t;
    }
    match &cli.command {
        Sub::Lattice { h, v, resolutions } => {
            if h.is_some() || v.is_some() || resolutions.is_some() {
                let base = cfg.lattice.clone();
                let (h, v) = match (h, v, &base) {
                    (Some(h), Some(v), _) => (h.clone(), v.clone()),
                    (h, v, Some(b)) => (h.clone().unwrap_or(b.h.clone()), v.clone().unwrap_or(b.v.clone())),
                    _ => return Err(invalid("lattice", "give both --h and --v")),
                };
                cfg.lattice = Some(LatticeSpec {
                    h,
                    v,
                    resolutions: resolutions.clone().or(base.as_ref().map(|b| b.resolutions.clone())).unwrap_or(vec![8, 16, 32]),
                    eigenvalues: base.map(|b| b.eigenvalues).unwrap_or(5),
                });
            }
        }
        Sub::Suite { kind } => {
            if let Some(k) = kind {
                cfg.suite = Some(match k {
                    SuiteArg::Quick => SuiteKind::Quick,
                    SuiteArg::Full => SuiteKind::Full,
                });
            }
            cfg.suite.get_or_insert(SuiteKind::Quick);
        }
        _ => {}
    }
    if cli.workers == Some(0) {
        return Err(invalid("--workers", "must be positive"));
    }
    cfg.validate(command)?;
    Ok(cfg)
}

/// Run a validated job. The command comes from `cfg.command`.
pub fn run(cfg: &JobConfig, cache: &PeriodCache) -> Result<(Report, Outcome)> {
    let command = cfg.command.ok_or_else(|| invalid("command", "missing"))?;
    cfg.validate(command)?;
    let start = Instant::now();
    let outcome = dispatch(cfg, command, cache)?;
    let report = Report::new(command, cfg.clone(), &outcome, start.elapsed().as_secs_f64());
    Ok((report, outcome))
}

fn attachment_path(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "report".into());
    out.with_file_name(format!("{stem}.{suffix}"))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::Unsupported(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| Error::Unsupported(format!("{}: {e}", path.display())))
}

/// Write the payload to `--out` (or stdout), attachments beside it and the
/// wall time to a `.timing.json` sidecar.
pub fn emit(report: &Report, outcome: &Outcome) -> Result<()> {
    let payload = report.payload_json();
    match &report.inputs.out {
        Some(out) => {
            write_file(out, &payload)?;
            for (suffix, text) in &outcome.attachments {
                write_file(&attachment_path(out, suffix), text)?;
            }
            let timing = serde_json::json!({ "wall_time_s": report.wall_time_s, "version": report.version });
            write_file(&attachment_path(out, "timing.json"), &format!("{timing:#}\n"))?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(payload.as_bytes()).map_err(|e| Error::Unsupported(e.to_string()))?;
        }
    }
    Ok(())
}

fn summary(report: &Report) -> String {
    let mut s = if report.command == Command::Suite { table(report) } else { String::new() };
    let failed: Vec<&Check> = report.failed_checks().collect();
    s.push_str(&format!(
        "{}: {} of {} checks pass, wall time {:.2} s\n",
        report.command.name(),
        report.checks.len() - failed.len(),
        report.checks.len(),
        report.wall_time_s
    ));
    for c in failed {
        s.push_str(&format!("  failed {}: {:e} vs {:e}\n", c.name, c.value, c.bound));
    }
    s
}

fn execute(cli: &Cli) -> Result<Report> {
    let cfg = resolve_config(cli)?;
    let cache = PeriodCache::from_env();
    let go = || -> Result<Report> {
        let (report, outcome) = run(&cfg, &cache)?;
        emit(&report, &outcome)?;
        Ok(report)
    };
    match cli.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| invalid("--workers", e.to_string()))?
            .install(go),
        None => go(),
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
        }
    };
    match execute(&cli) {
        Ok(report) => {
            eprint!("{}", summary(&report));
            if report.pass {
                EXIT_PASS
            } else {
                EXIT_CHECKS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            exit_code(&e)
        }
    }
}
