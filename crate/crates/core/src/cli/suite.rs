//! `suite quick|full`: the acceptance checks as one job.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::cache::PeriodCache;
use super::commands::{bounds, dispatch};
use super::config::{Command, CurveInput, JobConfig, LatticeSpec, PointSpec, SuiteKind};
use super::report::{Check, Outcome, Report};
use crate::curve::{c64, BasisScheme};
use crate::error::Result;
use crate::integrals::QuadratureBudget;
use crate::kernels::{FrameJet, KernelContext};

/// Sizes that distinguish the quick run from the full one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSizes {
    pub kernel_points: usize,
    pub marking_points: usize,
    pub random_pairs: usize,
    pub approach_steps: usize,
    pub harmonic_curves: Vec<String>,
    pub budget: QuadratureBudget,
    pub resolutions: Vec<usize>,
}

impl SuiteSizes {
    pub fn for_kind(kind: SuiteKind) -> Self {
        match kind {
            SuiteKind::Quick => SuiteSizes {
                kernel_points: 2,
                marking_points: 2,
                random_pairs: 10,
                approach_steps: 10,
                harmonic_curves: vec!["sextic".into()],
                budget: QuadratureBudget { level: 0, order: 6, ..Default::default() },
                resolutions: vec![4, 8, 16],
            },
            SuiteKind::Full => SuiteSizes {
                kernel_points: 5,
                marking_points: 4,
                random_pairs: 50,
                approach_steps: 10,
                harmonic_curves: vec!["quintic".into(), "sextic".into()],
                budget: QuadratureBudget::default(),
                resolutions: vec![8, 16, 32],
            },
        }
    }
}

pub const CURVES: [&str; 2] = ["quintic", "sextic"];

/// `omega = (x - a) dx / y` with zeros away from branch points on both test curves.
pub fn test_omega(a: Complex64) -> Vec<[f64; 2]> {
    vec![[-a.re, -a.im], [1.0, 0.0]]
}

pub fn omega_a() -> Complex64 {
    c64(0.3, 0.2)
}

pub fn omega_b() -> Complex64 {
    c64(-0.4, 0.5)
}

fn sub(cfg: &JobConfig, command: Command, curve: Option<&str>) -> JobConfig {
    JobConfig {
        command: Some(command),
        curve: curve.map(|c| CurveInput::Named(c.to_string())),
        tolerances: cfg.tolerances,
        tolerance_scale: cfg.tolerance_scale,
        seed: cfg.seed,
        rank_threshold: cfg.rank_threshold,
        ..Default::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionRow {
    pub id: usize,
    pub title: String,
    pub pass: bool,
    pub checks: usize,
    pub failed: Vec<String>,
}

struct Criterion {
    id: usize,
    title: &'static str,
    checks: Vec<Check>,
    details: Value,
}

impl Criterion {
    fn new(id: usize, title: &'static str) -> Self {
        Criterion { id, title, checks: Vec::new(), details: json!({}) }
    }

    fn absorb(&mut self, label: &str, o: Outcome) {
        self.checks.extend(o.checks.into_iter().map(|mut c| {
            c.name = format!("{label}.{}", c.name);
            c
        }));
        self.details[label] = o.results;
    }
}

fn periods(cfg: &JobConfig, cache: &PeriodCache) -> Result<Criterion> {
    let mut c = Criterion::new(1, "period pipeline");
    for name in CURVES {
        c.absorb(name, dispatch(&sub(cfg, Command::Periods, Some(name)), Command::Periods, cache)?);
    }
    Ok(c)
}

fn kernels(cfg: &JobConfig, cache: &PeriodCache, sizes: &SuiteSizes) -> Result<Criterion> {
    let mut c = Criterion::new(2, "W validation");
    for name in CURVES {
        let job = JobConfig { random_points: Some(sizes.kernel_points), seed: cfg.seed.wrapping_add(101), ..sub(cfg, Command::Kernels, Some(name)) };
        c.absorb(name, dispatch(&job, Command::Kernels, cache)?);
    }
    Ok(c)
}

/// Schiffer kernel and projective connection under two markings.
pub fn marking_comparison(a: &KernelContext, b: &KernelContext, points: usize, seed: u64) -> Result<(f64, f64, Value)> {
    let pts = a.generic_points(points, seed);
    let mut framed = Vec::new();
    let mut worst_conn = 0.0f64;
    let mut conn = Vec::new();
    for p in &pts {
        let f = FrameJet::at_point(&a.curve, p)?;
        let (sa, sb) = (a.schiffer_proj_connection(&f)?, b.schiffer_proj_connection(&f)?);
        let rel = (sa - sb).norm() / sa.norm().max(1.0);
        worst_conn = worst_conn.max(rel);
        conn.push(json!({ "x": p.x, "y": p.y, "first": sa, "second": sb, "relative_difference": rel }));
        framed.push(f.centre_point(&a.curve)?);
    }
    let mut worst_kernel = 0.0f64;
    let mut kern = Vec::new();
    for i in 0..framed.len() {
        for j in i + 1..framed.len() {
            let (sa, sb) = (a.schiffer_kernel(&framed[i], &framed[j])?, b.schiffer_kernel(&framed[i], &framed[j])?);
            let (wa, wb) = (a.w(&framed[i], &framed[j])?, b.w(&framed[i], &framed[j])?);
            let rel = (sa - sb).norm() / sa.norm().max(1e-300);
            worst_kernel = worst_kernel.max(rel);
            kern.push(json!({
                "i": i, "j": j, "first": sa, "second": sb, "relative_difference": rel,
                "w_relative_difference": (wa - wb).norm() / wa.norm().max(1e-300),
            }));
        }
    }
    Ok((worst_kernel, worst_conn, json!({ "schiffer_kernel": kern, "schiffer_connection": conn })))
}

fn marking(cfg: &JobConfig, cache: &PeriodCache, sizes: &SuiteSizes) -> Result<Criterion> {
    let mut c = Criterion::new(3, "marking independence");
    for name in CURVES {
        let job = sub(cfg, Command::Kernels, Some(name));
        let curve = job.curve()?;
        let (a, _) = cache.kernel_context(curve.clone(), BasisScheme::Lexicographic)?;
        let (b, _) = cache.kernel_context(curve, BasisScheme::Transposed)?;
        let distinct = a.basis.a != b.basis.a || a.basis.b != b.basis.b || a.basis.order != b.basis.order;
        let (k, s, details) = marking_comparison(&a, &b, sizes.marking_points.max(2), cfg.seed.wrapping_add(303))?;
        c.checks.push(Check::holds(format!("{name}.markings_distinct"), distinct));
        c.checks.push(Check::below(format!("{name}.schiffer_kernel_relative"), k, 1e-5));
        c.checks.push(Check::below(format!("{name}.schiffer_connection_relative"), s, 1e-5));
        c.details[name] = details;
    }
    Ok(c)
}

fn canonical(cfg: &JobConfig, cache: &PeriodCache, sizes: &SuiteSizes) -> Result<Criterion> {
    let mut c = Criterion::new(4, "canonical divisor dichotomy");
    for name in CURVES {
        let job = JobConfig {
            random_pairs: Some(sizes.random_pairs),
            approach_steps: Some(sizes.approach_steps),
            seed: cfg.seed.wrapping_add(404),
            ..sub(cfg, Command::CanonicalTest, Some(name))
        };
        c.absorb(name, dispatch(&job, Command::CanonicalTest, cache)?);
    }
    Ok(c)
}

/// Two seeded generic points, as explicit divisor points.
fn generic_divisor(cfg: &JobConfig, cache: &PeriodCache, name: &str) -> Result<Vec<PointSpec>> {
    let job = sub(cfg, Command::HarmonicCheck, Some(name));
    let (ctx, _) = cache.kernel_context(job.curve()?, job.scheme)?;
    Ok(ctx.generic_points(2, cfg.seed.wrapping_add(505)).iter().map(PointSpec::from_point).collect())
}

fn harmonic(cfg: &JobConfig, cache: &PeriodCache, sizes: &SuiteSizes) -> Result<Criterion> {
    let mut c = Criterion::new(5, "harmonic cross-validation");
    for name in &sizes.harmonic_curves {
        let canonical = JobConfig { omega: Some(test_omega(omega_a())), ..sub(cfg, Command::HarmonicCheck, Some(name)) };
        c.absorb(&format!("{name}.canonical"), dispatch(&canonical, Command::HarmonicCheck, cache)?);
        let generic = JobConfig { points: generic_divisor(cfg, cache, name)?, ..sub(cfg, Command::HarmonicCheck, Some(name)) };
        c.absorb(&format!("{name}.generic"), dispatch(&generic, Command::HarmonicCheck, cache)?);
    }
    Ok(c)
}

fn c2_job(cfg: &JobConfig, name: &str, omega: Vec<[f64; 2]>, budget: QuadratureBudget) -> JobConfig {
    JobConfig { omega: Some(omega), budget, ..sub(cfg, Command::C2, Some(name)) }
}

fn c2_value(o: &Outcome) -> (Complex64, f64) {
    let z = &o.results["C2"];
    (c64(z[0].as_f64().unwrap_or(f64::NAN), z[1].as_f64().unwrap_or(f64::NAN)), o.results["err"].as_f64().unwrap_or(f64::NAN))
}

fn c2_criteria(cfg: &JobConfig, cache: &PeriodCache, sizes: &SuiteSizes) -> Result<(Criterion, Criterion)> {
    let mut layer = Criterion::new(6, "T(0) and T'(0) layer");
    let mut universal = Criterion::new(7, "C2 universality");
    let doubled: Vec<[f64; 2]> = test_omega(omega_a()).iter().map(|c| [2.0 * c[0], 2.0 * c[1]]).collect();
    let jobs = [
        ("quintic.omega", c2_job(cfg, "quintic", test_omega(omega_a()), sizes.budget)),
        ("quintic.two_omega", c2_job(cfg, "quintic", doubled, sizes.budget)),
        ("sextic.omega", c2_job(cfg, "sextic", test_omega(omega_a()), sizes.budget)),
        ("sextic.other_omega", c2_job(cfg, "sextic", test_omega(omega_b()), sizes.budget)),
    ];
    let mut values = Vec::new();
    for (label, job) in jobs {
        let o = dispatch(&job, Command::C2, cache)?;
        values.push((label, c2_value(&o)));
        if label.ends_with(".omega") {
            layer.absorb(label, o.clone());
        }
        universal.details[label] = json!({ "C2": o.results["C2"], "err": o.results["err"] });
    }
    let compare = [(0, 1, "omega_vs_two_omega"), (0, 2, "quintic_vs_sextic"), (2, 3, "sextic_omega_vs_other")];
    for (i, j, name) in compare {
        let ((_, (a, ea)), (_, (b, eb))) = (values[i], values[j]);
        let diff = (a - b).norm();
        // the combined 1% bar; the reported quadrature bars are recorded beside it
        let bar = 0.01 * 0.5 * (a.norm() + b.norm());
        universal.checks.push(Check::below(name, diff, bar));
        universal.details[format!("{name}.reported_error_sum")] = json!(ea + eb);
        universal.details[format!("{name}.difference")] = json!(diff);
    }
    for (label, (v, e)) in &values {
        universal.checks.push(Check::below(format!("{label}.relative_error"), e / v.norm(), bounds::C2_REL));
    }
    Ok((layer, universal))
}

fn lattice(cfg: &JobConfig, sizes: &SuiteSizes) -> Result<Criterion> {
    let mut c = Criterion::new(8, "discrete isospectrality");
    let job = JobConfig {
        lattice: Some(LatticeSpec { h: "(1 2 3 4)".into(), v: "(1 2)(3 4)".into(), resolutions: sizes.resolutions.clone(), eigenvalues: 5 }),
        ..sub(cfg, Command::Lattice, None)
    };
    c.absorb("genus_two", dispatch(&job, Command::Lattice, &PeriodCache::default())?);
    Ok(c)
}

/// Small jobs run twice from scratch; their payloads must match byte for byte.
pub fn determinism_jobs(cfg: &JobConfig) -> Vec<JobConfig> {
    vec![
        sub(cfg, Command::Periods, Some("quintic")),
        JobConfig { random_pairs: Some(4), approach_steps: Some(4), ..sub(cfg, Command::CanonicalTest, Some("sextic")) },
        JobConfig {
            omega: Some(test_omega(omega_a())),
            budget: QuadratureBudget { level: 0, order: 4, ..Default::default() },
            ..sub(cfg, Command::C2, Some("sextic"))
        },
        JobConfig {
            lattice: Some(LatticeSpec { h: "(1 2 3 4)".into(), v: "(1 2)(3 4)".into(), resolutions: vec![4, 6], eigenvalues: 3 }),
            ..sub(cfg, Command::Lattice, None)
        },
    ]
}

pub fn payload_of(job: &JobConfig, cache: &PeriodCache) -> Result<String> {
    let command = job.command.unwrap_or(Command::Suite);
    let o = dispatch(job, command, cache)?;
    Ok(Report::new(command, job.clone(), &o, 0.0).payload_json())
}

fn determinism(cfg: &JobConfig) -> Result<Criterion> {
    let mut c = Criterion::new(9, "determinism");
    for job in determinism_jobs(cfg) {
        let name = job.command.map(|c| c.name()).unwrap_or("job");
        // no cache: both runs compute everything
        let a = payload_of(&job, &PeriodCache::default())?;
        let b = payload_of(&job, &PeriodCache::default())?;
        c.checks.push(Check::holds(format!("{name}.identical_payload"), a == b));
        c.details[name] = json!({ "bytes": a.len() });
    }
    Ok(c)
}

pub fn suite(cfg: &JobConfig, cache: &PeriodCache) -> Result<Outcome> {
    let kind = cfg.suite.unwrap_or(SuiteKind::Quick);
    let sizes = SuiteSizes::for_kind(kind);
    let (layer, universal) = c2_criteria(cfg, cache, &sizes)?;
    let criteria = vec![
        periods(cfg, cache)?,
        kernels(cfg, cache, &sizes)?,
        marking(cfg, cache, &sizes)?,
        canonical(cfg, cache, &sizes)?,
        harmonic(cfg, cache, &sizes)?,
        layer,
        universal,
        lattice(cfg, &sizes)?,
        determinism(cfg)?,
    ];
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let mut details = serde_json::Map::new();
    for c in criteria {
        rows.push(CriterionRow {
            id: c.id,
            title: c.title.to_string(),
            pass: c.checks.iter().all(|k| k.pass),
            checks: c.checks.len(),
            failed: c.checks.iter().filter(|k| !k.pass).map(|k| k.name.clone()).collect(),
        });
        details.insert(format!("{}", c.id), c.details);
        checks.extend(c.checks.into_iter().map(|mut k| {
            k.name = format!("{}.{}", c.id, k.name);
            k
        }));
    }
    let results = json!({ "kind": kind, "sizes": sizes, "criteria": rows, "details": details });
    Ok(Outcome { results, checks, attachments: Vec::new() })
}

/// The criterion table as plain text, one line per criterion.
pub fn table(report: &Report) -> String {
    let rows: Vec<CriterionRow> = serde_json::from_value(report.results["criteria"].clone()).unwrap_or_default();
    let mut out = String::new();
    for r in rows {
        out.push_str(&format!("{} criterion {} ({}): {} checks", if r.pass { "PASS" } else { "FAIL" }, r.id, r.title, r.checks));
        if !r.failed.is_empty() {
            out.push_str(&format!(", failed: {}", r.failed.join(", ")));
        }
        out.push('\n');
    }
    out
}
