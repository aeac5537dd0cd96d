//! One function per subcommand; each returns results and declared checks.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde_json::{json, Value};

use super::cache::PeriodCache;
use super::config::{invalid, Command, JobConfig};
use super::report::{Check, Outcome};
use crate::curve::{build_homology_basis, c64, period_matrix_with, quad_options, SurfacePoint};
use crate::error::{Error, Result};
use crate::harmonic::harmonic_check;
use crate::integrals::{build_quadrature, c2_for_divisor};
use crate::kernels::{ChartPoint, FrameJet, KernelContext};
use crate::lattice::{convergence_table, spectra};
use crate::smatrix::{
    approach_margins, approach_start, bergman_matrix, canonical_divisor_test, genus2_canonical_oracle, s_zero, ConicalDivisor, Holonomy,
    DEFAULT_RANK_THRESHOLD,
};

/// Tolerances of the declared checks. They are fixed, not scaled with the
/// computational tolerances, so that a loosened run can fail honestly.
pub mod bounds {
    pub const RIEMANN_SYMMETRY: f64 = 1e-8;
    pub const NORMALIZATION: f64 = 1e-8;
    pub const W_A_PERIOD: f64 = 1e-6;
    pub const W_B_PERIOD_REL: f64 = 1e-5;
    pub const W_SYMMETRY: f64 = 1e-8;
    pub const HERMITIAN: f64 = 1e-10;
    pub const SAA_SYMMETRY: f64 = 1e-8;
    pub const PERIOD_REAL_PART: f64 = 1e-6;
    pub const MEAN_RESIDUAL: f64 = 1e-4;
    pub const T_PRIME_REL: f64 = 1e-3;
    pub const DET_T0_REL: f64 = 1e-8;
    pub const AREA_REL: f64 = 1e-4;
    pub const C2_REL: f64 = 1e-2;
    pub const SPECTRAL_MISMATCH: f64 = 1e-10;
    pub const LOG_PRODUCT_REL: f64 = 1e-10;
    pub const RATIO: (f64, f64) = (2.0, 6.0);
}

pub fn dispatch(cfg: &JobConfig, command: Command, cache: &PeriodCache) -> Result<Outcome> {
    match command {
        Command::Periods => periods(cfg, cache),
        Command::Kernels => kernels(cfg, cache),
        Command::Smatrix => smatrix(cfg, cache),
        Command::CanonicalTest => canonical_test(cfg, cache),
        Command::HarmonicCheck => harmonic(cfg, cache),
        Command::C2 => c2(cfg, cache),
        Command::Lattice => lattice(cfg),
        Command::Suite => super::suite::suite(cfg, cache),
    }
}

fn context(cfg: &JobConfig, cache: &PeriodCache) -> Result<KernelContext> {
    Ok(cache.kernel_context(cfg.curve()?, cfg.scheme)?.0)
}

fn max_norm<'a>(it: impl IntoIterator<Item = &'a Complex64>) -> f64 {
    it.into_iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn point_json(p: &SurfacePoint) -> Value {
    json!({ "x": p.x, "y": p.y })
}

/// Chart frame centred at `p`, and the matching chart point.
fn framed(ctx: &KernelContext, p: &SurfacePoint) -> Result<(FrameJet, ChartPoint)> {
    let f = FrameJet::at_point(&ctx.curve, p)?;
    let c = f.centre_point(&ctx.curve)?;
    Ok((f, c))
}

/// Divisor from `omega` (distinguished frames) or from `points` (chart frames).
pub fn divisor(cfg: &JobConfig, ctx: &KernelContext) -> Result<ConicalDivisor> {
    if let Some(o) = cfg.omega() {
        return ConicalDivisor::from_omega(&ctx.curve, &o, None).map_err(|e| invalid("omega", e.to_string()));
    }
    if cfg.points.is_empty() {
        return Err(invalid("omega", "give omega or the divisor points"));
    }
    let pts = cfg.points.iter().map(|p| p.resolve(&ctx.curve)).collect();
    ConicalDivisor::with_chart_frames(&ctx.curve, pts).map_err(|e| invalid("points", e.to_string()))
}

fn divisor_json(d: &ConicalDivisor) -> Value {
    json!({
        "points": d.points.iter().map(point_json).collect::<Vec<_>>(),
        "frames": if matches!(d.holonomy, Holonomy::Trivial { .. }) { "distinguished" } else { "chart" },
        "holonomy": d.holonomy,
    })
}

/// Error estimate attached to every kernel value: quadrature error of the
/// periods and of the `W` normalization.
fn kernel_error(ctx: &KernelContext) -> f64 {
    ctx.periods.error + ctx.correction.error
}

fn periods(cfg: &JobConfig, cache: &PeriodCache) -> Result<Outcome> {
    let curve = cfg.curve()?;
    let tol = curve.tolerances();
    let basis = build_homology_basis(&curve, cfg.scheme)?;
    let (pd, _) = cache.periods(&curve, cfg.scheme)?;
    let refined = period_matrix_with(&curve, &basis, quad_options(&tol.scaled(0.5)))?;
    let change = max_norm((&pd.riemann - &refined.riemann).iter());
    let normalization = pd.normalization_defect(&curve, &basis, quad_options(&tol))?;
    let export = pd.export(&curve);
    let checks = vec![
        Check::below("riemann_symmetry", export.symmetry_defect, bounds::RIEMANN_SYMMETRY),
        Check::above("im_riemann_min_eigenvalue", export.im_min_eigenvalue, 0.0),
        Check::below("a_period_normalization", normalization, bounds::NORMALIZATION),
        // the tolerance floor keeps an exactly converged rule from failing on rounding
        Check::below("refinement_change", change, 10.0 * pd.error.max(tol.period * 1e-3)),
    ];
    let results = json!({
        "genus": export.genus,
        "basis": { "scheme": basis.scheme, "a": basis.a, "b": basis.b, "order": basis.order },
        "branch_points": export.branch_points,
        "a_periods": export.a,
        "b_periods": export.b_raw,
        "normalized_coefficients": export.coeffs,
        "riemann": export.riemann,
        "error": export.error,
        "refinement_change": change,
        "symmetry_defect": export.symmetry_defect,
        "im_min_eigenvalue": export.im_min_eigenvalue,
        "normalization_defect": normalization,
    });
    Ok(Outcome { results, checks, ..Default::default() })
}

fn kernels(cfg: &JobConfig, cache: &PeriodCache) -> Result<Outcome> {
    let ctx = context(cfg, cache)?;
    let pts: Vec<SurfacePoint> = if cfg.points.is_empty() {
        ctx.generic_points(cfg.random_points.unwrap_or(3), cfg.seed)
    } else {
        cfg.points.iter().map(|p| p.resolve(&ctx.curve)).collect()
    };
    let err = kernel_error(&ctx);
    let mut checks = vec![Check::below("w_correction_symmetry", ctx.correction.symmetry_defect, bounds::W_SYMMETRY)];
    let mut point_rows = Vec::new();
    let mut framed_pts = Vec::new();
    for (i, p) in pts.iter().enumerate() {
        let (frame, cp) = framed(&ctx, p)?;
        let v = ctx.v(&cp);
        let (a, b) = ctx.w_periods(&cp)?;
        let a_max = max_norm(&a);
        let b_rel = b
            .iter()
            .zip(&v)
            .map(|(bj, vj)| (bj - vj * c64(0.0, 2.0 * PI)).norm() / (vj * 2.0 * PI).norm().max(1e-300))
            .fold(0.0, f64::max);
        checks.push(Check::below(format!("w_a_periods[{i}]"), a_max, bounds::W_A_PERIOD));
        checks.push(Check::below(format!("w_b_periods_relative[{i}]"), b_rel, bounds::W_B_PERIOD_REL));
        let sb = ctx.bergman_proj_connection(&frame)?;
        let ssch = ctx.schiffer_proj_connection(&frame)?;
        point_rows.push(json!({
            "point": point_json(p),
            "frame": "chart",
            "v": v,
            "w_a_periods": a,
            "w_b_periods": b,
            "w_a_period_max": a_max,
            "w_b_period_relative_error": b_rel,
            "bergman_projective_connection": sb,
            "schiffer_projective_connection": ssch,
            "error": err,
        }));
        framed_pts.push(cp);
    }
    let mut pair_rows = Vec::new();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let (p, q) = (&framed_pts[i], &framed_pts[j]);
            let (wpq, wqp) = (ctx.w(p, q)?, ctx.w(q, p)?);
            let sym = (wpq - wqp).norm() / wpq.norm().max(1.0);
            checks.push(Check::below(format!("w_symmetry[{i},{j}]"), sym, bounds::W_SYMMETRY));
            pair_rows.push(json!({
                "i": i,
                "j": j,
                "w": wpq,
                "w_swapped": wqp,
                "w_symmetry_defect": sym,
                "bergman": ctx.bergman_kernel(p, q),
                "schiffer": ctx.schiffer_kernel(p, q)?,
                "error": err,
            }));
        }
    }
    let results = json!({
        "genus": ctx.genus(),
        "scheme": ctx.basis.scheme,
        "correction": { "c": ctx.correction.c, "symmetry_defect": ctx.correction.symmetry_defect, "error": ctx.correction.error },
        "points": point_rows,
        "pairs": pair_rows,
    });
    Ok(Outcome { results, checks, ..Default::default() })
}

fn smatrix(cfg: &JobConfig, cache: &PeriodCache) -> Result<Outcome> {
    let ctx = context(cfg, cache)?;
    let d = divisor(cfg, &ctx)?;
    let threshold = cfg.rank_threshold.unwrap_or(DEFAULT_RANK_THRESHOLD);
    let s = s_zero(&d, &ctx)?;
    let b = bergman_matrix(&d, &ctx)?;
    let verdict = canonical_divisor_test(&b, threshold);
    let top = b.singular_values.first().copied().unwrap_or(0.0);
    let n = d.len();
    let scale = max_norm(s.s_aa.iter().flatten()).max(1.0);
    let saa_sym = (0..n).flat_map(|k| (0..n).map(move |j| (k, j))).map(|(k, j)| (s.s_aa[k][j] - s.s_aa[j][k]).norm()).fold(0.0, f64::max) / scale;
    let mut checks = vec![
        Check::below("bergman_hermitian_defect", b.hermitian_defect, bounds::HERMITIAN * top.max(1.0)),
        Check::above("bergman_min_eigenvalue", b.min_eigenvalue, -bounds::HERMITIAN * top.max(1.0)),
        Check::below("s_aa_symmetry", saa_sym, bounds::SAA_SYMMETRY),
    ];
    if matches!(d.holonomy, Holonomy::Trivial { .. }) {
        // zeros of a holomorphic form are canonical by construction
        checks.push(Check::below("omega_divisor_rank_margin", verdict.margin, threshold));
    } else if ctx.genus() == 2 {
        let oracle = genus2_canonical_oracle(&ctx.curve, &d.points[0], &d.points[1])?;
        checks.push(Check::holds("verdict_matches_oracle", oracle == verdict.canonical));
    }
    let err = kernel_error(&ctx);
    let results = json!({
        "divisor": divisor_json(&d),
        "blocks": {
            "s_aa": s.s_aa, "s_ah": s.s_ah, "s_hh": s.s_hh(), "s_ha": s.s_ha(),
            "error": err,
        },
        "bergman": {
            "matrix": b.matrix,
            "singular_values": b.singular_values,
            "min_eigenvalue": b.min_eigenvalue,
            "hermitian_defect": b.hermitian_defect,
            "error": ctx.periods.error,
        },
        "verdict": verdict,
        "numerical_rank": b.numerical_rank(threshold),
    });
    Ok(Outcome { results, checks, ..Default::default() })
}

fn require_genus_two(ctx: &KernelContext) -> Result<()> {
    if ctx.genus() != 2 {
        return Err(invalid("curve", format!("this command needs genus 2, the curve has genus {}", ctx.genus())));
    }
    Ok(())
}

/// Pair `k` of the seeded sample: even pairs are fibres `(P, sigma P)`,
/// odd pairs two independent generic points.
pub fn sample_pairs(ctx: &KernelContext, count: usize, seed: u64) -> Vec<(SurfacePoint, SurfacePoint)> {
    let pts = ctx.generic_points(2 * count, seed);
    (0..count)
        .map(|k| {
            let p = pts[2 * k];
            (p, if k % 2 == 0 { p.involution() } else { pts[2 * k + 1] })
        })
        .collect()
}

fn pair_verdict(ctx: &KernelContext, p1: &SurfacePoint, p2: &SurfacePoint, threshold: f64) -> Result<(bool, f64, bool)> {
    let c1 = framed(ctx, p1)?.1;
    let c2 = framed(ctx, p2)?.1;
    let b = crate::smatrix::bergman_matrix_at(&ctx.periods, &[c1, c2])?;
    let v = canonical_divisor_test(&b, threshold);
    Ok((v.canonical, v.margin, genus2_canonical_oracle(&ctx.curve, p1, p2)?))
}

fn canonical_test(cfg: &JobConfig, cache: &PeriodCache) -> Result<Outcome> {
    let ctx = context(cfg, cache)?;
    require_genus_two(&ctx)?;
    let threshold = cfg.rank_threshold.unwrap_or(DEFAULT_RANK_THRESHOLD);
    let mut pairs: Vec<(SurfacePoint, SurfacePoint)> = Vec::new();
    if let Some(o) = cfg.omega() {
        let d = ConicalDivisor::from_omega(&ctx.curve, &o, None).map_err(|e| invalid("omega", e.to_string()))?;
        pairs.push((d.points[0], d.points[1]));
    }
    match cfg.points.len() {
        0 => {}
        1 => {
            let p = cfg.points[0].resolve(&ctx.curve);
            pairs.push((p, p.involution()));
        }
        2 => pairs.push((cfg.points[0].resolve(&ctx.curve), cfg.points[1].resolve(&ctx.curve))),
        n => return Err(invalid("points", format!("canonical-test takes one or two points, got {n}"))),
    }
    let sampled = cfg.random_pairs.unwrap_or(0);
    pairs.extend(sample_pairs(&ctx, sampled, cfg.seed));
    if pairs.is_empty() && cfg.approach_steps.is_none() {
        return Err(invalid("points", "give points, omega, random_pairs or approach_steps"));
    }
    let mut rows = Vec::new();
    let mut agree = 0usize;
    for (p1, p2) in &pairs {
        let (canonical, margin, oracle) = pair_verdict(&ctx, p1, p2, threshold)?;
        agree += usize::from(canonical == oracle);
        rows.push(json!({
            "p1": point_json(p1), "p2": point_json(p2),
            "canonical": canonical, "margin": margin, "threshold": threshold, "oracle": oracle,
            "margin_error": ctx.periods.error,
        }));
    }
    let mut checks = Vec::new();
    if !pairs.is_empty() {
        checks.push(Check::equal("verdicts_agree_with_oracle", agree as f64, pairs.len() as f64));
    }
    let mut approach = Value::Null;
    if let Some(steps) = cfg.approach_steps {
        if steps < 2 {
            return Err(invalid("approach_steps", "need at least 2 steps"));
        }
        let (p1, x2) = match cfg.points.len() {
            2 => (cfg.points[0].resolve(&ctx.curve), cfg.points[1].resolve(&ctx.curve).x),
            _ => {
                let g = ctx.generic_points(2, cfg.seed ^ 0xa11ce);
                (g[0], approach_start(&ctx.curve, &g[0], g[1].x))
            }
        };
        let path = approach_margins(&ctx, &p1, x2, steps)?;
        let margins: Vec<f64> = path.iter().map(|(_, v)| v.margin).collect();
        let monotone = margins.windows(2).all(|w| w[1] < w[0]);
        checks.push(Check::holds("approach_margin_decreasing", monotone));
        checks.push(Check::below("approach_final_margin", *margins.last().unwrap_or(&f64::INFINITY), threshold));
        approach = json!({
            "p1": point_json(&p1),
            "start_x": x2,
            "points": path.iter().map(|(p, _)| point_json(p)).collect::<Vec<_>>(),
            "margins": margins,
            "threshold": threshold,
        });
    }
    let results = json!({ "pairs": rows, "agreements": agree, "total": pairs.len(), "approach": approach });
    Ok(Outcome { results, checks, ..Default::default() })
}

fn harmonic(cfg: &JobConfig, cache: &PeriodCache) -> Result<Outcome> {
    let ctx = context(cfg, cache)?;
    let d = divisor(cfg, &ctx)?;
    let hc = harmonic_check(&d, &ctx)?;
    let mut checks: Vec<Check> = hc
        .rows
        .iter()
        .map(|r| Check::below(format!("{:?}[{},{}]", r.coefficient, r.k, r.j).to_lowercase(), r.abs_diff, r.tolerance))
        .collect();
    let worst_real = hc.period_real_parts.iter().copied().fold(0.0, f64::max);
    checks.push(Check::below("harmonic_periods_imaginary", worst_real, bounds::PERIOD_REAL_PART));
    let results = json!({
        "divisor": divisor_json(&d),
        "table": hc.rows,
        "fits": hc.fits,
        "period_real_parts": hc.period_real_parts,
        "all_pass": hc.all_pass(),
    });
    Ok(Outcome { results, checks, ..Default::default() })
}

fn c2(cfg: &JobConfig, cache: &PeriodCache) -> Result<Outcome> {
    let ctx = context(cfg, cache)?;
    require_genus_two(&ctx)?;
    let omega = cfg.omega().ok_or_else(|| invalid("omega", "required by c2"))?;
    let d = ConicalDivisor::from_omega(&ctx.curve, &omega, None).map_err(|e| invalid("omega", e.to_string()))?;
    let est = c2_for_divisor(&ctx, &d, cfg.budget)?;
    // independent sampled check of the mesh and its weights
    let quad = build_quadrature(&ctx.curve, &omega, cfg.budget)?;
    let (mc, se) = quad.monte_carlo_area(&ctx.curve, cfg.seed, 4);
    let t = &est.t;
    let mut checks: Vec<Check> = est
        .fine
        .cal_h
        .residual_mean
        .iter()
        .enumerate()
        .map(|(k, r)| Check::below(format!("mean_of_cal_h[{k}]"), *r, bounds::MEAN_RESIDUAL))
        .collect();
    let area_rel = (est.area / est.area_from_periods - 1.0).abs();
    checks.extend([
        Check::below("t_prime_hermitian_defect", t.hermitian_defect, bounds::T_PRIME_REL),
        Check::above("t_prime_min_eigenvalue", t.min_eigenvalue, -bounds::T_PRIME_REL),
        Check::below("det_t0_relative", t.det_t0_relative, bounds::DET_T0_REL),
        Check::below("area_vs_periods", area_rel, bounds::AREA_REL),
        Check::below("area_monte_carlo_sigmas", (mc - est.area_from_periods).abs() / se.max(1e-300), 5.0),
        Check::below("c2_relative_error", est.relative_error(), bounds::C2_REL),
    ]);
    let results = json!({
        "C2": est.c2,
        "err": est.error,
        "C2_coarse": est.coarse_c2,
        "detT0": t.det_t0,
        "detT0_relative": t.det_t0_relative,
        "T": t.t0,
        "T_error": kernel_error(&ctx),
        "Tprime": t.t_prime,
        "Tprime_error": t.t_prime_error,
        "Tprime_hermitian_defect": t.hermitian_defect,
        "Tprime_min_eigenvalue": t.min_eigenvalue,
        "area": { "quadrature": est.area, "periods": est.area_from_periods, "monte_carlo": mc, "monte_carlo_error": se },
        "cal_h": { "means": est.fine.cal_h.means, "residual_mean": est.fine.cal_h.residual_mean, "norms": est.fine.cal_h.norms },
        "budget": { "fine": est.fine.budget, "coarse": est.coarse.budget, "nodes": est.fine.nodes, "field_error": est.fine.field_error },
        "divisor": divisor_json(&d),
    });
    Ok(Outcome { results, checks, ..Default::default() })
}

fn lattice(cfg: &JobConfig) -> Result<Outcome> {
    let spec = cfg.lattice.as_ref().ok_or_else(|| invalid("lattice", "required by this command"))?;
    let surface = cfg.surface()?;
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let mut attachments = Vec::new();
    let mut dstar_d = Vec::new();
    for &n in &spec.resolutions {
        let s = spectra(&surface, n)?;
        let stable = s.sweep.iter().all(|k| k.ker_d == s.ker_d && k.ker_dstar == s.ker_dstar);
        let log_scale = s.log_product_dstar_d.abs().max(1.0);
        checks.push(Check::below(format!("spectral_mismatch[n={n}]"), s.max_relative_mismatch, bounds::SPECTRAL_MISMATCH));
        checks.push(Check::below(format!("log_product_difference[n={n}]"), s.log_product_difference() / log_scale, bounds::LOG_PRODUCT_REL));
        checks.push(Check::equal(format!("index[n={n}]"), s.index as f64, s.cells_minus_vertices as f64));
        checks.push(Check::holds(format!("kernel_stable_under_sweep[n={n}]"), stable));
        let first: Vec<f64> = s.nonzero_dstar_d().iter().take(spec.eigenvalues).map(|x| 4.0 * x).collect();
        rows.push(json!({
            "n": n,
            "vertices": s.vertices,
            "cells": s.cells,
            "symmetry_order": s.symmetry_order,
            "blocks": s.blocks,
            "norm_sq": s.norm_sq,
            "kernel_threshold": s.threshold,
            "ker_d": s.ker_d,
            "ker_dstar": s.ker_dstar,
            "sweep": s.sweep,
            "index": s.index,
            "cells_minus_vertices": s.cells_minus_vertices,
            "max_relative_mismatch": s.max_relative_mismatch,
            "log_product_dstar_d": s.log_product_dstar_d,
            "log_product_d_dstar": s.log_product_d_dstar,
            "log_product_difference": s.log_product_difference(),
            "first_eigenvalues_4dstar_d": first,
        }));
        attachments.push((format!("n{n}.csv"), s.to_csv()));
        dstar_d.push((n, s.dstar_d));
    }
    let mut convergence = Value::Null;
    if dstar_d.len() >= 3 {
        let table = convergence_table(&dstar_d, spec.eigenvalues)?;
        for (k, t) in table.trends.iter().enumerate() {
            for (i, r) in t.ratios.iter().enumerate() {
                checks.push(Check::within(format!("error_ratio[eig={},step={}]", k + 1, i), *r, bounds::RATIO.0, bounds::RATIO.1));
            }
            checks.push(Check::holds(format!("monotone_convergence[eig={}]", k + 1), t.monotone));
        }
        convergence = serde_json::to_value(&table).map_err(|e| Error::Unsupported(e.to_string()))?;
    }
    let results = json!({
        "surface": {
            "h": surface.h.iter().map(|s| s + 1).collect::<Vec<_>>(),
            "v": surface.v.iter().map(|s| s + 1).collect::<Vec<_>>(),
            "squares": surface.squares(),
            "genus": surface.genus,
            "euler_characteristic": surface.euler_characteristic(),
            "cone_points": surface.cone_points().iter().map(|c| json!({ "angle_over_pi": c.angle() / PI, "corners": c.corners.len() })).collect::<Vec<_>>(),
        },
        "resolutions": rows,
        "convergence": convergence,
    });
    Ok(Outcome { results, checks, attachments })
}
