//! Job configuration: JSON schema, flag overrides and validation.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::curve::{c64, quintic_test_curve, sextic_test_curve, BasisScheme, CurveSpec, HyperellipticCurve, SurfacePoint, Tolerances};
use crate::error::{Error, Result};
use crate::integrals::QuadratureBudget;
use crate::lattice::SquareTiledSurface;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Periods,
    Kernels,
    Smatrix,
    CanonicalTest,
    HarmonicCheck,
    C2,
    Lattice,
    Suite,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Periods => "periods",
            Command::Kernels => "kernels",
            Command::Smatrix => "smatrix",
            Command::CanonicalTest => "canonical-test",
            Command::HarmonicCheck => "harmonic-check",
            Command::C2 => "c2",
            Command::Lattice => "lattice",
            Command::Suite => "suite",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteKind {
    Quick,
    Full,
}

/// A point on the curve. `y` is derived from `sheet` (`+1` for the principal
/// square root) when absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    pub x: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sheet: Option<i8>,
}

impl PointSpec {
    pub fn resolve(&self, curve: &HyperellipticCurve) -> SurfacePoint {
        let x = c64(self.x[0], self.x[1]);
        let y = match self.y {
            Some(y) => c64(y[0], y[1]),
            None => curve.y_principal(x) * f64::from(self.sheet.unwrap_or(1)),
        };
        SurfacePoint::finite(x, y)
    }

    pub fn from_point(p: &SurfacePoint) -> Self {
        PointSpec { x: [p.x.re, p.x.im], y: Some([p.y.re, p.y.im]), sheet: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    /// Horizontal and vertical gluing permutations in 1-based cycle notation.
    pub h: String,
    pub v: String,
    #[serde(default = "default_resolutions")]
    pub resolutions: Vec<usize>,
    /// Nonzero eigenvalues followed in the convergence table.
    #[serde(default = "default_tracked")]
    pub eigenvalues: usize,
}

fn default_resolutions() -> Vec<usize> {
    vec![8, 16, 32]
}

fn default_tracked() -> usize {
    5
}

/// One job. Every field is optional in JSON; each command checks for what it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    /// `{"f": [[re, im], ...]}` with the constant term first, or one of
    /// `"quintic"` (`x^5 - x`) and `"sextic"` (`x^6 - 1`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<CurveInput>,
    #[serde(default)]
    pub scheme: BasisScheme,
    /// Coefficients of `omega = o(x) dx / y`, constant term first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<Vec<[f64; 2]>>,
    /// Divisor or evaluation points; chart frames are used at these.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<PointSpec>,
    /// Seeded random points for `kernels` when `points` is empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_points: Option<usize>,
    /// Seeded random pairs for `canonical-test`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_pairs: Option<usize>,
    /// Steps of the approach path `P2 -> sigma(P1)` for `canonical-test`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub approach_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_threshold: Option<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Multiplies every entry of `tolerances`.
    #[serde(default = "one")]
    pub tolerance_scale: f64,
    #[serde(default)]
    pub budget: QuadratureBudget,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<SuiteKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}

impl Default for JobConfig {
    fn default() -> Self {
        JobConfig {
            command: None,
            curve: None,
            scheme: BasisScheme::default(),
            omega: None,
            points: Vec::new(),
            random_points: None,
            random_pairs: None,
            approach_steps: None,
            rank_threshold: None,
            tolerances: Tolerances::default(),
            tolerance_scale: 1.0,
            budget: QuadratureBudget::default(),
            seed: 0,
            lattice: None,
            suite: None,
            out: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CurveInput {
    Named(String),
    Spec(CurveSpec),
}

impl CurveInput {
    pub fn spec(&self) -> Result<CurveSpec> {
        match self {
            CurveInput::Spec(s) => Ok(s.clone()),
            CurveInput::Named(n) => match n.as_str() {
                "quintic" => Ok(quintic_test_curve()),
                "sextic" => Ok(sextic_test_curve()),
                other => Err(invalid("curve", format!("unknown curve name {other:?}; use \"quintic\", \"sextic\" or {{\"f\": [...]}}"))),
            },
        }
    }
}

pub fn invalid(path: &str, message: impl Into<String>) -> Error {
    Error::ConfigInvalid { path: path.to_string(), message: message.into() }
}

impl JobConfig {
    /// Parse JSON, reporting the offending field path on failure.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            invalid(if path.is_empty() || path == "." { "$" } else { &path }, e.into_inner().to_string())
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid("--config", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Tolerances actually used, after scaling.
    pub fn effective_tolerances(&self) -> Tolerances {
        self.tolerances.scaled(self.tolerance_scale)
    }

    pub fn curve(&self) -> Result<HyperellipticCurve> {
        let input = self.curve.as_ref().ok_or_else(|| invalid("curve", "required by this command"))?;
        input.spec()?.build(self.effective_tolerances()).map_err(|e| invalid("curve", e.to_string()))
    }

    pub fn omega(&self) -> Option<Vec<Complex64>> {
        self.omega.as_ref().map(|o| o.iter().map(|c| c64(c[0], c[1])).collect())
    }

    pub fn surface(&self) -> Result<SquareTiledSurface> {
        let l = self.lattice.as_ref().ok_or_else(|| invalid("lattice", "required by this command"))?;
        SquareTiledSurface::from_cycles(&l.h, &l.v).map_err(|e| invalid("lattice", e.to_string()))
    }

    /// Schema-level checks that do not need any numerics beyond building the curve.
    pub fn validate(&self, command: Command) -> Result<()> {
        let t = &self.tolerances;
        for (name, v) in [("period", t.period), ("root", t.root), ("separation", t.separation)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(&format!("tolerances.{name}"), "must be positive"));
            }
        }
        if !(self.tolerance_scale > 0.0 && self.tolerance_scale.is_finite()) {
            return Err(invalid("tolerance_scale", "must be positive"));
        }
        if let Some(r) = self.rank_threshold {
            if !(r > 0.0 && r < 1.0) {
                return Err(invalid("rank_threshold", "must lie in (0, 1)"));
            }
        }
        if self.budget.order == 0 || self.budget.order > 64 {
            return Err(invalid("budget.order", "must lie in 1..=64"));
        }
        if self.budget.max_cells == 0 {
            return Err(invalid("budget.max_cells", "must be positive"));
        }
        if self.budget.level > 12 {
            return Err(invalid("budget.level", "must be at most 12"));
        }
        for (i, p) in self.points.iter().enumerate() {
            let finite = p.x.iter().chain(p.y.iter().flatten()).all(|v| v.is_finite());
            if !finite {
                return Err(invalid(&format!("points[{i}]"), "coordinates must be finite"));
            }
            if let Some(s) = p.sheet {
                if s != 1 && s != -1 {
                    return Err(invalid(&format!("points[{i}].sheet"), "must be 1 or -1"));
                }
            }
            if p.y.is_some() && p.sheet.is_some() {
                return Err(invalid(&format!("points[{i}]"), "give either y or sheet, not both"));
            }
        }
        if let Some(o) = &self.omega {
            if o.iter().flatten().any(|v| !v.is_finite()) {
                return Err(invalid("omega", "coefficients must be finite"));
            }
            if o.iter().all(|c| c[0] == 0.0 && c[1] == 0.0) {
                return Err(invalid("omega", "must not vanish identically"));
            }
        }
        match command {
            Command::Lattice => {
                let l = self.lattice.as_ref().ok_or_else(|| invalid("lattice", "required by this command"))?;
                if l.resolutions.is_empty() {
                    return Err(invalid("lattice.resolutions", "must not be empty"));
                }
                if let Some(n) = l.resolutions.iter().find(|&&n| n < 4) {
                    return Err(invalid("lattice.resolutions", format!("resolution {n} is below the minimum of 4")));
                }
                self.surface()?;
            }
            Command::Suite => {}
            _ => {
                let curve = self.curve()?;
                let g = curve.genus();
                if let Some(o) = &self.omega {
                    if o.len() > g {
                        return Err(invalid("omega", format!("at most {g} coefficients for genus {g}")));
                    }
                }
                for (i, p) in self.points.iter().enumerate() {
                    let sp = p.resolve(&curve);
                    curve.check_point(&sp).map_err(|e| invalid(&format!("points[{i}]"), e.to_string()))?;
                }
            }
        }
        Ok(())
    }
}

/// `"L,O"` or `"L,O,MAX"`.
pub fn parse_budget(s: &str) -> Result<QuadratureBudget> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |i: usize| parts[i].parse::<usize>().map_err(|e| invalid("--budget", format!("{:?}: {e}", parts[i])));
    match parts.len() {
        2 => Ok(QuadratureBudget { level: num(0)?, order: num(1)?, ..Default::default() }),
        3 => Ok(QuadratureBudget { level: num(0)?, order: num(1)?, max_cells: num(2)? }),
        _ => Err(invalid("--budget", "expected LEVEL,ORDER or LEVEL,ORDER,MAX_CELLS")),
    }
}
