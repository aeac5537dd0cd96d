use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("defining polynomial has degree {0}; genus >= 2 needs degree >= 5")]
    DegreeTooLow(usize),
    #[error("defining polynomial has a repeated root near {0}")]
    RepeatedRoot(String),
    #[error("root finding for the defining polynomial failed")]
    RootFindingFailed,
    #[error("path vertex or segment comes within tolerance of branch point {0}")]
    PathHitsBranchPoint(String),
    #[error("y value {y} does not satisfy y^2 = f(x) at x = {x}")]
    NotOnCurve { x: String, y: String },
    #[error("adaptive quadrature did not reach tolerance (estimated error {estimate:e})")]
    ToleranceNotReached { estimate: f64 },
    #[error("a-period matrix is singular (condition number {0:e})")]
    SingularPeriodMatrix(f64),
    #[error("cycle does not close on its starting sheet")]
    CycleNotClosed,
    #[error("period matrix failed a consistency check: {0}")]
    PeriodCheckFailed(String),
    #[error("points coincide")]
    CoincidentPoints,
    #[error("points are numerically too close for a reliable kernel value")]
    NumericallyDegenerate,
    #[error("probe points for the normalization are degenerate")]
    ProbePointsDegenerate,
    #[error("Richardson extrapolation unstable: {0:e} vs {1:e}")]
    ExtrapolationUnstable(f64, f64),
    #[error("point is not a simple zero of the one-form")]
    NotASimpleZero,
    #[error("operation needs genus 2, curve has genus {0}")]
    GenusNotTwo(usize),
    #[error("divisor is not the zero set of the supplied one-form: {0}")]
    DivisorNotCanonical(String),
    #[error("divisor is invalid: {0}")]
    InvalidDivisor(String),
    #[error("periods of the harmonic differentials are not imaginary (max real part {0:e})")]
    PeriodsNotImaginary(f64),
    #[error("integration path passes through a singular point")]
    PathThroughSingularity,
    #[error("expansion fit residual {residual:e} exceeds {tolerance:e}")]
    FitResidualTooLarge { residual: f64, tolerance: f64 },
    #[error("quadrature budget exhausted: {0}")]
    BudgetExhausted(String),
    #[error("square-tiled surface is not connected")]
    NotConnected,
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("grid resolution {0} is below the minimum of 4")]
    ResolutionTooLow(usize),
    #[error("eigensolver failed: {0}")]
    EigensolverFailure(String),
    #[error("unsupported input: {0}")]
    Unsupported(String),
    #[error("invalid configuration at {path}: {message}")]
    ConfigInvalid { path: String, message: String },
    #[error("kernel evaluation failed for pair ({k}, {j}): {source}")]
    PairFailed {
        k: usize,
        j: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
