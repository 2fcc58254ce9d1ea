use thiserror::Error;

/// Errors surfaced by the geometry kernel and solvers.
#[derive(Debug, Error)]
pub enum HcatError {
    #[error("invalid point: y = {y} is not positive")]
    InvalidPoint { y: f64 },
    #[error("point maps outside the chart ({context})")]
    OutOfChart { context: String },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("profile integration hit a singularity near u = {u}")]
    SingularProfile { u: f64 },
    #[error("graph extraction failed at (r, gamma) = ({r}, {gamma}): {reason}")]
    Extraction { r: f64, gamma: f64, reason: String },
    #[error("Riccati flow blew up before t = {t_critical}")]
    FiniteTimeBlowup { t_critical: f64 },
    #[error("comparison solution breaks down at t = {t}")]
    ComparisonBreakdown { t: f64 },
    #[error("offset leaves the tubular neighbourhood: |w| = {w} >= {radius}")]
    OutOfTube { w: f64, radius: f64 },
    #[error("degenerate induced metric at node ({i}, {j})")]
    DegenerateMetric { i: usize, j: usize },
    #[error("spectral accuracy insufficient: {0}")]
    SpectralAccuracy(String),
    #[error("boundary data violates the reflection symmetry (deviation {deviation:.3e})")]
    SymmetryViolation { deviation: f64 },
    #[error("boundary data has low-mode content (norm {norm:.3e})")]
    LowModeContent { norm: f64 },
    #[error("weight mismatch: {0}")]
    WeightError(String),
    #[error("indicial root collides with an integer weight mu = {mu}")]
    IndicialRootCollision { mu: f64 },
    #[error("fixed-point iteration failed to contract: {0}")]
    NoContraction(String),
    #[error("Newton iteration failed to converge: {0}")]
    NonConvergence(String),
    #[error("positive graph requirement violated: g = {g} at ({x}, {z})")]
    NonPositiveGraph { g: f64, x: f64, z: f64 },
    #[error("complex principal curvatures: discriminant = {discriminant}")]
    ComplexCurvature { discriminant: f64 },
    #[error("numerical linear algebra failure: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, HcatError>;
