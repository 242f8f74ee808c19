use thiserror::Error;

/// A spec field failed validation. Carries enough context to tell the user
/// which field and what was expected.
#[derive(Debug, Clone, Error)]
#[error("{field}: expected {requirement}, got {value}")]
pub struct SpecError {
    pub field: &'static str,
    pub requirement: &'static str,
    pub value: f64,
}

impl SpecError {
    pub fn new(field: &'static str, requirement: &'static str, value: f64) -> Self {
        Self {
            field,
            requirement,
            value,
        }
    }
}

/// Failures of the quasi-static contact equilibrium solve.
#[derive(Debug, Clone, Error)]
pub enum SolveError {
    /// The queried configuration has the surface separated from the stylus.
    #[error("no contact: the stylus does not touch the surface in this configuration")]
    NoContact,
    #[error(
        "equilibrium iteration did not converge after {iterations} iterations \
         (last residual {last_residual:.3e} N)"
    )]
    NonConvergence {
        iterations: usize,
        last_residual: f64,
    },
    #[error(
        "required rotation exceeds the modeled range (theta close to pi/2) at z_act = {z_act:.6e} m"
    )]
    RotationRange { z_act: f64 },
    #[error(
        "surface contact point falls inboard of the beam tip (s = {s:.3e} m < 0); \
         placement is too close to the tip for the rigid-mass surface model"
    )]
    ContactInboard { s: f64 },
    #[error("z grid must start at 0 and be strictly increasing (violated at index {index})")]
    BadGrid { index: usize },
    #[error(transparent)]
    Spec(#[from] SpecError),
}

/// Failures of the virtual instrument layer.
#[derive(Debug, Clone, Error)]
pub enum InstrumentError {
    #[error("load cell saturated: |{value:.4e}| N exceeds range_max = {range_max:.4e} N")]
    Saturated { value: f64, range_max: f64 },
    #[error(
        "deflection partition did not converge after {iterations} iterations \
         (last bracket width {last_step:.3e} m)"
    )]
    PartitionNonConvergence { iterations: usize, last_step: f64 },
    #[error("instrument has no apparatus spring configured")]
    NoApparatus,
    #[error("measurement step {step} (z_cmd = {z_cmd:.6e} m): {source}")]
    AtStep {
        step: usize,
        z_cmd: f64,
        source: Box<InstrumentError>,
    },
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

impl InstrumentError {
    pub fn at_step(self, step: usize, z_cmd: f64) -> Self {
        InstrumentError::AtStep {
            step,
            z_cmd,
            source: Box::new(self),
        }
    }
}

/// Failures of trace analysis.
#[derive(Debug, Clone, Error)]
pub enum AnalysisError {
    #[error("trace is empty")]
    EmptyTrace,
    #[error("trace z values must be strictly increasing (index {index})")]
    NonMonotonicZ { index: usize },
    #[error("trace contains a non-finite value (index {index})")]
    NonFinite { index: usize },
    #[error("stiffness fit needs at least 3 points in the window, found {found}")]
    TooFewPoints { found: usize },
    #[error("z values in the fit window are degenerate (spread {spread:.3e} m)")]
    DegenerateZ { spread: f64 },
    #[error("trace too short to segment ({len} points, need at least {min})")]
    TraceTooShort { len: usize, min: usize },
    #[error("calibration bias must be greater than -1, got {bias}")]
    BadBias { bias: f64 },
    #[error(
        "corrected stiffness undefined: measured {k_meas} N/m is not strictly below \
         the apparatus stiffness {k_app} N/m"
    )]
    ComplianceOrder { k_meas: f64, k_app: f64 },
    #[error("need at least 2 traces to compare, got {n}")]
    TooFewTraces { n: usize },
    #[error(
        "traces overlap over less than half of each z range \
         (worst case {worst_percent:.1}% of a trace's span)"
    )]
    InsufficientOverlap { worst_percent: f64 },
    #[error("no span where all compared traces are in surface contact")]
    NoCommonSurfaceSpan,
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Failures reading or writing the on-disk trace format.
#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line 1: expected version header \"# stylus-trace v1\"")]
    Header,
    #[error("line 2: expected \"# meta: {{...}}\": {reason}")]
    Meta { reason: String },
    #[error("line {line}: {reason}")]
    Row { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
