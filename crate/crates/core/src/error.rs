//! Crate-wide error type. Variants name the failure, not the caller.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input point cloud spans fewer than three dimensions.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// Body fails the positive-inradius test relative to its circumradius.
    #[error("degenerate body: inradius {inradius:.3e} below threshold {threshold:.3e}")]
    Degenerate { inradius: f64, threshold: f64 },

    /// Ray from the body center failed to exit through any facet.
    #[error("no ray-facet intersection for direction ({0:.6}, {1:.6}, {2:.6})")]
    NoIntersection(f64, f64, f64),

    /// Quadrature cannot integrate products of the requested harmonic degree.
    #[error("quadrature too coarse: {nodes} polar nodes cannot resolve degree {degree}")]
    QuadratureTooCoarse { nodes: usize, degree: usize },

    /// Subdivision level outside the supported range.
    #[error("subdivision level {0} exceeds maximum {1}")]
    LevelTooLarge(usize, usize),

    /// Triangle inequality margin below the relative floor.
    #[error("degenerate triangle {tri}: relative margin {margin:.3e}")]
    DegenerateTriangle { tri: usize, margin: f64 },

    /// Local least-squares stencil is numerically rank deficient.
    #[error("ill-conditioned stencil at vertex {vertex}: condition {condition:.3e}")]
    IllConditionedStencil { vertex: usize, condition: f64 },

    /// A flow step produced an invalid metric and was rolled back.
    #[error("step rejected at t = {time:.6e}: triangle margin {margin:.3e}")]
    StepRejected { time: f64, margin: f64 },

    /// Flow was asked to continue past total collapse.
    #[error("extinction reached at t = {0:.6e}")]
    ExtinctionReached(f64),

    /// Step halving hit its budget without producing an admissible step.
    #[error("flow stalled at t = {time:.6e} after {halvings} halvings")]
    StallDetected { time: f64, halvings: u32 },

    /// Planar unfolding recursion exceeded its depth budget.
    #[error("unfolding depth {0} exceeded")]
    UnfoldingDepthExceeded(usize),

    /// Facet-sequence search exhausted its budget without a valid path.
    #[error("search budget exceeded: {0}")]
    BudgetExceeded(String),

    /// Trace or checkpoint lacks the distance panel a check needs.
    #[error("missing panel: {0}")]
    MissingPanel(String),

    /// Family of runs does not form the schedule a check expects.
    #[error("schedule mismatch: {0}")]
    ScheduleMismatch(String),

    /// Vertex matching between two runs is not a bijection.
    #[error("correspondence ambiguous: {0}")]
    CorrespondenceAmbiguous(String),

    /// Artifact was produced under a different configuration hash.
    #[error("artifact mismatch: {path} carries config {found}, expected {expected}")]
    ArtifactMismatch {
        path: String,
        found: String,
        expected: String,
    },

    /// Malformed artifact or configuration text.
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    /// Invalid configuration value.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn parse(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}
