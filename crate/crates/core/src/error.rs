use thiserror::Error;

/// Failure modes shared by every stage of the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point outside chart domain: {0}")]
    Domain(String),
    #[error("invalid model configuration: {0}")]
    ModelConfig(String),
    #[error("operation not supported for this ambient model: {0}")]
    UnsupportedModel(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid mesh: {0}")]
    Mesh(String),
    #[error("surface is not Lagrangian: residual {residual:.3e} at vertex {vertex} exceeds {tolerance:.1e}")]
    NotLagrangian { vertex: usize, residual: f64, tolerance: f64 },
    #[error("form degree error: {0}")]
    Degree(String),
    #[error("cycle error: {0}")]
    Cycle(String),
    #[error("solver did not converge: {message} (relative residual {residual:.3e})")]
    Numerical { message: String, residual: f64 },
    #[error("mesh too coarse: {0}")]
    Refinement(String),
    #[error("unresolved mesh: edge {edge} has connection angle {angle:.4} >= pi/2, refine the mesh")]
    UnresolvedMesh { edge: usize, angle: f64 },
    #[error("period of cycle {cycle} is within the half-integer margin (fractional part {fraction:.4} of 2pi)")]
    HalfIntegerBoundary { cycle: usize, fraction: f64 },
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("step rejected: Lagrangian residual {residual:.3e} exceeded {limit:.3e}; try step {suggested:.3e}")]
    StepRejected { residual: f64, limit: f64, suggested: f64 },
    #[error("zero of Im theta too close to a vertex on cycle {0}")]
    DegenerateZeroSet(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
