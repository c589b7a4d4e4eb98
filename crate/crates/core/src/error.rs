use thiserror::Error;

/// Errors raised by the geometry, flow and verification routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("metric is not positive definite at {point:?} (smallest eigenvalue {min_eigenvalue:e})")]
    DegenerateMetric {
        point: Vec<f64>,
        min_eigenvalue: f64,
    },

    #[error("vectors span a degenerate plane (|X^Y|^2 = {wedge_sq:e})")]
    DegeneratePlane { wedge_sq: f64 },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("tube radius {requested} exceeds the largest radius {max_admissible:.6} on which the chart is positive definite")]
    TubeTooLarge { requested: f64, max_admissible: f64 },

    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("orbit left the chart domain at time {0:.6}")]
    DomainExit(f64),
}

pub type Result<T, E = GeometryError> = std::result::Result<T, E>;
