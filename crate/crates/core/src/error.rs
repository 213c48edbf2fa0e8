use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(&'static str),
    #[error("zero of J_{order} #{index} did not converge within {iterations} Newton steps")]
    ZeroNotConverged {
        order: u32,
        index: usize,
        iterations: usize,
    },
    #[error("tolerance {requested:e} unreachable within the mode budget (achieved tail bound {achieved:e})")]
    ModeBudgetExceeded { requested: f64, achieved: f64 },
    #[error("invalid mesh parameters: {0}")]
    InvalidMesh(&'static str),
    #[error("point (r={r}, theta={theta}) lies outside the open unit disc")]
    OutOfDomain { r: f64, theta: f64 },
    #[error("source lies on the boundary ring; flux data would be singular")]
    SourceOnBoundary,
    #[error("source lies within {distance:e} of an element edge; perturb it off the edge before differentiating the load")]
    NearElementEdge { distance: f64 },
    #[error("factorization failed: non-positive pivot {pivot:e} at row {row}")]
    Factorization { row: usize, pivot: f64 },
    #[error("linear solve did not reach relative residual {tolerance:e} in {iterations} iterations")]
    SolveNotConverged { tolerance: f64, iterations: usize },
    #[error("invalid objective: {0}")]
    InvalidObjective(&'static str),
    #[error("invalid descent configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("candidate (r={r}) outside the clamp interval [{lo}, {hi}]")]
    OutsideClamp { r: f64, lo: f64, hi: f64 },
    #[error("data does not match the objective: {0}")]
    DataMismatch(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
